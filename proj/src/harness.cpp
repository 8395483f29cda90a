#include "vvs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "vvs/scheduler.hpp"

namespace vvs {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::RejectedInput, "invalid value '" + value + "' for " + key);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (value.empty() || value[0] == '-' || value[0] == '+') bad_value(key, value);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end == value.c_str() || *end != '\0') bad_value(key, value);
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  if (value.empty()) bad_value(key, value);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (errno != 0 || end == value.c_str() || *end != '\0' || !std::isfinite(v)) {
    bad_value(key, value);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

int parse_offset(const std::string& key, const std::string& value) {
  if (value == "fresh" || value == "-1") return kFreshFeatures;
  return static_cast<int>(parse_uint(key, value));
}

std::string offset_text(int s) { return s == kFreshFeatures ? "fresh" : std::to_string(s); }

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Short form for cell labels; CSV metric columns keep full precision.
std::string label(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

using Setter = std::function<void(EngineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"vocab", [](EngineConfig& c, const std::string& k, const std::string& v) { c.vocab = parse_uint(k, v); }},
      {"dim", [](EngineConfig& c, const std::string& k, const std::string& v) { c.dim = parse_uint(k, v); }},
      {"window", [](EngineConfig& c, const std::string& k, const std::string& v) { c.window = parse_uint(k, v); }},
      {"temperature", [](EngineConfig& c, const std::string& k, const std::string& v) { c.temperature = parse_double(k, v); }},
      {"epsilon", [](EngineConfig& c, const std::string& k, const std::string& v) { c.epsilon = parse_double(k, v); }},
      {"draft_temperature", [](EngineConfig& c, const std::string& k, const std::string& v) { c.draft_temperature = parse_double(k, v); }},
      {"cluster_size", [](EngineConfig& c, const std::string& k, const std::string& v) { c.cluster_size = parse_uint(k, v); }},
      {"cluster_spread", [](EngineConfig& c, const std::string& k, const std::string& v) { c.cluster_spread = parse_double(k, v); }},
      {"branching", [](EngineConfig& c, const std::string& k, const std::string& v) { c.branching = parse_uint(k, v); }},
      {"depth", [](EngineConfig& c, const std::string& k, const std::string& v) { c.depth = parse_uint(k, v); }},
      {"budget", [](EngineConfig& c, const std::string& k, const std::string& v) { c.budget = parse_uint(k, v); }},
      {"verify", [](EngineConfig& c, const std::string& k, const std::string& v) {
         if (v == "strict") c.verify.kind = VerifyKind::Strict;
         else if (v == "relaxed") c.verify.kind = VerifyKind::Relaxed;
         else bad_value(k, v);
       }},
      {"delta", [](EngineConfig& c, const std::string& k, const std::string& v) { c.verify.relax.delta = parse_double(k, v); }},
      {"pool", [](EngineConfig& c, const std::string& k, const std::string& v) { c.verify.relax.pool = parse_uint(k, v); }},
      {"skip", [](EngineConfig& c, const std::string& k, const std::string& v) {
         if (v == "never") c.skip.kind = SkipKind::Never;
         else if (v == "uniform") c.skip.kind = SkipKind::Uniform;
         else if (v == "dynamic") c.skip.kind = SkipKind::Dynamic;
         else bad_value(k, v);
       }},
      {"interval", [](EngineConfig& c, const std::string& k, const std::string& v) { c.skip.interval = parse_uint(k, v); }},
      {"threshold", [](EngineConfig& c, const std::string& k, const std::string& v) { c.skip.threshold = parse_double(k, v); }},
      {"alpha", [](EngineConfig& c, const std::string& k, const std::string& v) { c.skip.alpha = parse_double(k, v); }},
      {"stride", [](EngineConfig& c, const std::string& k, const std::string& v) { c.skip.stride = parse_uint(k, v); }},
      {"selection", [](EngineConfig& c, const std::string& k, const std::string& v) {
         if (v == "uniform") c.selection.strategy = SelectionStrategy::Uniform;
         else if (v == "max_confidence") c.selection.strategy = SelectionStrategy::MaxConfidence;
         else bad_value(k, v);
       }},
      {"truncate", [](EngineConfig& c, const std::string& k, const std::string& v) { c.selection.truncate = parse_bool(k, v); }},
      {"max_length", [](EngineConfig& c, const std::string& k, const std::string& v) { c.max_length = parse_uint(k, v); }},
      {"seed", [](EngineConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); }},
      {"model_seed", [](EngineConfig& c, const std::string& k, const std::string& v) { c.model_seed = parse_uint(k, v); }},
  };
  return table;
}

enum class RunKind { Vanilla, Sd, Vvs };

struct Cell {
  std::string params;
  EngineConfig config;
  RunKind kind = RunKind::Vvs;
  RunOptions options;
  bool want_ratio = false;
};

std::string_view kind_name(RunKind k) {
  switch (k) {
    case RunKind::Vanilla: return "vanilla";
    case RunKind::Sd: return "sd";
    case RunKind::Vvs: return "vvs";
  }
  return "unknown";
}

RunKind parse_pipeline(const std::string& v) {
  if (v == "vanilla") return RunKind::Vanilla;
  if (v == "sd") return RunKind::Sd;
  if (v == "vvs") return RunKind::Vvs;
  bad_value("pipeline", v);
}

std::string join_params(const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + ";" + b;
}

// Cartesian product of the sweep axes, first axis slowest.
std::vector<std::pair<std::string, EngineConfig>> axis_cells(const ExperimentSpec& spec) {
  std::vector<std::pair<std::string, EngineConfig>> out{{"", spec.base}};
  for (const auto& axis : spec.axes) {
    std::vector<std::pair<std::string, EngineConfig>> next;
    for (const auto& [params, config] : out) {
      for (const auto& v : axis.values) {
        EngineConfig c = config;
        set_config_param(c, axis.param, v);
        next.emplace_back(join_params(params, axis.param + "=" + v), c);
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<Cell> build_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (const auto& [axis_params, config] : axis_cells(spec)) {
    auto add = [&](std::string params, EngineConfig c, RunKind kind, RunOptions options,
                   bool ratio) {
      cells.push_back({join_params(axis_params, params), std::move(c), kind, std::move(options),
                       ratio});
    };
    if (spec.experiment == "grid") {
      add("", config, parse_pipeline(spec.pipeline), {}, false);
    } else if (spec.experiment == "staleness") {
      for (int s : spec.offsets) {
        RunOptions o;
        o.feature_offsets = {s};
        add("offset=" + offset_text(s), config, RunKind::Sd, o, true);
      }
    } else if (spec.experiment == "blending") {
      for (const auto& [s1, s2] : spec.pairs) {
        RunOptions o;
        o.feature_offsets = {s1, s2};
        add("pair=" + offset_text(s1) + ":" + offset_text(s2), config, RunKind::Sd, o, true);
      }
    } else if (spec.experiment == "pareto") {
      for (double d : spec.deltas) {
        EngineConfig c = config;
        c.verify = VerifyMode::relaxed(d, config.verify.relax.pool);
        c.skip = SkipRule::never();
        add("family=relaxed;delta=" + label(d), c, RunKind::Sd, {}, false);
      }
      for (double d : spec.fixed_deltas) {
        for (std::size_t i : spec.intervals) {
          EngineConfig c = config;
          c.verify = VerifyMode::relaxed(d, config.verify.relax.pool);
          c.skip = SkipRule::uniform(i);
          add("family=vvs-u;delta=" + label(d) + ";interval=" + std::to_string(i), c, RunKind::Vvs,
              {}, false);
        }
        for (double t : spec.thresholds) {
          EngineConfig c = config;
          c.verify = VerifyMode::relaxed(d, config.verify.relax.pool);
          c.skip = SkipRule::dynamic(t, config.skip.alpha, config.skip.stride);
          add("family=vvs-d;delta=" + label(d) + ";threshold=" + label(t), c, RunKind::Vvs, {},
              false);
        }
      }
    } else if (spec.experiment == "replace") {
      for (double r : spec.ratios) {
        RunOptions o;
        o.replace_ratio = r;
        add("ratio=" + label(r), config, RunKind::Sd, o, false);
      }
    } else {
      fail(ErrorCode::RejectedInput, "experiment '" + spec.experiment + "' produces no result rows");
    }
  }
  return cells;
}

ResultRow run_cell(const ExperimentSpec& spec, const Cell& cell, std::size_t index,
                   std::size_t rep) {
  EngineConfig config = cell.config;
  config.seed = rep_seed(cell.config.seed, rep);
  config.model_seed = rep_model_seed(cell.config.model_seed, rep);

  ResultRow row;
  row.spec = spec.name;
  row.experiment = spec.experiment;
  row.cell = index;
  row.rep = rep;
  row.params = cell.params;
  row.pipeline = std::string(kind_name(cell.kind));
  row.seed = config.seed;
  row.model_seed = config.model_seed;
  try {
    Engine engine(config);
    GenerationTrace trace;
    switch (cell.kind) {
      case RunKind::Vanilla: trace = engine.vanilla_ar(); break;
      case RunKind::Sd: trace = engine.speculative_decode(cell.options); break;
      case RunKind::Vvs: trace = engine.vvs_generate(cell.options); break;
    }
    row.counters = trace.counters;
    row.iterations = trace.iterations.size();
    row.metrics = engine.metrics(trace);
    if (cell.want_ratio) {
      const auto fresh = engine.metrics(engine.speculative_decode());
      row.mal_ratio = row.metrics.mal / fresh.mal;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CacheUnderflow) throw;
    row.note = std::string("skipped: ") + e.what();
  }
  return row;
}

void require_nonempty(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::RejectedInput, std::string("spec: ") + what + " must be nonempty");
}

}  // namespace

void set_config_param(EngineConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) fail(ErrorCode::RejectedInput, "unknown config parameter '" + key + "'");
  it->second(config, key, value);
}

bool is_config_param(const std::string& key) { return setters().count(key) > 0; }

std::vector<std::string> config_param_names() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

void ExperimentSpec::validate() const {
  static const std::vector<std::string> kinds = {"grid",    "staleness",  "blending", "pareto",
                                                 "replace", "similarity", "features", "cache"};
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) {
    fail(ErrorCode::RejectedInput, "spec: unknown experiment '" + experiment + "'");
  }
  if (repetitions < 1) fail(ErrorCode::RejectedInput, "spec: repetitions must be >= 1");
  parse_pipeline(pipeline);
  for (const auto& axis : axes) {
    if (!is_config_param(axis.param)) {
      fail(ErrorCode::RejectedInput, "spec: unknown sweep parameter '" + axis.param + "'");
    }
    require_nonempty(!axis.values.empty(), "sweep value list");
  }
  base.validate();
  if (experiment == "staleness") require_nonempty(!offsets.empty(), "offsets");
  if (experiment == "blending") require_nonempty(!pairs.empty(), "pairs");
  if (experiment == "pareto") {
    require_nonempty(!deltas.empty(), "deltas");
    require_nonempty(!intervals.empty(), "intervals");
    require_nonempty(!thresholds.empty(), "thresholds");
    require_nonempty(!fixed_deltas.empty(), "fixed_deltas");
  }
  if (experiment == "replace") {
    require_nonempty(!ratios.empty(), "ratios");
    for (double r : ratios) {
      if (!(r >= 0.0 && r <= 1.0)) fail(ErrorCode::RejectedInput, "spec: ratios must lie in [0, 1]");
    }
  }
  if (experiment == "features" && max_distance < 1) {
    fail(ErrorCode::RejectedInput, "spec: max_distance must be >= 1");
  }
}

ExperimentSpec parse_spec(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::RejectedInput, "spec line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "name") spec.name = value;
    else if (key == "experiment") spec.experiment = value;
    else if (key == "pipeline") spec.pipeline = value;
    else if (key == "repetitions") spec.repetitions = parse_uint(key, value);
    else if (key == "output") spec.output = value;
    else if (key == "max_distance") spec.max_distance = parse_uint(key, value);
    else if (key == "offsets") {
      spec.offsets.clear();
      for (const auto& v : split_list(value)) spec.offsets.push_back(parse_offset(key, v));
    } else if (key == "pairs") {
      spec.pairs.clear();
      for (const auto& v : split_list(value)) {
        const auto parts = split_list(v, ':');
        if (parts.size() != 2) bad_value(key, v);
        spec.pairs.emplace_back(parse_offset(key, parts[0]), parse_offset(key, parts[1]));
      }
    } else if (key == "deltas" || key == "thresholds" || key == "fixed_deltas" || key == "ratios") {
      auto& target = key == "deltas"         ? spec.deltas
                     : key == "thresholds"   ? spec.thresholds
                     : key == "fixed_deltas" ? spec.fixed_deltas
                                             : spec.ratios;
      target.clear();
      for (const auto& v : split_list(value)) target.push_back(parse_double(key, v));
    } else if (key == "intervals") {
      spec.intervals.clear();
      for (const auto& v : split_list(value)) spec.intervals.push_back(parse_uint(key, v));
    } else if (key.rfind("sweep.", 0) == 0) {
      const std::string param = key.substr(6);
      if (!is_config_param(param)) {
        fail(ErrorCode::RejectedInput, "spec: unknown sweep parameter '" + param + "'");
      }
      spec.axes.push_back({param, split_list(value)});
    } else if (is_config_param(key)) {
      set_config_param(spec.base, key, value);
    } else {
      fail(ErrorCode::RejectedInput, "spec line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::RejectedInput, "cannot open spec file " + path);
  return parse_spec(in);
}

EngineConfig parse_config(std::istream& in) { return parse_spec(in).base; }

EngineConfig load_config(const std::string& path) { return load_spec(path).base; }

std::uint64_t rep_seed(std::uint64_t base, std::size_t rep) {
  return derive_seed(base, "rep.seed." + std::to_string(rep));
}

std::uint64_t rep_model_seed(std::uint64_t base, std::size_t rep) {
  return derive_seed(base, "rep.model." + std::to_string(rep));
}

std::string result_csv_header() {
  return "spec,experiment,cell,rep,params,pipeline,seed,model_seed,n_tok,n_fwd,n_draft,n_skip,"
         "iterations,tpf,mal,skip_fraction,quality,mal_ratio,note";
}

std::string result_csv_row(const ResultRow& r) {
  std::ostringstream out;
  out << r.spec << ',' << r.experiment << ',' << r.cell << ',' << r.rep << ',' << r.params << ','
      << r.pipeline << ',' << r.seed << ',' << r.model_seed << ',' << r.counters.n_tok << ','
      << r.counters.n_fwd << ',' << r.counters.n_draft << ',' << r.counters.n_skip << ','
      << r.iterations << ',';
  if (r.note.empty()) {
    out << fmt(r.metrics.tpf) << ',' << fmt(r.metrics.mal) << ',' << fmt(r.metrics.skip_fraction)
        << ',' << fmt(r.metrics.quality);
  } else {
    out << ",,,";
  }
  out << ',' << (r.mal_ratio ? fmt(*r.mal_ratio) : "") << ',' << r.note;
  return out.str();
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, std::size_t jobs,
                                      std::ostream* csv) {
  spec.validate();
  const auto cells = build_cells(spec);
  const std::size_t reps = spec.repetitions;
  const std::size_t total = cells.size() * reps;
  std::vector<std::optional<ResultRow>> rows(total);

  std::mutex mutex;
  std::size_t flushed = 0;
  if (csv) *csv << result_csv_header() << '\n';
  auto publish = [&](std::size_t index, ResultRow row) {
    std::lock_guard<std::mutex> lock(mutex);
    rows[index] = std::move(row);
    while (flushed < total && rows[flushed]) {
      if (csv) *csv << result_csv_row(*rows[flushed]) << '\n';
      ++flushed;
    }
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (error) return;
      }
      try {
        publish(i, run_cell(spec, cells[i / reps], i / reps, i % reps));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, total));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  if (csv) csv->flush();

  std::vector<ResultRow> out;
  out.reserve(total);
  for (auto& r : rows) out.push_back(std::move(*r));
  return out;
}

void write_summary(std::ostream& out, const std::vector<ResultRow>& rows) {
  struct Acc {
    std::string params, pipeline;
    std::size_t n = 0, skipped = 0;
    double tpf = 0, mal = 0, skip = 0, quality = 0, ratio = 0;
    std::size_t ratios = 0;
  };
  std::map<std::size_t, Acc> cells;
  for (const auto& r : rows) {
    auto& a = cells[r.cell];
    a.params = r.params;
    a.pipeline = r.pipeline;
    if (!r.note.empty()) {
      ++a.skipped;
      continue;
    }
    ++a.n;
    a.tpf += r.metrics.tpf;
    a.mal += r.metrics.mal;
    a.skip += r.metrics.skip_fraction;
    a.quality += r.metrics.quality;
    if (r.mal_ratio) {
      a.ratio += *r.mal_ratio;
      ++a.ratios;
    }
  }
  char buf[512];
  std::snprintf(buf, sizeof buf, "%-5s %-8s %5s %8s %8s %8s %9s %9s  %s\n", "cell", "pipeline",
                "runs", "tpf", "mal", "skip", "quality", "mal_ratio", "params");
  out << buf;
  for (const auto& [cell, a] : cells) {
    const double n = a.n ? static_cast<double>(a.n) : 1.0;
    std::string ratio = a.ratios ? fmt(a.ratio / static_cast<double>(a.ratios)).substr(0, 9) : "-";
    std::snprintf(buf, sizeof buf, "%-5zu %-8s %5zu %8.4f %8.4f %8.4f %9.4f %9s  %s%s\n", cell,
                  a.pipeline.c_str(), a.n, a.tpf / n, a.mal / n, a.skip / n, a.quality / n,
                  ratio.c_str(), a.params.c_str(),
                  a.skipped ? (" (" + std::to_string(a.skipped) + " skipped)").c_str() : "");
    out << buf;
  }
}

double SimilarityHistogram::fraction_above() const {
  const auto n = counted();
  return n ? static_cast<double>(above) / static_cast<double>(n) : 0.0;
}

SimilarityHistogram measure_path_similarity_distribution(const EngineConfig& config,
                                                         std::size_t runs) {
  SimilarityHistogram h;
  for (std::size_t r = 0; r < runs; ++r) {
    EngineConfig c = config;
    c.seed = rep_seed(config.seed, r);
    c.model_seed = rep_model_seed(config.model_seed, r);
    Engine engine(c);
    const auto& codebook = engine.models().target->codebook();
    RunOptions options;
    options.observer = [&](const IterationView& view) {
      ++h.iterations;
      const auto s = path_similarity(view.paths, codebook, c.skip.alpha, 1);
      if (s.degenerate) {
        ++h.degenerate;
        return;
      }
      h.values.push_back(s.value);
      auto bin = static_cast<std::size_t>(std::floor((s.value + 1.0) / 2.0 * SimilarityHistogram::kBins));
      bin = std::min(bin, SimilarityHistogram::kBins - 1);
      ++h.bins[bin];
      if (s.value > 0.7) ++h.above;
    };
    engine.speculative_decode(options);
  }
  return h;
}

std::vector<DistanceSimilarity> measure_feature_similarity(const EngineConfig& config,
                                                           std::size_t max_distance,
                                                           std::size_t runs) {
  if (max_distance < 1) fail(ErrorCode::RejectedInput, "feature similarity: max distance must be >= 1");
  std::vector<DistanceSimilarity> table(max_distance);
  std::vector<double> sums(max_distance, 0.0);
  for (std::size_t d = 0; d < max_distance; ++d) table[d].distance = d + 1;
  for (std::size_t r = 0; r < runs; ++r) {
    EngineConfig c = config;
    c.seed = rep_seed(config.seed, r);
    c.model_seed = rep_model_seed(config.model_seed, r);
    Engine engine(c);
    const auto trace = engine.vanilla_ar();
    std::vector<TokenId> seq = trace.prompt;
    const auto emitted = trace.emitted();
    seq.insert(seq.end(), emitted.ids.begin(), emitted.ids.end());
    const auto features = engine.models().target->features_of(seq);
    // Start once the recurrence has seen a full window of tokens.
    const std::size_t start = std::min(features.size(), c.window - 1);
    for (std::size_t d = 1; d <= max_distance; ++d) {
      for (std::size_t i = start; i + d < features.size(); ++i) {
        sums[d - 1] += cosine(features[i], features[i + d]);
        ++table[d - 1].pairs;
      }
    }
  }
  for (std::size_t d = 0; d < max_distance; ++d) {
    table[d].mean_cosine = table[d].pairs ? sums[d] / static_cast<double>(table[d].pairs) : 0.0;
  }
  return table;
}

namespace {

ExperimentSpec sweep_spec(const EngineConfig& config, const std::string& experiment,
                          std::size_t reps) {
  ExperimentSpec spec;
  spec.name = experiment;
  spec.experiment = experiment;
  spec.base = config;
  spec.repetitions = reps;
  return spec;
}

}  // namespace

std::vector<ResultRow> staleness_sweep(const EngineConfig& config, const std::vector<int>& offsets,
                                       std::size_t reps, std::size_t jobs) {
  auto spec = sweep_spec(config, "staleness", reps);
  spec.offsets = offsets;
  return run_experiment(spec, jobs);
}

std::vector<ResultRow> blending_sweep(const EngineConfig& config,
                                      const std::vector<std::pair<int, int>>& pairs,
                                      std::size_t reps, std::size_t jobs) {
  auto spec = sweep_spec(config, "blending", reps);
  spec.pairs = pairs;
  return run_experiment(spec, jobs);
}

std::vector<ResultRow> pareto_sweep(const EngineConfig& config, const std::vector<double>& deltas,
                                    const std::vector<std::size_t>& intervals,
                                    const std::vector<double>& thresholds, std::size_t reps,
                                    std::size_t jobs) {
  auto spec = sweep_spec(config, "pareto", reps);
  spec.deltas = deltas;
  spec.intervals = intervals;
  spec.thresholds = thresholds;
  return run_experiment(spec, jobs);
}

std::vector<ResultRow> replace_sweep(const EngineConfig& config, const std::vector<double>& ratios,
                                     std::size_t reps, std::size_t jobs) {
  auto spec = sweep_spec(config, "replace", reps);
  spec.ratios = ratios;
  return run_experiment(spec, jobs);
}

void run_analysis(const ExperimentSpec& spec, std::ostream& out) {
  spec.validate();
  if (spec.experiment == "similarity") {
    const auto h = measure_path_similarity_distribution(spec.base, spec.repetitions);
    out << "bin,low,high,count,iterations,degenerate,fraction_above_0.7\n";
    for (std::size_t b = 0; b < SimilarityHistogram::kBins; ++b) {
      const double low = -1.0 + 2.0 * static_cast<double>(b) / SimilarityHistogram::kBins;
      const double high = low + 2.0 / SimilarityHistogram::kBins;
      out << b << ',' << fmt(low) << ',' << fmt(high) << ',' << h.bins[b] << ',' << h.iterations
          << ',' << h.degenerate << ',' << fmt(h.fraction_above()) << '\n';
    }
  } else if (spec.experiment == "features") {
    const auto table = measure_feature_similarity(spec.base, spec.max_distance, spec.repetitions);
    out << "distance,mean_cosine,pairs\n";
    for (const auto& row : table) {
      out << row.distance << ',' << fmt(row.mean_cosine) << ',' << row.pairs << '\n';
    }
  } else if (spec.experiment == "cache") {
    Engine engine(spec.base);
    FeatureCache cache;
    RunOptions options;
    options.cache_out = &cache;
    const auto trace = engine.vvs_generate(options);
    cache.write_csv(out, trace.iterations.size());
  } else {
    fail(ErrorCode::RejectedInput, "experiment '" + spec.experiment + "' is not an analysis");
  }
}

}  // namespace vvs

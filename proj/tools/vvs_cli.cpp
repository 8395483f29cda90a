// Command-line front end: single generations, result sweeps, analyses.
//
//   vvs_cli generate --config run.txt [--output trace.txt|trace.csv] [--seed N]
//   vvs_cli sweep    --config spec.txt [--output rows.csv] [--seed N] [--jobs N]
//   vvs_cli analyze  --config spec.txt [--output table.csv] [--seed N]
//
// Failures print one line "error code=<Code> message=<text>" to stderr and
// exit with status 2.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vvs/engine.hpp"
#include "vvs/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) vvs::fail(vvs::ErrorCode::RejectedInput, "cannot open output file " + path);
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

vvs::ExperimentSpec load(const Options& o) {
  auto spec = vvs::load_spec(o.config);
  if (o.seed) spec.base.seed = *o.seed;
  if (!o.output.empty()) spec.output = o.output;
  return spec;
}

int run_generate(const Options& o) {
  const auto spec = load(o);
  vvs::Engine engine(spec.base);
  vvs::GenerationTrace trace;
  if (spec.pipeline == "vanilla") trace = engine.vanilla_ar();
  else if (spec.pipeline == "sd") trace = engine.speculative_decode();
  else trace = engine.vvs_generate();
  const auto m = engine.metrics(trace);
  if (!spec.output.empty()) {
    auto out = open_output(spec.output);
    if (ends_with(spec.output, ".csv")) vvs::write_trace_csv(out, trace);
    else vvs::write_trace(out, trace);
  }
  std::printf("pipeline=%s n_tok=%llu n_fwd=%llu n_skip=%llu tpf=%.4f mal=%.4f skip_fraction=%.4f quality=%.4f\n",
              trace.pipeline.c_str(), static_cast<unsigned long long>(trace.counters.n_tok),
              static_cast<unsigned long long>(trace.counters.n_fwd),
              static_cast<unsigned long long>(trace.counters.n_skip), m.tpf, m.mal,
              m.skip_fraction, m.quality);
  return 0;
}

int run_sweep(const Options& o) {
  const auto spec = load(o);
  std::vector<vvs::ResultRow> rows;
  if (spec.output.empty()) {
    rows = vvs::run_experiment(spec, o.jobs, &std::cout);
  } else {
    auto out = open_output(spec.output);
    rows = vvs::run_experiment(spec, o.jobs, &out);
  }
  vvs::write_summary(spec.output.empty() ? std::cerr : std::cout, rows);
  return 0;
}

int run_analyze(const Options& o) {
  const auto spec = load(o);
  if (spec.output.empty()) {
    vvs::run_analysis(spec, std::cout);
  } else {
    auto out = open_output(spec.output);
    vvs::run_analysis(spec, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speculative decoding with partial verification skipping on synthetic models"};
  app.require_subcommand(1);
  Options opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", opts.config, "Key-value config or experiment spec file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--output,-o", opts.output, "Output file (overrides the experiment spec's output key)");
    sub->add_option("--seed", opts.seed, "Override the decoding seed");
  };
  auto* generate = app.add_subcommand("generate", "Run one generation and print its metrics");
  add_common(generate);
  auto* sweep = app.add_subcommand("sweep", "Run an experiment spec and write result rows as CSV");
  add_common(sweep);
  sweep->add_option("--jobs,-j", opts.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  auto* analyze = app.add_subcommand("analyze", "Run an analysis spec (similarity, features, cache)");
  add_common(analyze);

  CLI11_PARSE(app, argc, argv);
  try {
    if (generate->parsed()) return run_generate(opts);
    if (sweep->parsed()) return run_sweep(opts);
    return run_analyze(opts);
  } catch (const vvs::Error& e) {
    std::cerr << "error code=" << vvs::to_string(e.code()) << " message=" << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error code=Internal message=" << e.what() << '\n';
    return 2;
  }
}

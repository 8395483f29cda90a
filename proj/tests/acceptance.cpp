// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every check is deterministic (fixed seeds).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vvs/engine.hpp"
#include "vvs/harness.hpp"
#include "vvs/scheduler.hpp"
#include "vvs/selector.hpp"
#include "vvs/verifier.hpp"

using namespace vvs;

namespace {

// Collects failed sub-checks of one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

Outcome finish(const Check& c, const std::string& summary) {
  Outcome o;
  o.pass = c.failures.empty();
  o.detail = summary;
  if (!o.pass) {
    o.detail += "; failed: " + c.failures.front();
    if (c.failures.size() > 1) o.detail += " (+" + std::to_string(c.failures.size() - 1) + " more)";
  }
  return o;
}

ProbDist random_dist(std::size_t vocab, RngStream& rng, double zero_fraction) {
  std::vector<double> w(vocab);
  for (auto& x : w) x = rng.uniform() < zero_fraction ? 0.0 : -std::log(1.0 - rng.uniform());
  w[rng.index(vocab)] += 0.5;
  return normalize(w);
}

EmbeddingCodebook random_codebook(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  RngStream rng(seed, "acceptance.codebook");
  std::vector<double> rows(vocab * dim);
  for (auto& x : rows) x = rng.normal();
  return EmbeddingCodebook(vocab, dim, std::move(rows));
}

TokenPath path_of(std::vector<TokenId> tokens, double step_prob = 0.5) {
  TokenPath p;
  p.tokens = std::move(tokens);
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    p.probs.push_back(step_prob);
    p.nodes.push_back(i);
    p.confidence *= step_prob;
  }
  return p;
}

// Accounting identities recomputed from the raw iteration records.
bool accounting_holds(const GenerationTrace& t) {
  std::uint64_t emitted = 0, verifies = 0, skips = 0, fwd = 0, draft = 0;
  bool previous_skip = false;
  for (const auto& it : t.iterations) {
    emitted += it.emitted;
    fwd += it.forward_passes;
    draft += it.draft_passes;
    if (it.kind == IterationKind::Verify) {
      if (it.forward_passes != 1) return false;
      ++verifies;
      previous_skip = false;
    } else {
      if (it.forward_passes != 0 || previous_skip) return false;
      ++skips;
      previous_skip = true;
    }
  }
  if (t.counters.n_tok != emitted || t.counters.n_tok != t.tokens.size()) return false;
  if (t.counters.n_fwd != verifies || t.counters.n_fwd != fwd) return false;
  if (t.counters.n_skip != skips) return false;
  if (t.counters.n_fwd + t.counters.n_skip != t.iterations.size()) return false;
  if (t.pipeline != "vanilla" && t.counters.n_draft != draft) return false;
  if (t.tokens.ids.size() != t.tokens.origins.size()) return false;
  return t.counters.n_tok >= t.max_length;
}

// 1. Strict speculative decoding reproduces the target's sequence law.
Outcome lossless() {
  const auto start = std::chrono::steady_clock::now();
  EngineConfig cfg;
  cfg.vocab = 16;
  cfg.dim = 4;
  cfg.epsilon = 0.3;
  cfg.verify = VerifyMode::strict();
  cfg.max_length = 3;
  constexpr std::size_t kRuns = 100000;
  Engine engine(cfg);
  std::map<std::vector<TokenId>, std::size_t> ar, sd;
  for (std::size_t r = 0; r < kRuns; ++r) {
    engine.set_seed(derive_seed(11, "acceptance.ar." + std::to_string(r)));
    ++ar[engine.vanilla_ar().emitted().ids];
    engine.set_seed(derive_seed(12, "acceptance.sd." + std::to_string(r)));
    ++sd[engine.speculative_decode().emitted().ids];
  }
  std::map<std::vector<TokenId>, std::pair<double, double>> joint;
  for (const auto& [k, c] : ar) joint[k].first = static_cast<double>(c) / kRuns;
  for (const auto& [k, c] : sd) joint[k].second = static_cast<double>(c) / kRuns;
  double tv = 0.0;
  for (const auto& [k, pq] : joint) tv += std::abs(pq.first - pq.second);
  tv *= 0.5;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Check c;
  c.expect(tv <= 0.01, "TV " + fmt(tv) + " > 0.01");
  c.expect(secs < 120.0, "took " + fmt(secs, 1) + "s");
  return finish(c, "TV=" + fmt(tv) + " over " + std::to_string(joint.size()) + " sequences, " +
                       fmt(secs, 1) + "s");
}

// 2. Relaxed acceptance at delta 0 is strict acceptance, draw for draw.
Outcome relaxed_zero_is_strict() {
  const auto cb = random_codebook(16, 4, 5);
  RngStream gen(4, "acceptance.pairs");
  RngStream a(77, "shared"), b(77, "shared");
  std::size_t agree = 0, accepted = 0;
  constexpr int kCalls = 10000;
  for (int i = 0; i < kCalls; ++i) {
    const ProbDist q = random_dist(16, gen, 0.3);
    const ProbDist p = random_dist(16, gen, 0.3);
    TokenId t = 0;
    while (p[t] == 0.0) t = static_cast<TokenId>(gen.index(16));
    const bool s = strict_accept(q, p, t, a);
    agree += s == relaxed_accept(q, p, t, cb, RelaxConfig{0.0, 8}, b);
    accepted += s;
  }
  Check c;
  c.expect(agree == kCalls, std::to_string(kCalls - agree) + " disagreements");
  return finish(c, std::to_string(agree) + "/" + std::to_string(kCalls) + " agree (" +
                       std::to_string(accepted) + " accepted)");
}

// 3. Path selection and truncation.
Outcome selection() {
  Check c;
  RngStream rng(1, "acceptance.select");
  const SelectionPolicy uniform{SelectionStrategy::Uniform, true};
  const SelectionPolicy maxconf{SelectionStrategy::MaxConfidence, true};

  const std::vector<TokenPath> one{path_of({3, 1})};
  c.expect(select_path(one, uniform, rng).tokens == one[0].tokens, "single path");
  std::vector<TokenPath> confs{path_of({5}), path_of({6}), path_of({7})};
  confs[0].confidence = 0.5;
  confs[1].confidence = 0.12;
  confs[2].confidence = 0.3;
  c.expect(select_path(confs, maxconf, rng).tokens == std::vector<TokenId>{5}, "max confidence");
  const std::vector<TokenPath> mixed{path_of({1, 2, 3}), path_of({1, 2, 3, 4}), path_of({1, 2, 3, 4, 5})};
  c.expect(truncate_path(mixed[2], mixed).tokens == std::vector<TokenId>{1, 2, 3, 4}, "truncate to mean");

  const std::vector<TokenPath> four{path_of({0}), path_of({1}), path_of({2}), path_of({3})};
  std::map<TokenId, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[select_path(four, uniform, rng).tokens[0]];
  for (TokenId t = 0; t < 4; ++t) c.expect(std::abs(counts[t] / 10000.0 - 0.25) <= 0.02, "uniform frequency");

  RngStream fuzz(2, "acceptance.lengths");
  std::size_t bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + fuzz.index(12);
    std::vector<TokenPath> paths;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<TokenId> toks(1 + fuzz.index(8));
      for (auto& t : toks) t = static_cast<TokenId>(fuzz.index(64));
      total += static_cast<double>(toks.size());
      paths.push_back(path_of(std::move(toks)));
    }
    const TokenPath& selected = select_path(paths, uniform, fuzz);
    const auto expected =
        std::min(selected.size(), static_cast<std::size_t>(std::floor(total / static_cast<double>(n))));
    const auto cut = truncate_path(selected, paths);
    bool ok = cut.size() == expected;
    for (std::size_t i = 0; ok && i < cut.size(); ++i) ok = cut.tokens[i] == selected.tokens[i];
    bad += !ok;
  }
  c.expect(bad == 0, std::to_string(bad) + " fuzz mismatches");
  return finish(c, "examples + 10000 fuzzed truncations");
}

double oracle_similarity(std::span<const TokenPath> paths, const EmbeddingCodebook& cb, double alpha,
                         std::size_t stride) {
  std::vector<TokenPath> kept;
  for (std::size_t i = 0; i < paths.size(); i += stride) kept.push_back(paths[i]);
  if (kept.size() < 2) return 1.0;
  std::size_t depth = kept[0].size();
  for (const auto& p : kept) depth = std::min(depth, p.size());
  double norm = 0.0;
  for (std::size_t l = 1; l <= depth; ++l) norm += std::pow(alpha, static_cast<double>(l));
  double total = 0.0;
  for (std::size_t l = 0; l < depth; ++l) {
    double acc = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        const auto ra = cb.row(kept[a].tokens[l]), rb = cb.row(kept[b].tokens[l]);
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t d = 0; d < cb.dim(); ++d) {
          dot += ra[d] * rb[d];
          na += ra[d] * ra[d];
          nb += rb[d] * rb[d];
        }
        acc += dot / std::sqrt(na * nb);
        pairs += 1.0;
      }
    total += std::pow(alpha, static_cast<double>(l + 1)) / norm * (acc / pairs);
  }
  return total;
}

// 4. Decay weights and path similarity.
Outcome similarity() {
  Check c;
  RngStream rng(1, "acceptance.weights");
  std::size_t bad_weights = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double alpha = 1e-3 + (1.0 - 1e-3) * rng.uniform();
    const std::size_t len = 1 + rng.index(12);
    const auto w = decay_weights(alpha, len);
    double s = 0.0;
    bool ok = w.size() == len;
    for (std::size_t i = 0; ok && i < len; ++i) {
      s += w[i];
      if (i > 0 && !(w[i] < w[i - 1])) ok = false;
    }
    bad_weights += !(ok && std::abs(s - 1.0) <= 1e-12);
  }
  c.expect(bad_weights == 0, std::to_string(bad_weights) + " bad weight vectors");

  const auto cb = random_codebook(32, 6, 3);
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    RngStream r(seed, "acceptance.sim");
    const ExpandFn expand = [&](std::span<const TokenId> branch) {
      std::string key = "b";
      for (TokenId t : branch) key += "." + std::to_string(t);
      RngStream e(seed, key);
      return random_dist(32, e, 0.3);
    };
    const DraftTree tree = build_tree(expand, TreeShape{2 + r.index(3), 1 + r.index(5), 4 + r.index(24)});
    const auto paths = enumerate_paths(tree);
    const double alpha = 0.05 + 0.95 * r.uniform();
    const std::size_t stride = 1 + r.index(2);
    const double got = path_similarity(paths, cb, alpha, stride).value;
    worst = std::max(worst, std::abs(got - oracle_similarity(paths, cb, alpha, stride)));
    c.expect(got >= -1.0 && got <= 1.0, "similarity out of range");
  }
  c.expect(worst <= 1e-9, "oracle gap " + std::to_string(worst));
  return finish(c, "1000 weight vectors, 1000 trees, max oracle gap " + std::to_string(worst));
}

EngineConfig fuzz_config(std::uint64_t seed) {
  RngStream rng(seed, "acceptance.fuzzcfg");
  EngineConfig cfg;
  cfg.vocab = 16 + rng.index(49);
  cfg.dim = 2 + rng.index(7);
  cfg.cluster_size = 1 + rng.index(4);
  cfg.epsilon = rng.uniform();
  cfg.temperature = 0.02 + 0.2 * rng.uniform();
  cfg.branching = 2 + rng.index(3);
  cfg.depth = 2 + rng.index(5);
  cfg.budget = cfg.branching + rng.index(24);
  cfg.window = cfg.depth + rng.index(6);
  cfg.verify = rng.index(2) ? VerifyMode::strict() : VerifyMode::relaxed(rng.uniform() * 0.5, 1 + rng.index(8));
  switch (rng.index(3)) {
    case 0: cfg.skip = SkipRule::never(); break;
    case 1: cfg.skip = SkipRule::uniform(2 + rng.index(3)); break;
    default: cfg.skip = SkipRule::dynamic(0.5 + 0.4 * rng.uniform(), 0.5 + 0.5 * rng.uniform(), 1 + rng.index(2));
  }
  cfg.selection.strategy = rng.index(2) ? SelectionStrategy::Uniform : SelectionStrategy::MaxConfidence;
  cfg.selection.truncate = rng.index(2) == 0;
  cfg.max_length = 1 + rng.index(80);
  cfg.seed = rng.next_u64();
  cfg.model_seed = 1 + rng.index(1000);
  return cfg;
}

// 5. Uniform schedules and the no-consecutive-skip guard.
Outcome scheduling() {
  Check c;
  const auto cb = random_codebook(16, 4, 8);
  const std::vector<TokenPath> two{path_of({0}), path_of({1})};
  for (std::size_t i = 2; i <= 6; ++i) {
    SkipPolicy policy(SkipRule::uniform(i));
    std::size_t skips = 0;
    for (std::size_t s = 1; s <= 120; ++s) skips += policy.decide(two, cb, s).skip;
    c.expect(skips == 120 / i, "uniform(" + std::to_string(i) + ") skipped " + std::to_string(skips));
  }
  std::size_t violations = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    RngStream rng(seed, "acceptance.guard");
    SkipRule rule;
    switch (rng.index(3)) {
      case 0: rule = SkipRule::never(); break;
      case 1: rule = SkipRule::uniform(2 + rng.index(4)); break;
      default: rule = SkipRule::dynamic(rng.uniform() * 1.2 - 0.2, 0.1 + 0.9 * rng.uniform(), 1 + rng.index(2));
    }
    SkipPolicy policy(rule);
    bool prev = false;
    for (std::size_t s = 1; s <= 60; ++s) {
      std::vector<TokenPath> paths;
      for (std::size_t k = 1 + rng.index(4); k > 0; --k) {
        std::vector<TokenId> toks(1 + rng.index(4));
        for (auto& t : toks) t = static_cast<TokenId>(rng.index(16));
        paths.push_back(path_of(toks));
      }
      const bool skip = policy.decide(paths, cb, s).skip;
      violations += prev && skip;
      prev = skip;
    }
  }
  c.expect(violations == 0, std::to_string(violations) + " consecutive skips");

  std::size_t trace_violations = 0, skipped = 0;
  for (std::uint64_t seed = 1001; seed <= 2000; ++seed) {
    const auto trace = vvs_generate(fuzz_config(seed));
    bool prev = false;
    for (const auto& it : trace.iterations) {
      const bool skip = it.kind == IterationKind::Skip;
      trace_violations += prev && skip;
      skipped += skip;
      prev = skip;
    }
  }
  c.expect(trace_violations == 0, std::to_string(trace_violations) + " consecutive skips in traces");
  return finish(c, "uniform(2..6) over 120 steps, 1000 fuzzed policies, 1000 fuzzed runs with " +
                       std::to_string(skipped) + " skips");
}

// 6. Counter conservation, and never-skip equals speculative decoding.
Outcome accounting() {
  Check c;
  std::size_t runs = 0, bad = 0, mismatched = 0;
  for (std::uint64_t s = 1; s <= 300; ++s) {
    EngineConfig cfg = fuzz_config(s);
    Engine engine(cfg);
    const auto v = engine.vanilla_ar();
    const auto sd = engine.speculative_decode();
    const auto vv = engine.vvs_generate();
    runs += 3;
    bad += !accounting_holds(v) + !accounting_holds(sd) + !accounting_holds(vv);
    bad += v.counters.n_fwd != v.counters.n_tok;

    EngineConfig never = cfg;
    never.skip = SkipRule::never();
    auto relabeled = Engine(never).vvs_generate();
    relabeled.pipeline = sd.pipeline;
    std::ostringstream a, b;
    write_trace(a, relabeled);
    write_trace(b, sd);
    mismatched += a.str() != b.str();
  }
  c.expect(bad == 0, std::to_string(bad) + " traces break an identity");
  c.expect(mismatched == 0, std::to_string(mismatched) + " never-skip traces differ from sd");
  return finish(c, std::to_string(runs) + " traces; never-skip == sd on 300 configs");
}

// 7. Uniform skipping at interval 2 lifts tokens per forward pass.
Outcome uplift() {
  double sd = 0.0, vv = 0.0;
  for (std::size_t r = 0; r < 100; ++r) {
    EngineConfig cfg;
    cfg.seed = rep_seed(1, r);
    cfg.model_seed = rep_model_seed(1, r);
    cfg.skip = SkipRule::uniform(2);
    Engine engine(cfg);
    sd += engine.metrics(engine.speculative_decode()).tpf;
    vv += engine.metrics(engine.vvs_generate()).tpf;
  }
  const double ratio = vv / sd;
  Check c;
  c.expect(ratio >= 1.4, "ratio " + fmt(ratio) + " < 1.4");
  return finish(c, "mean TPF sd=" + fmt(sd / 100) + " uniform(2)=" + fmt(vv / 100) + " ratio=" + fmt(ratio));
}

double mean_mal(const std::vector<ResultRow>& rows, const std::string& params) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows)
    if (r.params == params && r.note.empty()) {
      s += r.metrics.mal;
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::nan("");
}

// 8. Stale features cost acceptance; blending in fresh ones recovers some.
Outcome staleness() {
  EngineConfig cfg;
  const auto st = staleness_sweep(cfg, {kFreshFeatures, 0, 3}, 200, 8);
  const double fresh = mean_mal(st, "offset=fresh"), s0 = mean_mal(st, "offset=0"),
               s3 = mean_mal(st, "offset=3");
  const auto bl = blending_sweep(cfg, {{kFreshFeatures, 0}, {0, 0}}, 200, 8);
  const double blend = mean_mal(bl, "pair=fresh:0"), stale = mean_mal(bl, "pair=0:0");
  Check c;
  c.expect(fresh >= s0, "fresh < s0");
  c.expect(s0 >= s3, "s0 < s3");
  c.expect(blend >= stale, "blend < stale");
  return finish(c, "MAL fresh=" + fmt(fresh) + " s0=" + fmt(s0) + " s3=" + fmt(s3) +
                       " blend(fresh,0)=" + fmt(blend) + " (0,0)=" + fmt(stale));
}

// 9. Higher thresholds skip no more often on the same recorded paths.
Outcome thresholds() {
  Check c;
  std::size_t totals[3] = {0, 0, 0};
  const double levels[3] = {0.70, 0.75, 0.80};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    EngineConfig cfg;
    cfg.seed = rep_seed(3, seed);
    cfg.model_seed = rep_model_seed(3, seed);
    cfg.max_length = 96;
    Engine engine(cfg);
    std::vector<std::vector<TokenPath>> recorded;
    RunOptions opts;
    opts.observer = [&](const IterationView& v) { recorded.emplace_back(v.paths.begin(), v.paths.end()); };
    engine.speculative_decode(opts);
    std::size_t counts[3];
    for (int k = 0; k < 3; ++k) {
      SkipPolicy policy(SkipRule::dynamic(levels[k], cfg.skip.alpha, cfg.skip.stride));
      counts[k] = 0;
      for (std::size_t i = 0; i < recorded.size(); ++i)
        counts[k] += policy.decide(recorded[i], engine.models().target->codebook(), i + 1).skip;
      totals[k] += counts[k];
    }
    c.expect(counts[0] >= counts[1] && counts[1] >= counts[2], "seed " + std::to_string(seed));
  }
  return finish(c, "skips over 100 replays: 0.70=" + std::to_string(totals[0]) +
                       " 0.75=" + std::to_string(totals[1]) + " 0.80=" + std::to_string(totals[2]));
}

// 10. A spec file yields byte-identical CSV on reruns and across thread counts.
Outcome reproducible() {
  const auto path = std::filesystem::temp_directory_path() / "vvs_acceptance.spec";
  {
    std::ofstream out(path);
    out << "name = acceptance\nexperiment = grid\npipeline = vvs\nrepetitions = 4\n"
           "max_length = 48\nskip = dynamic\nsweep.threshold = 0.7, 0.8\nsweep.delta = 0.1, 0.3\n";
  }
  const auto spec = load_spec(path.string());
  auto csv = [&](std::size_t jobs) {
    std::ostringstream out;
    run_experiment(spec, jobs, &out);
    return out.str();
  };
  const auto a = csv(1), b = csv(1), d = csv(4);
  std::filesystem::remove(path);
  Check c;
  c.expect(a == b, "rerun differs");
  c.expect(a == d, "4 threads differ from 1");
  return finish(c, std::to_string(a.size()) + " bytes identical across 3 runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"strict decoding is lossless", lossless},
      {"relaxed at delta 0 equals strict", relaxed_zero_is_strict},
      {"path selection and truncation", selection},
      {"decay weights and path similarity", similarity},
      {"uniform schedule and skip guard", scheduling},
      {"counter accounting", accounting},
      {"uniform(2) throughput uplift", uplift},
      {"staleness and blending ordering", staleness},
      {"threshold monotonicity", thresholds},
      {"reproducible result CSV", reproducible},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("criterion %zu: %s %s -- %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}

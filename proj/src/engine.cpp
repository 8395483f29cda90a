#include "vvs/engine.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "vvs/selector.hpp"
#include "vvs/verifier.hpp"

namespace vvs {

namespace {

char origin_letter(Origin o) {
  switch (o) {
    case Origin::Sampled: return 's';
    case Origin::Verified: return 'v';
    case Origin::SkipAccepted: return 'k';
    case Origin::Resampled: return 'r';
    case Origin::Bonus: return 'b';
  }
  return '?';
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_offset(const std::optional<int>& offset) {
  if (!offset) return "";
  return *offset == kFreshFeatures ? "fresh" : std::to_string(*offset);
}

std::vector<std::size_t> iota_positions(std::size_t first, std::size_t count) {
  std::vector<std::size_t> out(count);
  std::iota(out.begin(), out.end(), first);
  return out;
}

}  // namespace

std::string_view to_string(IterationKind kind) {
  return kind == IterationKind::Verify ? "verify" : "skip";
}

TokenSequence GenerationTrace::emitted() const {
  TokenSequence out = tokens;
  if (out.size() > max_length) {
    out.ids.resize(max_length);
    out.origins.resize(max_length);
  }
  return out;
}

std::size_t GenerationTrace::verify_iterations() const {
  std::size_t n = 0;
  for (const auto& it : iterations) n += it.kind == IterationKind::Verify;
  return n;
}

Engine::Engine(EngineConfig config) : config_(std::move(config)) {
  config_.validate();
  models_ = make_model_pair(config_);
  prompt_ = make_prompt(config_);
  if (config_.verify.kind == VerifyKind::Relaxed) {
    neighbors_ = NeighborIndex(models_.target->codebook(), config_.verify.relax.pool);
  }
}

Engine::Engine(EngineConfig config, ModelPair models)
    : config_(std::move(config)), models_(std::move(models)) {
  config_.validate();
  if (!models_.target || !models_.draft) fail(ErrorCode::RejectedInput, "engine: missing models");
  if (models_.target->vocab() != config_.vocab || models_.target->dim() != config_.dim) {
    fail(ErrorCode::RejectedInput, "engine: models do not match the configured shape");
  }
  prompt_ = make_prompt(config_);
  if (config_.verify.kind == VerifyKind::Relaxed) {
    neighbors_ = NeighborIndex(models_.target->codebook(), config_.verify.relax.pool);
  }
}

GenerationTrace Engine::vanilla_ar() const {
  const auto& target = *models_.target;
  GenerationTrace trace;
  trace.pipeline = "vanilla";
  trace.max_length = config_.max_length;
  trace.prompt = prompt_;
  RngStream rng(config_.seed, "vanilla");
  PassCounter counter;
  std::vector<TokenId> context = prompt_;
  for (std::size_t i = 0; i < config_.max_length; ++i) {
    const std::size_t last = context.size() - 1;
    const auto out = target.forward(context, std::span<const std::size_t>(&last, 1), counter);
    const TokenId t = rng.sample(out[0].dist);
    context.push_back(t);
    trace.tokens.push_back(t, Origin::Sampled);
    IterationRecord rec;
    rec.index = i + 1;
    rec.emitted = 1;
    rec.forward_passes = 1;
    trace.iterations.push_back(rec);
  }
  trace.counters.n_tok = trace.tokens.size();
  trace.counters.n_fwd = counter.passes();
  return trace;
}

GenerationTrace Engine::speculative_decode(const RunOptions& options) const {
  return run(SkipRule::never(), options, "sd");
}

GenerationTrace Engine::vvs_generate(const RunOptions& options) const {
  return run(config_.skip, options, "vvs");
}

GenerationTrace Engine::replace_verified(double ratio) const {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    fail(ErrorCode::RejectedInput, "replace_verified: ratio must lie in [0, 1]");
  }
  RunOptions options;
  options.replace_ratio = ratio;
  return run(SkipRule::never(), options, "sd");
}

bool replace_scheduled(std::size_t verify_index, double ratio) {
  if (verify_index == 0 || ratio <= 0.0) return false;
  const double n = static_cast<double>(verify_index);
  return std::floor(n * ratio) > std::floor((n - 1.0) * ratio);
}

GenerationTrace Engine::run(const SkipRule& rule, const RunOptions& options,
                            std::string pipeline) const {
  for (int s : options.feature_offsets) {
    if (s < kFreshFeatures) fail(ErrorCode::RejectedInput, "run: feature offset must be >= -1");
  }
  const auto& target = *models_.target;
  const auto& draft = *models_.draft;
  const TreeShape shape{config_.branching, config_.depth, config_.budget};

  GenerationTrace trace;
  trace.pipeline = std::move(pipeline);
  trace.max_length = config_.max_length;
  trace.prompt = prompt_;

  VerifyStreams streams(config_.seed);
  RngStream select_rng(config_.seed, "select");
  SkipPolicy policy(rule);
  FeatureCache cache;
  PassCounter counter;
  const NeighborIndex* neighbors =
      config_.verify.kind == VerifyKind::Relaxed ? &neighbors_ : nullptr;

  // Prefill, not counted as decoding work. pair_features[i] is the feature
  // of position i - 1 paired with token i; position -1 has the zero feature.
  std::vector<TokenId> context = prompt_;
  std::vector<Feature> pair_features;
  {
    PassCounter prefill;
    const auto positions = iota_positions(0, prompt_.size());
    const auto outputs = target.forward(prompt_, positions, prefill);
    pair_features.emplace_back(target.dim(), 0.0);
    std::vector<Feature> feats;
    for (std::size_t i = 0; i + 1 < outputs.size(); ++i) {
      pair_features.push_back(outputs[i].feature);
      feats.push_back(outputs[i].feature);
    }
    cache.update(iota_positions(0, feats.size()), feats, 0, CacheOrigin::Verified);
  }

  std::size_t committed = context.size();  // tokens outside the pending chain
  TokenSequence pending;
  std::size_t verify_count = 0;

  for (std::size_t iteration = 1; context.size() - prompt_.size() < config_.max_length;
       ++iteration) {
    const DraftTree tree = build_tree(draft, pair_features, context, shape);
    trace.counters.n_draft += tree.draft_passes;
    const auto paths = enumerate_paths(tree);
    const SkipDecision decision = policy.decide(paths, target.codebook(), iteration);
    if (options.observer) {
      options.observer(IterationView{iteration, &tree, paths, &decision, context});
    }

    IterationRecord rec;
    rec.index = iteration;
    rec.similarity = decision.similarity;
    rec.draft_passes = tree.draft_passes;

    if (decision.skip) {
      TokenPath chosen = select_path(paths, config_.selection, select_rng);
      if (config_.selection.truncate) chosen = truncate_path(chosen, paths);
      const auto stale = cache.retrieve_latest(chosen.size(), iteration);
      for (std::size_t j = 0; j < chosen.size(); ++j) {
        context.push_back(chosen.tokens[j]);
        pair_features.push_back(stale[j].feature);
        trace.tokens.push_back(chosen.tokens[j], Origin::SkipAccepted);
        pending.push_back(chosen.tokens[j], Origin::SkipAccepted);
      }
      rec.kind = IterationKind::Skip;
      rec.emitted = chosen.size();
      rec.pending = pending.size();
      ++trace.counters.n_skip;
      trace.iterations.push_back(rec);
      continue;
    }

    ++verify_count;
    const LinearizedTree linear = linearize(tree, pending);
    VerifyOutcome outcome =
        verify_tree(linear, target, std::span<const TokenId>(context.data(), committed),
                    config_.verify, neighbors, streams, counter);
    const std::size_t g = pending.size();
    const std::size_t a = outcome.accept_length;

    if (replace_scheduled(verify_count, options.replace_ratio)) {
      for (const auto& p : paths) {
        if (p.size() < a) continue;
        for (std::size_t j = 0; j < a; ++j) outcome.accepted.ids[g + j] = p.tokens[j];
        break;
      }
      rec.replaced = true;
    }

    // Features for the tokens this step appends, taken before the cache
    // sees this step's entries.
    std::vector<Feature> new_pairs;
    int offset = kFreshFeatures;
    if (!options.feature_offsets.empty()) {
      offset = options.feature_offsets[(iteration - 1) % options.feature_offsets.size()];
    }
    if (offset == kFreshFeatures) {
      new_pairs.assign(outcome.fresh_features.begin() + static_cast<std::ptrdiff_t>(g),
                       outcome.fresh_features.end());
    } else {
      const std::uint64_t as_of = iteration - 1;
      const std::uint64_t latest = cache.latest_step(as_of).value_or(0);
      std::uint64_t s = std::min<std::uint64_t>(static_cast<std::uint64_t>(offset), latest);
      for (;;) {
        try {
          for (auto& r : cache.retrieve_with_offset(a + 1, s, as_of)) {
            new_pairs.push_back(std::move(r.feature));
          }
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::CacheUnderflow || s == 0) throw;
          --s;
        }
      }
      offset = static_cast<int>(s);
    }
    if (!options.feature_offsets.empty()) rec.feature_offset = offset;

    const std::size_t root = committed - 1;
    const auto& fresh = outcome.fresh_features;
    cache.update(iota_positions(root, 1), std::span<const Feature>(fresh.data(), 1), iteration,
                 CacheOrigin::Verified);
    cache.update(iota_positions(root + 1, g), std::span<const Feature>(fresh.data() + 1, g),
                 iteration, CacheOrigin::PostVerified);
    cache.update(iota_positions(root + 1 + g, a),
                 std::span<const Feature>(fresh.data() + 1 + g, a), iteration,
                 CacheOrigin::Verified);

    for (std::size_t j = 0; j < g; ++j) pair_features[committed + j] = fresh[j];
    for (std::size_t j = 0; j < a; ++j) {
      context.push_back(outcome.accepted.ids[g + j]);
      trace.tokens.push_back(outcome.accepted.ids[g + j], Origin::Verified);
      pair_features.push_back(new_pairs[j]);
    }
    context.push_back(outcome.terminal);
    trace.tokens.push_back(outcome.terminal, outcome.terminal_origin);
    pair_features.push_back(new_pairs[a]);
    pending = TokenSequence{};
    committed = context.size();

    rec.kind = IterationKind::Verify;
    rec.emitted = a + 1;
    rec.accept_length = a;
    rec.pending = g;
    rec.forward_passes = outcome.forward_passes;
    trace.iterations.push_back(rec);
  }

  trace.counters.n_tok = trace.tokens.size();
  trace.counters.n_fwd = counter.passes();
  if (options.cache_out) *options.cache_out = cache;
  return trace;
}

Metrics Engine::metrics(const GenerationTrace& trace) const {
  return compute_metrics(trace, *models_.target);
}

GenerationTrace vanilla_ar(const EngineConfig& config) { return Engine(config).vanilla_ar(); }

GenerationTrace speculative_decode(const EngineConfig& config) {
  return Engine(config).speculative_decode();
}

GenerationTrace vvs_generate(const EngineConfig& config) {
  return Engine(config).vvs_generate();
}

GenerationTrace replace_verified(const EngineConfig& config, double ratio) {
  return Engine(config).replace_verified(ratio);
}

Metrics compute_metrics(const GenerationTrace& trace, const TargetModel& target) {
  if (trace.counters.n_fwd == 0) {
    fail(ErrorCode::DegenerateTrace, "metrics: trace has no target forward passes");
  }
  Metrics m;
  m.tpf = static_cast<double>(trace.counters.n_tok) / static_cast<double>(trace.counters.n_fwd);
  double accepted = 0.0;
  std::size_t verifies = 0;
  for (const auto& it : trace.iterations) {
    if (it.kind != IterationKind::Verify) continue;
    accepted += static_cast<double>(it.accept_length + 1);
    ++verifies;
  }
  m.mal = verifies ? accepted / static_cast<double>(verifies) : 0.0;
  m.skip_fraction = trace.iterations.empty()
                        ? 0.0
                        : static_cast<double>(trace.counters.n_skip) /
                              static_cast<double>(trace.iterations.size());
  m.quality = target.mean_log_likelihood(trace.prompt, trace.emitted().ids);
  return m;
}

void write_trace(std::ostream& out, const GenerationTrace& trace) {
  out << "# vvs-trace v1\n";
  out << "pipeline=" << trace.pipeline << " max_length=" << trace.max_length << '\n';
  const auto& c = trace.counters;
  out << "counters n_tok=" << c.n_tok << " n_fwd=" << c.n_fwd << " n_draft=" << c.n_draft
      << " n_skip=" << c.n_skip << '\n';
  out << "prompt";
  for (TokenId t : trace.prompt) out << ' ' << t;
  out << '\n';
  for (const auto& it : trace.iterations) {
    out << "iter index=" << it.index << " kind=" << to_string(it.kind)
        << " emitted=" << it.emitted << " accept=" << it.accept_length
        << " pending=" << it.pending
        << " similarity=" << (it.similarity ? format_double(*it.similarity) : "")
        << " fwd=" << it.forward_passes << " draft=" << it.draft_passes
        << " offset=" << format_offset(it.feature_offset) << " replaced=" << it.replaced << '\n';
  }
  out << "tokens";
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    out << ' ' << trace.tokens.ids[i] << ':' << origin_letter(trace.tokens.origins[i]);
  }
  out << '\n';
}

std::string trace_csv_header() {
  return "index,kind,emitted,accept_length,pending,similarity,forward_passes,draft_passes,"
         "feature_offset,replaced";
}

void write_trace_csv(std::ostream& out, const GenerationTrace& trace) {
  out << trace_csv_header() << '\n';
  for (const auto& it : trace.iterations) {
    out << it.index << ',' << to_string(it.kind) << ',' << it.emitted << ','
        << it.accept_length << ',' << it.pending << ','
        << (it.similarity ? format_double(*it.similarity) : "") << ',' << it.forward_passes
        << ',' << it.draft_passes << ',' << format_offset(it.feature_offset) << ','
        << it.replaced << '\n';
  }
}

}  // namespace vvs

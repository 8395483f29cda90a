#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "vvs/config.hpp"
#include "vvs/engine.hpp"
#include "vvs/toymodel.hpp"

using namespace vvs;

namespace {

std::vector<TokenId> random_context(RngStream& rng, std::size_t vocab, std::size_t len) {
  std::vector<TokenId> ctx(len);
  for (auto& t : ctx) t = static_cast<TokenId>(rng.index(vocab));
  return ctx;
}

// Drafter inputs for a context: fresh target features shifted by one
// position, the zero vector pairing with the first token.
std::vector<Feature> paired_features(const TargetModel& target, std::span<const TokenId> ctx) {
  const auto feats = target.features_of(ctx);
  std::vector<Feature> pairs;
  pairs.push_back(Feature(target.dim(), 0.0));
  for (std::size_t i = 0; i + 1 < ctx.size(); ++i) pairs.push_back(feats[i]);
  return pairs;
}

ModelOutput target_at(const TargetModel& target, std::span<const TokenId> ctx, std::size_t pos) {
  PassCounter counter;
  const std::size_t positions[] = {pos};
  return target.forward(ctx, positions, counter).front();
}

}  // namespace

TEST_CASE("target forward is pure within a call") {
  const auto models = make_model_pair(EngineConfig{});
  const std::vector<TokenId> ctx{3, 1, 4, 1, 5};
  const std::size_t positions[] = {2, 2, 4};
  PassCounter counter;
  const auto out = models.target->forward(ctx, positions, counter);
  REQUIRE(out.size() == 3);
  CHECK(out[0].dist == out[1].dist);
  CHECK(out[0].feature == out[1].feature);
  CHECK(counter.passes() == 1);
}

TEST_CASE("target forward matches an independent re-run construction") {
  EngineConfig cfg;
  cfg.model_seed = 42;
  const std::vector<TokenId> ctx{3, 1, 4};
  const auto a = target_at(*make_model_pair(cfg).target, ctx, 2);
  const auto b = target_at(*make_model_pair(cfg).target, ctx, 2);
  CHECK(a.dist == b.dist);
  CHECK(a.feature == b.feature);
}

TEST_CASE("target forward depends only on the prefix up to the position") {
  const auto models = make_model_pair(EngineConfig{});
  const std::vector<TokenId> a{3, 1, 4, 7, 7};
  const std::vector<TokenId> b{3, 1, 4, 9};
  CHECK(target_at(*models.target, a, 2).dist == target_at(*models.target, b, 2).dist);
}

TEST_CASE("very high temperature reads out uniform") {
  EngineConfig cfg;
  cfg.temperature = 1e6;
  const auto models = make_model_pair(cfg);
  RngStream rng(1, "test.ctx");
  for (int i = 0; i < 50; ++i) {
    const auto ctx = random_context(rng, cfg.vocab, 1 + rng.index(20));
    const auto out = target_at(*models.target, ctx, ctx.size() - 1);
    CHECK(total_variation(out.dist, ProbDist::uniform(cfg.vocab)) <= 1e-3);
  }
}

TEST_CASE("forward counts one pass per call and rejects bad input") {
  const auto models = make_model_pair(EngineConfig{});
  PassCounter counter;
  const std::vector<TokenId> ctx{1, 2, 3, 4};
  const std::size_t many[] = {0, 1, 2, 3};
  models.target->forward(ctx, many, counter);
  CHECK(counter.passes() == 1);
  const std::vector<std::vector<TokenId>> branches{{5}, {5, 6}, {}};
  const auto out = models.target->forward_branches(ctx, branches, counter);
  CHECK(counter.passes() == 2);
  REQUIRE(out.size() == 3);
  CHECK(out[2].dist == target_at(*models.target, ctx, 3).dist);

  const std::vector<TokenId> empty;
  const std::size_t zero[] = {0};
  CHECK_THROWS_AS(models.target->forward(empty, zero, counter), Error);
  const std::size_t beyond[] = {4};
  CHECK_THROWS_AS(models.target->forward(ctx, beyond, counter), Error);
  const std::vector<TokenId> bad{1, 999};
  CHECK_THROWS_AS(models.target->forward(bad, zero, counter), Error);
}

TEST_CASE("features are finite and nonzero") {
  const auto models = make_model_pair(EngineConfig{});
  RngStream rng(2, "test.ctx");
  for (int i = 0; i < 200; ++i) {
    const auto ctx = random_context(rng, 64, 1 + rng.index(30));
    for (const auto& f : models.target->features_of(ctx)) {
      double n2 = 0.0;
      for (double x : f) {
        CHECK(std::isfinite(x));
        n2 += x * x;
      }
      CHECK(n2 > 0.0);
    }
  }
}

TEST_CASE("epsilon zero drafter equals the target given fresh features") {
  EngineConfig cfg;
  cfg.epsilon = 0.0;
  const auto models = make_model_pair(cfg);
  RngStream rng(3, "test.ctx");
  for (int i = 0; i < 300; ++i) {
    const auto ctx = random_context(rng, cfg.vocab, 1 + rng.index(24));
    const auto q = target_at(*models.target, ctx, ctx.size() - 1).dist;
    const auto p = models.draft->forward(paired_features(*models.target, ctx), ctx);
    for (TokenId t = 0; t < cfg.vocab; ++t) CHECK(std::abs(p[t] - q[t]) <= 1e-9);
  }
}

TEST_CASE("epsilon one drafter is far from the target") {
  EngineConfig cfg;
  cfg.epsilon = 1.0;
  const auto models = make_model_pair(cfg);
  RngStream rng(4, "test.ctx");
  double tv = 0.0;
  const int contexts = 1000;
  for (int i = 0; i < contexts; ++i) {
    const auto ctx = random_context(rng, cfg.vocab, 1 + rng.index(24));
    const auto q = target_at(*models.target, ctx, ctx.size() - 1).dist;
    tv += total_variation(models.draft->forward(paired_features(*models.target, ctx), ctx), q);
  }
  MESSAGE("mean TV(draft, target) at epsilon=1: " << tv / contexts);
  CHECK(tv / contexts > 0.2);
}

TEST_CASE("drafter is continuous in its feature input") {
  const auto models = make_model_pair(EngineConfig{});
  RngStream rng(5, "test.ctx");
  for (int i = 0; i < 100; ++i) {
    const auto ctx = random_context(rng, 64, 2 + rng.index(20));
    auto feats = paired_features(*models.target, ctx);
    const auto base = models.draft->forward(feats, ctx);
    for (auto& x : feats.back()) x += 1e-12;
    CHECK(total_variation(base, models.draft->forward(feats, ctx)) < 1e-6);
  }
}

TEST_CASE("drafter rejects misaligned input") {
  const auto models = make_model_pair(EngineConfig{});
  const std::vector<TokenId> ctx{1, 2};
  const std::vector<Feature> one{Feature(8, 0.1)};
  CHECK_THROWS_AS(models.draft->forward(one, ctx), Error);
  CHECK_THROWS_AS(models.draft->forward({}, {}), Error);
}

TEST_CASE("make_model_pair construction contract") {
  EngineConfig cfg;
  const auto a = make_model_pair(cfg), b = make_model_pair(cfg);
  CHECK(*a.target == *b.target);
  CHECK(*a.draft == *b.draft);
  CHECK(a.target->vocab() == cfg.vocab);
  CHECK(a.target->dim() == cfg.dim);
  CHECK(a.target->window() == cfg.window);
  CHECK(&a.draft->codebook() == &a.target->codebook());

  EngineConfig other = cfg;
  other.model_seed = cfg.model_seed + 1;
  CHECK(make_model_pair(other).target->mixing()[0] != a.target->mixing()[0]);

  // The decoding seed leaves the models alone.
  EngineConfig reseeded = cfg;
  reseeded.seed = 99;
  CHECK(*make_model_pair(reseeded).target == *a.target);

  EngineConfig small = cfg;
  small.dim = 1;
  CHECK_THROWS_AS(make_model_pair(small), Error);
  small = cfg;
  small.vocab = 3;
  CHECK_THROWS_AS(make_model_pair(small), Error);
}

TEST_CASE("mixing matrix is orthogonal") {
  const auto models = make_model_pair(EngineConfig{});
  const auto m = models.target->mixing();
  const std::size_t d = models.target->dim();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += m[i * d + k] * m[j * d + k];
      CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("prompt is seeded and window-long") {
  EngineConfig cfg;
  CHECK(make_prompt(cfg) == make_prompt(cfg));
  CHECK(make_prompt(cfg).size() == cfg.window);
  EngineConfig other = cfg;
  other.model_seed = 2;
  CHECK(make_prompt(other) != make_prompt(cfg));
}

TEST_CASE("mean log-likelihood is a mean of log-probs") {
  const auto models = make_model_pair(EngineConfig{});
  const std::vector<TokenId> prefix{1, 2, 3}, cont{4, 5};
  std::vector<TokenId> full{1, 2, 3, 4};
  const double lp1 = std::log(target_at(*models.target, prefix, 2).dist[4]);
  const double lp2 = std::log(target_at(*models.target, full, 3).dist[5]);
  CHECK(models.target->mean_log_likelihood(prefix, cont) == doctest::Approx((lp1 + lp2) / 2));
}

TEST_CASE("strict mean accept length is non-increasing in epsilon") {
  const std::vector<double> eps{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::size_t runs = 200;
  std::vector<double> mal;
  for (double e : eps) {
    double total = 0.0;
    std::size_t verifies = 0;
    for (std::uint64_t s = 1; s <= runs; ++s) {
      EngineConfig cfg;
      cfg.epsilon = e;
      cfg.verify = VerifyMode::strict();
      cfg.max_length = 24;
      cfg.seed = s;
      cfg.model_seed = 1 + s % 8;
      const auto trace = speculative_decode(cfg);
      for (const auto& it : trace.iterations) total += static_cast<double>(it.accept_length);
      verifies += trace.verify_iterations();
    }
    mal.push_back(total / static_cast<double>(verifies));
  }
  for (std::size_t i = 0; i < eps.size(); ++i) MESSAGE("epsilon=" << eps[i] << " mean accept=" << mal[i]);
  for (std::size_t i = 1; i < eps.size(); ++i) CHECK(mal[i] <= mal[i - 1]);
}

TEST_CASE("features decay with positional distance") {
  EngineConfig cfg;
  cfg.max_length = 64;
  const auto models = make_model_pair(cfg);
  std::vector<double> sum(9, 0.0);
  std::vector<std::size_t> count(9, 0);
  for (std::uint64_t s = 1; s <= 20; ++s) {
    cfg.seed = s;
    const auto trace = vanilla_ar(cfg);
    std::vector<TokenId> seq = trace.prompt;
    seq.insert(seq.end(), trace.tokens.ids.begin(), trace.tokens.ids.end());
    const auto feats = models.target->features_of(seq);
    for (std::size_t dist : {1u, 8u})
      for (std::size_t i = cfg.window - 1; i + dist < feats.size(); ++i) {
        sum[dist] += cosine(feats[i], feats[i + dist]);
        ++count[dist];
      }
  }
  const double d1 = sum[1] / count[1], d8 = sum[8] / count[8];
  MESSAGE("feature cosine at distance 1: " << d1 << ", distance 8: " << d8);
  CHECK(d1 >= 0.5);
  CHECK(d1 > d8);
}

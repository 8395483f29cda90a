#include "vvs/toymodel.hpp"

#include <cmath>

#include "vvs/config.hpp"

namespace vvs {

namespace {

std::vector<double> mix_rows(const EmbeddingCodebook& codebook, std::span<const double> mixing) {
  const std::size_t v = codebook.vocab(), d = codebook.dim();
  std::vector<double> out(v * d, 0.0);
  for (TokenId t = 0; t < v; ++t) {
    auto e = codebook.row(t);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += mixing[i * d + j] * e[j];
      out[t * d + i] = acc;
    }
  }
  return out;
}

Feature advance_with(std::span<const double> mixed_rows, std::size_t dim, double decay,
                     std::span<const double> feature, TokenId token) {
  Feature out(dim);
  const double* m = mixed_rows.data() + static_cast<std::size_t>(token) * dim;
  for (std::size_t i = 0; i < dim; ++i) out[i] = decay * feature[i] + (1.0 - decay) * m[i];
  return out;
}

std::vector<double> readout_logits(std::span<const double> rows, std::size_t vocab,
                                   std::size_t dim, std::span<const double> feature,
                                   double temperature) {
  double n2 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) n2 += feature[i] * feature[i];
  const double scale = n2 > 0.0 ? 1.0 / (std::sqrt(n2) * temperature) : 0.0;
  std::vector<double> out(vocab);
  for (std::size_t t = 0; t < vocab; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += rows[t * dim + i] * feature[i];
    out[t] = acc * scale;
  }
  return out;
}

std::vector<double> unit_gaussian(RngStream& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& x : v) x *= inv;
  return v;
}

// Gram-Schmidt over gaussian rows.
std::vector<double> random_orthogonal(RngStream& rng, std::size_t dim) {
  std::vector<double> q(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (;;) {
      auto v = unit_gaussian(rng, dim);
      for (std::size_t p = 0; p < r; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += v[i] * q[p * dim + i];
        for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * q[p * dim + i];
      }
      double n2 = 0.0;
      for (double x : v) n2 += x * x;
      if (n2 < 1e-8) continue;
      const double inv = 1.0 / std::sqrt(n2);
      for (std::size_t i = 0; i < dim; ++i) q[r * dim + i] = v[i] * inv;
      break;
    }
  }
  return q;
}

}  // namespace

TargetModel::TargetModel(std::shared_ptr<const EmbeddingCodebook> codebook,
                         std::vector<double> mixing, std::size_t window, double temperature,
                         std::uint64_t seed)
    : codebook_(std::move(codebook)),
      mixing_(std::move(mixing)),
      window_(window),
      temperature_(temperature),
      decay_(1.0 - 1.0 / static_cast<double>(window)),
      seed_(seed) {
  if (!codebook_) fail(ErrorCode::RejectedInput, "target: missing codebook");
  if (mixing_.size() != dim() * dim()) fail(ErrorCode::RejectedInput, "target: mixing shape");
  if (window_ < 1) fail(ErrorCode::RejectedInput, "target: window must be >= 1");
  if (!(temperature_ > 0.0)) fail(ErrorCode::RejectedInput, "target: temperature must be > 0");
  mixed_rows_ = mix_rows(*codebook_, mixing_);
}

Feature TargetModel::advance(std::span<const double> feature, TokenId token) const {
  return advance_with(mixed_rows_, dim(), decay_, feature, token);
}

std::vector<double> TargetModel::logits(std::span<const double> feature) const {
  return readout_logits(codebook_->data(), vocab(), dim(), feature, temperature_);
}

ProbDist TargetModel::readout(std::span<const double> feature) const {
  return softmax(logits(feature));
}

Feature TargetModel::context_feature(std::span<const TokenId> tokens) const {
  Feature h(dim(), 0.0);
  for (TokenId t : tokens) h = advance(h, t);
  return h;
}

std::vector<ModelOutput> TargetModel::forward(std::span<const TokenId> context,
                                              std::span<const std::size_t> positions,
                                              PassCounter& counter) const {
  if (context.empty()) fail(ErrorCode::RejectedInput, "target_forward: empty context");
  for (std::size_t p : positions) {
    if (p >= context.size()) fail(ErrorCode::RejectedInput, "target_forward: position out of range");
  }
  for (TokenId t : context) {
    if (t >= vocab()) fail(ErrorCode::RejectedInput, "target_forward: token out of range");
  }
  counter.tick();
  const auto features = features_of(context);
  std::vector<ModelOutput> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back({readout(features[p]), features[p]});
  return out;
}

std::vector<ModelOutput> TargetModel::forward_branches(
    std::span<const TokenId> context, std::span<const std::vector<TokenId>> branches,
    PassCounter& counter) const {
  if (context.empty()) fail(ErrorCode::RejectedInput, "target_forward: empty context");
  counter.tick();
  const Feature base = context_feature(context);
  std::vector<ModelOutput> out;
  out.reserve(branches.size());
  for (const auto& branch : branches) {
    Feature h = base;
    for (TokenId t : branch) {
      if (t >= vocab()) fail(ErrorCode::RejectedInput, "target_forward: token out of range");
      h = advance(h, t);
    }
    out.push_back({readout(h), std::move(h)});
  }
  return out;
}

std::vector<Feature> TargetModel::features_of(std::span<const TokenId> tokens) const {
  std::vector<Feature> out;
  out.reserve(tokens.size());
  Feature h(dim(), 0.0);
  for (TokenId t : tokens) {
    h = advance(h, t);
    out.push_back(h);
  }
  return out;
}

double TargetModel::mean_log_likelihood(std::span<const TokenId> prefix,
                                        std::span<const TokenId> continuation) const {
  if (prefix.empty()) fail(ErrorCode::RejectedInput, "log_likelihood: empty prefix");
  if (continuation.empty()) return 0.0;
  Feature h = context_feature(prefix);
  double total = 0.0;
  for (TokenId t : continuation) {
    const auto lg = logits(h);
    double top = lg[0];
    for (double x : lg) top = std::max(top, x);
    double z = 0.0;
    for (double x : lg) z += std::exp(x - top);
    total += lg[t] - top - std::log(z);
    h = advance(h, t);
  }
  return total / static_cast<double>(continuation.size());
}

bool TargetModel::operator==(const TargetModel& other) const {
  return *codebook_ == *other.codebook_ && mixing_ == other.mixing_ &&
         window_ == other.window_ && temperature_ == other.temperature_ && seed_ == other.seed_;
}

DraftModel::DraftModel(const TargetModel& target, double divergence,
                       double smoothing_temperature, std::uint64_t seed)
    : codebook_(target.codebook_ptr()),
      mixed_rows_(mix_rows(target.codebook(), target.mixing())),
      decay_(target.decay()),
      target_temperature_(target.temperature()),
      divergence_(divergence),
      smoothing_temperature_(smoothing_temperature),
      seed_(seed) {
  if (!(divergence_ >= 0.0 && divergence_ <= 1.0)) {
    fail(ErrorCode::RejectedInput, "draft: divergence must lie in [0, 1]");
  }
  if (!(smoothing_temperature_ > 0.0)) {
    fail(ErrorCode::RejectedInput, "draft: smoothing temperature must be > 0");
  }
  RngStream rng(seed_, "draft.noise");
  const std::size_t d = codebook_->dim();
  noise_.reserve(codebook_->vocab() * d);
  for (std::size_t t = 0; t < codebook_->vocab(); ++t) {
    auto row = unit_gaussian(rng, d);
    noise_.insert(noise_.end(), row.begin(), row.end());
  }
}

Feature DraftModel::advance(std::span<const double> feature, TokenId token) const {
  return advance_with(mixed_rows_, codebook_->dim(), decay_, feature, token);
}

ProbDist DraftModel::readout(std::span<const double> feature) const {
  const std::size_t v = codebook_->vocab(), d = codebook_->dim();
  auto lg = readout_logits(codebook_->data(), v, d, feature, target_temperature_);
  if (divergence_ > 0.0) {
    const auto noise = readout_logits(noise_, v, d, feature, smoothing_temperature_);
    for (std::size_t t = 0; t < v; ++t) {
      lg[t] = (1.0 - divergence_) * lg[t] + divergence_ * noise[t];
    }
  }
  return softmax(lg);
}

Feature DraftModel::predict_feature(std::span<const Feature> features,
                                    std::span<const TokenId> tokens) const {
  if (features.size() != tokens.size()) {
    fail(ErrorCode::RejectedInput, "draft_forward: " + std::to_string(features.size()) +
                                       " features for " + std::to_string(tokens.size()) +
                                       " tokens");
  }
  if (tokens.empty()) fail(ErrorCode::RejectedInput, "draft_forward: empty input");
  if (features.back().size() != codebook_->dim()) {
    fail(ErrorCode::RejectedInput, "draft_forward: feature dimension mismatch");
  }
  if (tokens.back() >= codebook_->vocab()) {
    fail(ErrorCode::RejectedInput, "draft_forward: token out of range");
  }
  return advance(features.back(), tokens.back());
}

ProbDist DraftModel::forward(std::span<const Feature> features,
                             std::span<const TokenId> tokens) const {
  return readout(predict_feature(features, tokens));
}

bool DraftModel::operator==(const DraftModel& other) const {
  return *codebook_ == *other.codebook_ && mixed_rows_ == other.mixed_rows_ &&
         noise_ == other.noise_ && divergence_ == other.divergence_ &&
         smoothing_temperature_ == other.smoothing_temperature_ && seed_ == other.seed_;
}

ModelPair make_model_pair(const EngineConfig& config) {
  if (config.dim < 2) fail(ErrorCode::RejectedInput, "make_model_pair: dim must be >= 2");
  if (config.vocab < 4) fail(ErrorCode::RejectedInput, "make_model_pair: vocab must be >= 4");
  config.validate();

  const std::size_t v = config.vocab, d = config.dim;
  // Clustered codebook: groups of near-interchangeable tokens around shared
  // centers, one group per cluster_size consecutive ids.
  RngStream code_rng(config.model_seed, "model.codebook");
  std::vector<double> rows;
  rows.reserve(v * d);
  std::vector<double> center;
  for (std::size_t t = 0; t < v; ++t) {
    if (t % config.cluster_size == 0) center = unit_gaussian(code_rng, d);
    std::vector<double> r(d);
    double n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      r[i] = center[i] + config.cluster_spread * code_rng.normal() / std::sqrt(double(d));
      n2 += r[i] * r[i];
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (double x : r) rows.push_back(x * inv);
  }
  auto codebook = std::make_shared<const EmbeddingCodebook>(v, d, std::move(rows));

  RngStream mix_rng(config.model_seed, "model.mixing");
  auto target = std::make_shared<const TargetModel>(codebook, random_orthogonal(mix_rng, d),
                                                    config.window, config.temperature,
                                                    config.model_seed);
  auto draft = std::make_shared<const DraftModel>(*target, config.epsilon,
                                                  config.draft_temperature,
                                                  derive_seed(config.model_seed, "draft"));
  return {std::move(target), std::move(draft)};
}

std::vector<TokenId> make_prompt(const EngineConfig& config) {
  RngStream rng(config.model_seed, "prompt");
  std::vector<TokenId> prompt(config.window);
  for (auto& t : prompt) t = static_cast<TokenId>(rng.index(config.vocab));
  return prompt;
}

}  // namespace vvs

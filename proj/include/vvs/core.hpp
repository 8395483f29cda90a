#pragma once

// Foundational types shared by every module: token ids, dense probability
// distributions, the embedding codebook, and labeled random streams.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vvs {

using TokenId = std::uint32_t;

enum class ErrorCode {
  RejectedInput,
  DegenerateVector,
  DegenerateProposal,
  DegenerateResidual,
  CacheUnderflow,
  DegenerateTrace,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

// Where a generated token came from.
enum class Origin : std::uint8_t {
  Sampled,       // vanilla autoregressive draw from the target
  Verified,      // drafted token accepted by verification
  SkipAccepted,  // drafted token accepted without a target pass
  Resampled,     // terminal token drawn from the residual after a rejection
  Bonus,         // terminal token drawn after a fully accepted path
};

std::string_view to_string(Origin origin);

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<Origin> origins;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  void push_back(TokenId id, Origin origin) {
    ids.push_back(id);
    origins.push_back(origin);
  }
  bool operator==(const TokenSequence&) const = default;
};

// Dense distribution over the vocabulary. Construction validates the
// simplex constraints; use normalize() to build one from raw weights.
class ProbDist {
 public:
  ProbDist() = default;
  explicit ProbDist(std::vector<double> mass);

  static ProbDist point_mass(std::size_t vocab, TokenId token);
  static ProbDist uniform(std::size_t vocab);

  std::size_t size() const { return mass_.size(); }
  double operator[](TokenId t) const { return mass_[t]; }
  std::span<const double> mass() const { return mass_; }

  // Index of the largest entry; ties go to the smaller id.
  TokenId argmax() const;

  bool operator==(const ProbDist&) const = default;

 private:
  std::vector<double> mass_;
};

ProbDist normalize(std::span<const double> raw);

// Numerically stable softmax of a logit vector.
ProbDist softmax(std::span<const double> logits);

double total_variation(const ProbDist& a, const ProbDist& b);

double cosine(std::span<const double> a, std::span<const double> b);

class EmbeddingCodebook {
 public:
  EmbeddingCodebook() = default;
  // rows.size() must be vocab * dim, row-major.
  EmbeddingCodebook(std::size_t vocab, std::size_t dim,
                    std::vector<double> rows);

  std::size_t vocab() const { return vocab_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(TokenId t) const {
    return {rows_.data() + static_cast<std::size_t>(t) * dim_, dim_};
  }
  std::span<const double> data() const { return rows_; }

  bool operator==(const EmbeddingCodebook&) const = default;

 private:
  std::size_t vocab_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> rows_;
};

// The k tokens closest to t by cosine, t itself first, then descending
// similarity with ties broken by smaller id.
std::vector<TokenId> nearest_neighbors(const EmbeddingCodebook& codebook,
                                       TokenId t, std::size_t k);

// Per-token neighbor lists precomputed once for a codebook.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(const EmbeddingCodebook& codebook, std::size_t k);

  std::size_t k() const { return k_; }
  std::span<const TokenId> of(TokenId t) const {
    return {lists_.data() + static_cast<std::size_t>(t) * k_, k_};
  }

 private:
  std::size_t k_ = 0;
  std::vector<TokenId> lists_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// Deterministic stream keyed by (seed, label). mt19937_64 has a fixed output
// sequence by standard, and the conversions below avoid the
// implementation-defined std distributions, so draws match across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view label);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform integer on [0, n).
  std::size_t index(std::size_t n);
  double normal();
  // Inverse-CDF draw.
  TokenId sample(const ProbDist& dist);

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

}  // namespace vvs

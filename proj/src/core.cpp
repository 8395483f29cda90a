#include "vvs/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vvs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RejectedInput: return "RejectedInput";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DegenerateProposal: return "DegenerateProposal";
    case ErrorCode::DegenerateResidual: return "DegenerateResidual";
    case ErrorCode::CacheUnderflow: return "CacheUnderflow";
    case ErrorCode::DegenerateTrace: return "DegenerateTrace";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::Sampled: return "sampled";
    case Origin::Verified: return "verified";
    case Origin::SkipAccepted: return "skip-accepted";
    case Origin::Resampled: return "resampled";
    case Origin::Bonus: return "bonus";
  }
  return "unknown";
}

ProbDist::ProbDist(std::vector<double> mass) : mass_(std::move(mass)) {
  if (mass_.empty()) fail(ErrorCode::RejectedInput, "empty distribution");
  double sum = 0.0;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if (!(mass_[i] >= 0.0) || !std::isfinite(mass_[i])) {
      fail(ErrorCode::RejectedInput,
           "distribution entry " + std::to_string(i) + " is not a probability");
    }
    sum += mass_[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(ErrorCode::RejectedInput,
         "distribution sums to " + std::to_string(sum));
  }
}

ProbDist ProbDist::point_mass(std::size_t vocab, TokenId token) {
  std::vector<double> mass(vocab, 0.0);
  mass.at(token) = 1.0;
  return ProbDist(std::move(mass));
}

ProbDist ProbDist::uniform(std::size_t vocab) {
  return ProbDist(std::vector<double>(vocab, 1.0 / static_cast<double>(vocab)));
}

TokenId ProbDist::argmax() const {
  TokenId best = 0;
  for (TokenId t = 1; t < mass_.size(); ++t) {
    if (mass_[t] > mass_[best]) best = t;
  }
  return best;
}

ProbDist normalize(std::span<const double> raw) {
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] >= 0.0) || !std::isfinite(raw[i])) {
      fail(ErrorCode::RejectedInput,
           "normalize: entry " + std::to_string(i) + " is negative or not finite");
    }
    sum += raw[i];
  }
  if (!(sum > 0.0)) {
    fail(ErrorCode::RejectedInput, "normalize: all entries are zero (index 0)");
  }
  std::vector<double> mass(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) mass[i] = raw[i] / sum;
  return ProbDist(std::move(mass));
}

ProbDist softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) w[i] = std::exp(logits[i] - top);
  return normalize(w);
}

double total_variation(const ProbDist& a, const ProbDist& b) {
  if (a.size() != b.size()) fail(ErrorCode::RejectedInput, "tv: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += std::abs(a.mass()[i] - b.mass()[i]);
  }
  return 0.5 * acc;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::RejectedInput, "cosine: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::DegenerateVector, "cosine: zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingCodebook::EmbeddingCodebook(std::size_t vocab, std::size_t dim,
                                     std::vector<double> rows)
    : vocab_(vocab), dim_(dim), rows_(std::move(rows)) {
  if (dim_ < 2) fail(ErrorCode::RejectedInput, "codebook: dim must be >= 2");
  if (vocab_ < 1) fail(ErrorCode::RejectedInput, "codebook: empty vocabulary");
  if (rows_.size() != vocab_ * dim_) {
    fail(ErrorCode::RejectedInput, "codebook: row data has wrong size");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!std::isfinite(rows_[i])) {
      fail(ErrorCode::RejectedInput,
           "codebook: non-finite entry in row " + std::to_string(i / dim_));
    }
  }
  // Distinct rows: sort row indices lexicographically and compare neighbors.
  std::vector<std::size_t> order(vocab_);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    auto ra = row(static_cast<TokenId>(a)), rb = row(static_cast<TokenId>(b));
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  };
  std::sort(order.begin(), order.end(), less);
  for (std::size_t i = 1; i < order.size(); ++i) {
    auto ra = row(static_cast<TokenId>(order[i - 1]));
    auto rb = row(static_cast<TokenId>(order[i]));
    if (std::equal(ra.begin(), ra.end(), rb.begin())) {
      fail(ErrorCode::RejectedInput, "codebook: rows " + std::to_string(order[i - 1]) +
                                         " and " + std::to_string(order[i]) +
                                         " are identical");
    }
  }
}

std::vector<TokenId> nearest_neighbors(const EmbeddingCodebook& codebook,
                                       TokenId t, std::size_t k) {
  const std::size_t vocab = codebook.vocab();
  if (k < 1 || k > vocab) {
    fail(ErrorCode::RejectedInput, "nearest_neighbors: k=" + std::to_string(k) +
                                       " outside [1, " + std::to_string(vocab) + "]");
  }
  if (t >= vocab) fail(ErrorCode::RejectedInput, "nearest_neighbors: token out of range");

  std::vector<std::pair<double, TokenId>> scored;
  scored.reserve(vocab - 1);
  const auto anchor = codebook.row(t);
  for (TokenId other = 0; other < vocab; ++other) {
    if (other == t) continue;
    scored.emplace_back(cosine(anchor, codebook.row(other)), other);
  }
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  const std::size_t rest = k - 1;
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(rest),
                    scored.end(), better);
  std::vector<TokenId> out;
  out.reserve(k);
  out.push_back(t);
  for (std::size_t i = 0; i < rest; ++i) out.push_back(scored[i].second);
  return out;
}

NeighborIndex::NeighborIndex(const EmbeddingCodebook& codebook, std::size_t k)
    : k_(std::min(k, codebook.vocab())) {
  lists_.reserve(codebook.vocab() * k_);
  for (TokenId t = 0; t < codebook.vocab(); ++t) {
    auto row = nearest_neighbors(codebook, t, k_);
    lists_.insert(lists_.end(), row.begin(), row.end());
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return splitmix64(splitmix64(seed) ^ fnv1a(label));
}

RngStream::RngStream(std::uint64_t seed, std::string_view label)
    : seed_(seed), label_(label), engine_(derive_seed(seed, label)) {}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) fail(ErrorCode::RejectedInput, "RngStream::index: empty range");
  auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

double RngStream::normal() {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

TokenId RngStream::sample(const ProbDist& dist) {
  const double u = uniform();
  double cum = 0.0;
  TokenId last_positive = 0;
  for (TokenId t = 0; t < dist.size(); ++t) {
    const double m = dist[t];
    if (m <= 0.0) continue;
    cum += m;
    last_positive = t;
    if (u < cum) return t;
  }
  return last_positive;
}

}  // namespace vvs

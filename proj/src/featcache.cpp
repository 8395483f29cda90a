#include "vvs/featcache.hpp"

#include <algorithm>
#include <ostream>

namespace vvs {

void FeatureCache::update(std::span<const std::size_t> positions,
                          std::span<const Feature> features, std::uint64_t step,
                          CacheOrigin origin) {
  if (positions.size() != features.size()) {
    fail(ErrorCode::RejectedInput, "cache update: " + std::to_string(positions.size()) +
                                       " positions for " + std::to_string(features.size()) +
                                       " features");
  }
  for (std::size_t i = 1; i < positions.size(); ++i) {
    if (positions[i] <= positions[i - 1]) {
      fail(ErrorCode::RejectedInput, "cache update: positions must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t pos = positions[i];
    if (pos >= entries_.size()) entries_.resize(pos + 1);
    if (!entries_[pos]) ++count_;
    entries_[pos] = CachedFeature{pos, features[i], step, origin};
    high_water_ = std::max(high_water_, pos + 1);
  }
}

std::vector<RetrievedFeature> FeatureCache::collect(std::size_t count, std::uint64_t max_step,
                                                    std::uint64_t as_of) const {
  std::vector<RetrievedFeature> out;
  if (count == 0) return out;
  for (std::size_t pos = entries_.size(); pos-- > 0 && out.size() < count;) {
    const auto& e = entries_[pos];
    if (!e || e->step > max_step) continue;
    out.push_back({e->position, e->feature, as_of - e->step});
  }
  if (out.size() < count) {
    fail(ErrorCode::CacheUnderflow, "cache: requested " + std::to_string(count) +
                                        " features, short by " +
                                        std::to_string(count - out.size()));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<RetrievedFeature> FeatureCache::retrieve_latest(std::size_t count,
                                                            std::uint64_t as_of) const {
  return collect(count, as_of, as_of);
}

std::vector<RetrievedFeature> FeatureCache::retrieve_with_offset(std::size_t count,
                                                                 std::uint64_t extra,
                                                                 std::uint64_t as_of) const {
  if (count == 0) return {};
  const auto latest = latest_step(as_of);
  if (!latest || *latest < extra) {
    fail(ErrorCode::CacheUnderflow, "cache: no history " + std::to_string(extra) +
                                        " steps back, short by " + std::to_string(count));
  }
  return collect(count, *latest - extra, as_of);
}

const CachedFeature* FeatureCache::entry(std::size_t position) const {
  if (position >= entries_.size() || !entries_[position]) return nullptr;
  return &*entries_[position];
}

std::optional<std::uint64_t> FeatureCache::latest_step(std::uint64_t as_of) const {
  std::optional<std::uint64_t> best;
  for (const auto& e : entries_) {
    if (e && e->step <= as_of && (!best || e->step > *best)) best = e->step;
  }
  return best;
}

std::optional<std::uint64_t> FeatureCache::earliest_step() const {
  std::optional<std::uint64_t> best;
  for (const auto& e : entries_) {
    if (e && (!best || e->step < *best)) best = e->step;
  }
  return best;
}

void FeatureCache::write_csv(std::ostream& out, std::uint64_t as_of) const {
  out << "position,step,lag\n";
  for (const auto& e : entries_) {
    if (!e || e->step > as_of) continue;
    out << e->position << ',' << e->step << ',' << (as_of - e->step) << '\n';
  }
}

}  // namespace vvs

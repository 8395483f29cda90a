#pragma once

// Position-indexed store of target features, each tagged with the
// iteration that produced it. Unbounded: desk-scale runs hold a few hundred
// positions.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vvs/toymodel.hpp"

namespace vvs {

enum class CacheOrigin : std::uint8_t { Verified, PostVerified };

struct CachedFeature {
  std::size_t position = 0;
  Feature feature;
  std::uint64_t step = 0;
  CacheOrigin origin = CacheOrigin::Verified;
};

struct RetrievedFeature {
  std::size_t position = 0;
  Feature feature;
  std::uint64_t lag = 0;  // as_of - produced step
};

class FeatureCache {
 public:
  // positions strictly increasing and aligned with features. Existing
  // entries are overwritten.
  void update(std::span<const std::size_t> positions, std::span<const Feature> features,
              std::uint64_t step, CacheOrigin origin);

  // The count highest-position entries produced at or before as_of, in
  // position order. CacheUnderflow reports the deficit.
  std::vector<RetrievedFeature> retrieve_latest(std::size_t count, std::uint64_t as_of) const;

  // As retrieve_latest, restricted to entries produced at or before
  // (latest cached step - extra), where latest is taken among entries
  // visible at as_of.
  std::vector<RetrievedFeature> retrieve_with_offset(std::size_t count, std::uint64_t extra,
                                                     std::uint64_t as_of) const;

  const CachedFeature* entry(std::size_t position) const;
  std::size_t size() const { return count_; }
  std::size_t high_water() const { return high_water_; }
  std::optional<std::uint64_t> latest_step(std::uint64_t as_of) const;
  std::optional<std::uint64_t> earliest_step() const;

  // CSV: position,step,lag
  void write_csv(std::ostream& out, std::uint64_t as_of) const;

 private:
  std::vector<RetrievedFeature> collect(std::size_t count, std::uint64_t max_step,
                                        std::uint64_t as_of) const;

  std::vector<std::optional<CachedFeature>> entries_;
  std::size_t count_ = 0;
  std::size_t high_water_ = 0;  // one past the highest written position
};

}  // namespace vvs

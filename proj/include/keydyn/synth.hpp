#pragma once

// Seeded synthetic typists. Timing model: press-to-press intervals and hold
// times are clamped normals around per-user means, with optional forced
// rollover and (in the freestyle phase) linear drift plus 25% extra jitter.

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "keydyn/events.hpp"

namespace keydyn {

inline constexpr double kHoldFloorMs = 5.0;
inline constexpr double kIntervalFloorMs = 1.0;
inline constexpr double kFreestyleJitterScale = 1.25;

struct TypistProfile {
  std::string user_id;
  double hold_mean_ms = 80.0;
  double hold_jitter_ms = 5.0;
  double dd_mean_ms = 150.0;
  double dd_jitter_ms = 10.0;
  double rollover_prob = 0.0;
  double drift_per_1000 = 0.0;
  std::uint64_t seed = 0;

  /// Throws InvalidProfile.
  void validate() const;

  friend bool operator==(const TypistProfile&, const TypistProfile&) = default;
};

struct CohortSpec {
  std::vector<TypistProfile> profiles;
  std::size_t strokes_per_user = 2000;

  friend bool operator==(const CohortSpec&, const CohortSpec&) = default;
};

/// mt19937_64 plus hand-rolled distributions; the standard distribution
/// classes are implementation-defined and would break cross-platform
/// reproducibility.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  /// Uniform on (0, 1].
  double uniform();
  double normal(double mean, double stddev);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

KeystrokeLog generate_log(const TypistProfile& profile, std::size_t strokes, Phase phase);

/// Users on a (hold mean x interval mean) grid spanning [60, 140] x
/// [110, 260] ms, seeded perturbations, pairwise separation >= 8 ms.
/// Throws TooFewUsers for n < 2.
CohortSpec default_cohort(std::size_t n_users, std::uint64_t master_seed,
                          std::size_t strokes_per_user = 2000);

/// Parameter-space distance used for the separation guarantee:
/// max(|d hold mean|, |d interval mean|).
double profile_separation(const TypistProfile& a, const TypistProfile& b);

std::string serialize_cohort(const CohortSpec& spec);
CohortSpec parse_cohort(std::string_view text);

}  // namespace keydyn

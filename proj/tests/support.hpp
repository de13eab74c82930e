#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "keydyn/events.hpp"
#include "keydyn/features.hpp"
#include "keydyn/synth.hpp"

namespace testing_support {

/// Random well-formed log; holds may exceed the next press gap (rollover),
/// and press gaps may be zero.
inline keydyn::KeystrokeLog random_log(keydyn::SeededRng& rng, std::size_t strokes,
                                       std::string user = "r", keydyn::Phase phase = keydyn::Phase::Prompted) {
  std::vector<keydyn::Stroke> s;
  std::uint64_t id = rng.below(1000);
  keydyn::Micros press{static_cast<std::int64_t>(rng.below(5'000'000))};
  for (std::size_t i = 0; i < strokes; ++i) {
    const keydyn::Micros hold{static_cast<std::int64_t>(rng.below(400'000))};
    s.push_back({id, press, press + hold});
    id += 1 + rng.below(3);
    press = press + keydyn::Micros{static_cast<std::int64_t>(rng.below(300'000))};
  }
  return keydyn::KeystrokeLog::from_strokes(std::move(user), phase, std::move(s));
}

/// Random raw feature rows (ms) not tied to any log.
inline keydyn::FeatureMatrix random_features(keydyn::SeededRng& rng, std::size_t rows,
                                             double spread_ms = 40.0) {
  keydyn::FeatureMatrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    auto draw = [&](double mean) {
      return keydyn::Micros{std::llround(rng.normal(mean, spread_ms) * 1000.0)};
    };
    m.rows.push_back({draw(90.0), draw(40.0), draw(130.0), draw(130.0)});
  }
  return m;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("keydyn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support

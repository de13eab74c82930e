#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "keydyn/events.hpp"

namespace keydyn {

/// Timing features of one consecutive stroke pair (i, i+1).
///   hold = R_i - P_i, ud = P_{i+1} - R_i, dd = P_{i+1} - P_i, uu = R_{i+1} - R_i
/// Kept in integer microseconds so dd == hold + ud holds exactly.
struct DigraphFeatures {
  Micros hold;
  Micros ud;
  Micros dd;
  Micros uu;

  friend bool operator==(const DigraphFeatures&, const DigraphFeatures&) = default;
};

struct FeatureMatrix {
  std::vector<DigraphFeatures> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

inline constexpr std::size_t kFeatureDim = 4;
using Point = std::array<double, kFeatureDim>;
using Points = std::vector<Point>;

/// (hold, ud, dd, uu) in milliseconds.
Point to_point(const DigraphFeatures& f);
Points to_points(const FeatureMatrix& m);

inline constexpr double kStdFloor = 1e-6;

struct Scaler {
  Point mean{0.0, 0.0, 0.0, 0.0};
  Point std{1.0, 1.0, 1.0, 1.0};

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

FeatureMatrix extract_features(const KeystrokeLog& log);

/// Appends b's rows after a's. Rows never link across the seam.
FeatureMatrix concat(const FeatureMatrix& a, const FeatureMatrix& b);

/// Per-column mean and population std, std floored at kStdFloor.
/// Throws InsufficientData for fewer than two rows.
Scaler fit_scaler(std::span<const Point> train);
Scaler fit_scaler(const FeatureMatrix& train);

Point apply_scaler(const Point& x, const Scaler& s);
Points apply_scaler(std::span<const Point> m, const Scaler& s);

/// CSV dump: header `hold_ms,ud_ms,dd_ms,uu_ms`, six decimals per value.
std::string features_csv(const FeatureMatrix& m);

}  // namespace keydyn

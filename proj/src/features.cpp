#include "keydyn/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "keydyn/error.hpp"

namespace keydyn {

Point to_point(const DigraphFeatures& f) {
  return {f.hold.ms(), f.ud.ms(), f.dd.ms(), f.uu.ms()};
}

Points to_points(const FeatureMatrix& m) {
  Points out;
  out.reserve(m.size());
  for (const auto& r : m.rows) out.push_back(to_point(r));
  return out;
}

FeatureMatrix extract_features(const KeystrokeLog& log) {
  const auto& s = log.strokes();
  FeatureMatrix m;
  if (s.size() < 2) return m;
  m.rows.reserve(s.size() - 1);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const auto& a = s[i];
    const auto& b = s[i + 1];
    m.rows.push_back({a.release - a.press, b.press - a.release, b.press - a.press,
                      b.release - a.release});
  }
  return m;
}

FeatureMatrix concat(const FeatureMatrix& a, const FeatureMatrix& b) {
  FeatureMatrix out;
  out.rows.reserve(a.size() + b.size());
  out.rows.insert(out.rows.end(), a.rows.begin(), a.rows.end());
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  return out;
}

Scaler fit_scaler(std::span<const Point> train) {
  if (train.size() < 2)
    throw Error(Errc::InsufficientData, "scaler needs >= 2 rows, got " + std::to_string(train.size()));
  const double n = static_cast<double>(train.size());
  Scaler s;
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    double sum = 0.0;
    for (const auto& r : train) sum += r[c];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : train) {
      const double d = r[c] - mean;
      ss += d * d;
    }
    s.mean[c] = mean;
    s.std[c] = std::max(std::sqrt(ss / n), kStdFloor);
  }
  return s;
}

Scaler fit_scaler(const FeatureMatrix& train) {
  auto pts = to_points(train);
  return fit_scaler(std::span<const Point>(pts));
}

Point apply_scaler(const Point& x, const Scaler& s) {
  Point out;
  for (std::size_t c = 0; c < kFeatureDim; ++c) out[c] = (x[c] - s.mean[c]) / s.std[c];
  return out;
}

Points apply_scaler(std::span<const Point> m, const Scaler& s) {
  Points out;
  out.reserve(m.size());
  for (const auto& r : m) out.push_back(apply_scaler(r, s));
  return out;
}

std::string features_csv(const FeatureMatrix& m) {
  std::string out = "hold_ms,ud_ms,dd_ms,uu_ms\n";
  char buf[128];
  for (const auto& r : m.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f\n", r.hold.ms(), r.ud.ms(), r.dd.ms(),
                  r.uu.ms());
    out += buf;
  }
  return out;
}

}  // namespace keydyn

#include "keydyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "keydyn/error.hpp"
#include "keydyn/text.hpp"

namespace keydyn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

double SeededRng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double SeededRng::normal(double mean, double stddev) {
  double z;
  if (has_spare_) {
    has_spare_ = false;
    z = spare_;
  } else {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    z = r * std::cos(theta);
    spare_ = r * std::sin(theta);
    has_spare_ = true;
  }
  return mean + stddev * z;
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

void TypistProfile::validate() const {
  auto fail = [&](const std::string& why) {
    throw Error(Errc::InvalidProfile, "user=" + user_id + " " + why);
  };
  if (user_id.empty() || user_id.find_first_of(" ,=\n\r#") != std::string::npos)
    fail("user_id must be non-empty without spaces, commas or '='");
  if (!(hold_jitter_ms >= 0.0) || !(hold_mean_ms > 3.0 * hold_jitter_ms))
    fail("need hold_mean > 3 * hold_jitter >= 0");
  if (!(dd_jitter_ms >= 0.0) || !(dd_mean_ms > 3.0 * dd_jitter_ms))
    fail("need dd_mean > 3 * dd_jitter >= 0");
  if (!(rollover_prob >= 0.0 && rollover_prob <= 1.0)) fail("rollover_prob outside [0, 1]");
  if (!std::isfinite(drift_per_1000)) fail("drift must be finite");
}

namespace {

Micros to_micros(double ms) { return Micros{std::llround(ms * 1000.0)}; }

double clamped_normal(SeededRng& rng, double mean, double stddev, double floor) {
  return std::max(rng.normal(mean, stddev), floor);
}

}  // namespace

KeystrokeLog generate_log(const TypistProfile& profile, std::size_t strokes, Phase phase) {
  profile.validate();
  const bool freestyle = phase == Phase::Freestyle;
  const double jitter_scale = freestyle ? kFreestyleJitterScale : 1.0;
  const double hold_jitter = profile.hold_jitter_ms * jitter_scale;
  const double dd_jitter = profile.dd_jitter_ms * jitter_scale;

  SeededRng rng(profile.seed ^ (freestyle ? 0x46524545ULL : 0x50524f4dULL));
  std::vector<Stroke> out;
  out.reserve(strokes);
  Micros press{0};
  for (std::size_t i = 0; i < strokes; ++i) {
    const double shift = freestyle ? profile.drift_per_1000 * static_cast<double>(i) / 1000.0 : 0.0;
    double hold = clamped_normal(rng, profile.hold_mean_ms + shift, hold_jitter, kHoldFloorMs);
    const double gap = clamped_normal(rng, profile.dd_mean_ms + shift, dd_jitter, kIntervalFloorMs);
    // Always draw, so the stream layout does not depend on rollover_prob.
    const double roll = rng.uniform();
    const double overlap = clamped_normal(rng, 0.2 * profile.hold_mean_ms, hold_jitter, 1.0);
    if (roll <= profile.rollover_prob && profile.rollover_prob > 0.0) hold = std::max(hold, gap + overlap);

    const Micros hold_us = std::max(to_micros(hold), Micros{1});
    out.push_back(Stroke{i, press, press + hold_us});
    press = press + to_micros(gap);
  }
  return KeystrokeLog::from_strokes(profile.user_id, phase, std::move(out));
}

double profile_separation(const TypistProfile& a, const TypistProfile& b) {
  return std::max(std::abs(a.hold_mean_ms - b.hold_mean_ms), std::abs(a.dd_mean_ms - b.dd_mean_ms));
}

CohortSpec default_cohort(std::size_t n_users, std::uint64_t master_seed,
                          std::size_t strokes_per_user) {
  if (n_users < 2) throw Error(Errc::TooFewUsers, "need >= 2 users, got " + std::to_string(n_users));

  constexpr double kHoldLo = 60.0, kHoldHi = 140.0;
  constexpr double kDdLo = 110.0, kDdHi = 260.0;
  constexpr double kMinSeparation = 8.0;

  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_users))));
  const auto rows = (n_users + cols - 1) / cols;
  const double hold_step = (kHoldHi - kHoldLo) / static_cast<double>(cols - 1);
  const double dd_step = rows > 1 ? (kDdHi - kDdLo) / static_cast<double>(rows - 1) : 0.0;
  // Perturbations stay small enough that grid neighbours keep their margin.
  const double hold_wiggle = std::clamp((hold_step - kMinSeparation) / 4.0, 0.0, 2.0);
  const double dd_wiggle = rows > 1 ? std::clamp((dd_step - kMinSeparation) / 4.0, 0.0, 5.0) : 0.0;

  const int width = static_cast<int>(std::to_string(n_users - 1).size());
  SeededRng rng(master_seed);
  CohortSpec spec;
  spec.strokes_per_user = strokes_per_user;
  for (std::size_t k = 0; k < n_users; ++k) {
    TypistProfile p;
    std::string num = std::to_string(k);
    p.user_id = "u" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
    const auto col = k % cols;
    const auto row = k / cols;
    const double hold_base = kHoldLo + hold_step * static_cast<double>(col);
    const double dd_base = rows > 1 ? kDdLo + dd_step * static_cast<double>(row) : (kDdLo + kDdHi) / 2.0;
    p.hold_mean_ms = std::clamp(hold_base + (2.0 * rng.uniform() - 1.0) * hold_wiggle, kHoldLo, kHoldHi);
    p.dd_mean_ms = std::clamp(dd_base + (2.0 * rng.uniform() - 1.0) * dd_wiggle, kDdLo, kDdHi);
    p.hold_jitter_ms = 3.0 + 2.0 * rng.uniform();
    p.dd_jitter_ms = 6.0 + 4.0 * rng.uniform();
    p.rollover_prob = 0.03 * rng.uniform();
    p.drift_per_1000 = 4.0 * rng.uniform() - 2.0;
    p.seed = splitmix64(master_seed + 0x1000 + k);
    spec.profiles.push_back(std::move(p));
  }

  for (std::size_t a = 0; a < n_users; ++a)
    for (std::size_t b = a + 1; b < n_users; ++b)
      if (profile_separation(spec.profiles[a], spec.profiles[b]) < kMinSeparation)
        throw Error(Errc::InvalidArgument, "cohort of " + std::to_string(n_users) +
                                               " users cannot keep 8 ms separation");
  return spec;
}

namespace {
constexpr std::string_view kCohortHeader = "keydyn-cohort v1";
constexpr std::string_view kCohortColumns =
    "user_id,hold_mean_ms,hold_jitter_ms,dd_mean_ms,dd_jitter_ms,rollover_prob,drift_per_1000,seed";
}  // namespace

std::string serialize_cohort(const CohortSpec& spec) {
  std::string out;
  out += kCohortHeader;
  out += "\nstrokes_per_user=" + std::to_string(spec.strokes_per_user) + "\n";
  out += kCohortColumns;
  out += '\n';
  for (const auto& p : spec.profiles) {
    out += p.user_id + "," + text::format_real(p.hold_mean_ms) + "," +
           text::format_real(p.hold_jitter_ms) + "," + text::format_real(p.dd_mean_ms) + "," +
           text::format_real(p.dd_jitter_ms) + "," + text::format_real(p.rollover_prob) + "," +
           text::format_real(p.drift_per_1000) + "," + std::to_string(p.seed) + "\n";
  }
  return out;
}

CohortSpec parse_cohort(std::string_view src) {
  auto ls = text::lines(src);
  if (ls.empty() || !ls[0].starts_with("keydyn-cohort "))
    throw Error(Errc::MalformedLine, "not a cohort file");
  if (ls[0] != kCohortHeader) throw Error(Errc::VersionMismatch, std::string(ls[0]));
  if (ls.size() < 3 || !ls[1].starts_with("strokes_per_user=") || ls[2] != kCohortColumns)
    throw Error(Errc::MalformedLine, "bad cohort header");

  CohortSpec spec;
  std::uint64_t strokes = 0;
  if (!text::parse_uint(ls[1].substr(17), strokes)) throw Error(Errc::MalformedLine, "strokes_per_user");
  spec.strokes_per_user = strokes;

  std::set<std::string> seen;
  for (std::size_t n = 3; n < ls.size(); ++n) {
    if (ls[n].empty()) continue;
    auto f = text::split(ls[n], ',');
    const auto where = "line=" + std::to_string(n + 1);
    if (f.size() != 8) throw Error(Errc::MalformedLine, where);
    TypistProfile p;
    p.user_id = std::string(f[0]);
    double* reals[] = {&p.hold_mean_ms, &p.hold_jitter_ms, &p.dd_mean_ms,
                       &p.dd_jitter_ms, &p.rollover_prob,  &p.drift_per_1000};
    for (std::size_t k = 0; k < 6; ++k)
      if (!text::parse_real(f[k + 1], *reals[k])) throw Error(Errc::MalformedLine, where);
    if (!text::parse_uint(f[7], p.seed)) throw Error(Errc::MalformedLine, where);
    p.validate();
    if (!seen.insert(p.user_id).second) throw Error(Errc::InvalidProfile, "duplicate user_id " + p.user_id);
    spec.profiles.push_back(std::move(p));
  }
  return spec;
}

}  // namespace keydyn

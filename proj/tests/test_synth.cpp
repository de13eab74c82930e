#include <doctest.h>

#include <cmath>
#include <set>

#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/synth.hpp"

using namespace keydyn;

TEST_CASE("degenerate profiles") {
  const TypistProfile flat{"flat", 80, 0, 130, 0, 0.0, 0.0, 1};
  CHECK(stroke_count(generate_log(flat, 0, Phase::Prompted)) == 0);
  const auto m = extract_features(generate_log(flat, 200, Phase::Prompted));
  REQUIRE(m.size() == 199);
  for (const auto& r : m.rows) {
    REQUIRE(r.hold == Micros::from_ms(80));
    REQUIRE(r.ud == Micros::from_ms(50));
    REQUIRE(r.dd == Micros::from_ms(130));
    REQUIRE(r.uu == Micros::from_ms(130));
  }
}

TEST_CASE("seeded determinism") {
  const TypistProfile p{"p", 90, 6, 160, 12, 0.05, 1.5, 77};
  for (Phase phase : {Phase::Prompted, Phase::Freestyle})
    CHECK(serialize_log(generate_log(p, 500, phase)) == serialize_log(generate_log(p, 500, phase)));
  auto q = p;
  q.seed = 78;
  CHECK(generate_log(p, 500, Phase::Prompted) != generate_log(q, 500, Phase::Prompted));
  CHECK(generate_log(p, 500, Phase::Prompted).strokes() != generate_log(p, 500, Phase::Freestyle).strokes());
}

TEST_CASE("invalid profiles") {
  auto code = [](TypistProfile p) {
    try {
      generate_log(p, 10, Phase::Prompted);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Io;
  };
  CHECK(code({"a", 10, 5, 130, 5, 0, 0, 1}) == Errc::InvalidProfile);
  CHECK(code({"a", 80, 5, 10, 5, 0, 0, 1}) == Errc::InvalidProfile);
  CHECK(code({"a", 80, 5, 130, 5, 1.5, 0, 1}) == Errc::InvalidProfile);
  CHECK(code({"", 80, 5, 130, 5, 0, 0, 1}) == Errc::InvalidProfile);
  CHECK(code({"a b", 80, 5, 130, 5, 0, 0, 1}) == Errc::InvalidProfile);
}

TEST_CASE("sampler means match the profile") {
  const TypistProfile p{"m", 95, 6, 170, 12, 0.0, 0.0, 5};
  const auto log = generate_log(p, 2000, Phase::Prompted);
  double hold = 0.0, dd = 0.0;
  for (const auto& s : log.strokes()) hold += s.hold().ms();
  const auto m = extract_features(log);
  for (const auto& r : m.rows) dd += r.dd.ms();
  hold /= 2000.0;
  dd /= static_cast<double>(m.size());
  CHECK(std::abs(hold - p.hold_mean_ms) <= 3.0 * p.hold_jitter_ms / std::sqrt(2000.0));
  CHECK(std::abs(dd - p.dd_mean_ms) <= 3.0 * p.dd_jitter_ms / std::sqrt(1999.0));
}

TEST_CASE("rollover probability produces negative ud") {
  const TypistProfile p{"r", 80, 5, 150, 10, 0.4, 0.0, 9};
  const auto m = extract_features(generate_log(p, 2000, Phase::Prompted));
  std::size_t negative = 0;
  for (const auto& r : m.rows) negative += r.ud.count < 0;
  const double frac = static_cast<double>(negative) / static_cast<double>(m.size());
  CHECK(frac > 0.35);
  CHECK(frac < 0.45);
}

TEST_CASE("generated logs survive the text format") {
  const auto spec = default_cohort(4, 3, 300);
  for (const auto& p : spec.profiles)
    for (Phase phase : {Phase::Prompted, Phase::Freestyle}) {
      const auto log = generate_log(p, 300, phase);
      CHECK(parse_log(serialize_log(log)) == log);
    }
}

TEST_CASE("default cohort") {
  const auto two = default_cohort(2, 1);
  REQUIRE(two.profiles.size() == 2);
  CHECK(two.profiles[0].user_id != two.profiles[1].user_id);
  CHECK(two == default_cohort(2, 1));
  CHECK(two != default_cohort(2, 2));

  const auto twenty = default_cohort(20, 42);
  REQUIRE(twenty.profiles.size() == 20);
  CHECK(twenty.strokes_per_user == 2000);
  std::set<std::string> ids;
  std::set<std::uint64_t> seeds;
  for (const auto& p : twenty.profiles) {
    ids.insert(p.user_id);
    seeds.insert(p.seed);
    CHECK(p.hold_mean_ms >= 60.0);
    CHECK(p.hold_mean_ms <= 140.0);
    CHECK(p.dd_mean_ms >= 110.0);
    CHECK(p.dd_mean_ms <= 260.0);
    CHECK_NOTHROW(p.validate());
  }
  CHECK(ids.size() == 20);
  CHECK(seeds.size() == 20);
  for (std::size_t a = 0; a < 20; ++a)
    for (std::size_t b = a + 1; b < 20; ++b)
      CHECK(profile_separation(twenty.profiles[a], twenty.profiles[b]) >= 8.0);

  try {
    default_cohort(1, 1);
    FAIL("expected TooFewUsers");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::TooFewUsers);
  }
}

TEST_CASE("cohort file") {
  const auto spec = default_cohort(5, 11, 1000);
  const auto text = serialize_cohort(spec);
  CHECK(text.starts_with("keydyn-cohort v1\n"));
  CHECK(parse_cohort(text) == spec);
  auto old = text;
  old.replace(0, 16, "keydyn-cohort v0");
  CHECK_THROWS_AS(parse_cohort(old), Error);
  auto dup = text + spec.profiles[0].user_id + ",80,5,150,10,0,0,1\n";
  CHECK_THROWS_AS(parse_cohort(dup), Error);
}

TEST_CASE("rng helpers") {
  SeededRng a(5), b(5);
  for (int k = 0; k < 100; ++k) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
  SeededRng c(1);
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 500; ++k) {
    const auto v = c.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

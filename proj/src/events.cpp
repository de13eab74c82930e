#include "keydyn/events.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "keydyn/error.hpp"
#include "keydyn/text.hpp"

namespace keydyn {

namespace {

constexpr std::string_view kHeaderPrefix = "# keydyn-log ";

std::string id_detail(std::uint64_t id) { return "stroke_id=" + std::to_string(id); }

// Milliseconds with at most three decimals, converted exactly to microseconds.
bool parse_ms(std::string_view s, Micros& out) {
  auto dot = s.find('.');
  auto whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() || frac.size() > 3) return false;
  if (dot != std::string_view::npos && frac.empty()) return false;
  for (char c : whole)
    if (c < '0' || c > '9') return false;
  for (char c : frac)
    if (c < '0' || c > '9') return false;
  std::uint64_t w = 0;
  if (!text::parse_uint(whole, w) || w > 9'000'000'000'000ULL) return false;
  std::int64_t us = static_cast<std::int64_t>(w) * 1000;
  std::int64_t scale = 100;
  for (char c : frac) {
    us += (c - '0') * scale;
    scale /= 10;
  }
  out = Micros{us};
  return true;
}

std::string format_ms(Micros t) {
  auto whole = t.count / 1000;
  auto frac = t.count % 1000;
  std::string f = std::to_string(frac);
  return std::to_string(whole) + "." + std::string(3 - f.size(), '0') + f;
}

void check_press_order(const std::vector<Stroke>& strokes) {
  for (std::size_t i = 1; i < strokes.size(); ++i) {
    if (strokes[i].id <= strokes[i - 1].id || strokes[i].press < strokes[i - 1].press)
      throw Error(Errc::NonMonotonicPress, id_detail(strokes[i].id));
  }
}

}  // namespace

std::string_view to_string(Phase p) {
  return p == Phase::Prompted ? "prompted" : "freestyle";
}

Phase parse_phase(std::string_view s) {
  if (s == "prompted") return Phase::Prompted;
  if (s == "freestyle") return Phase::Freestyle;
  throw Error(Errc::InvalidArgument, "phase=" + std::string(s));
}

KeystrokeLog KeystrokeLog::from_events(std::string user_id, Phase phase,
                                       const std::vector<KeyEvent>& events) {
  struct Partial {
    std::optional<Micros> press, release;
  };
  std::map<std::uint64_t, Partial> by_id;
  for (const auto& e : events) {
    if (e.t.count < 0) throw Error(Errc::MalformedLine, "negative timestamp " + id_detail(e.stroke_id));
    auto& p = by_id[e.stroke_id];
    auto& slot = e.kind == KeyKind::Press ? p.press : p.release;
    if (slot) throw Error(Errc::DuplicateStrokeKind, id_detail(e.stroke_id));
    slot = e.t;
  }

  std::vector<Stroke> strokes;
  strokes.reserve(by_id.size());
  for (const auto& [id, p] : by_id) {
    if (!p.press || !p.release) throw Error(Errc::OrphanStroke, id_detail(id));
    if (*p.release < *p.press) throw Error(Errc::NegativeHold, id_detail(id));
    strokes.push_back(Stroke{id, *p.press, *p.release});
  }
  // by_id iterates in id order, which must coincide with press order.
  check_press_order(strokes);

  KeystrokeLog log;
  log.user_id_ = std::move(user_id);
  log.phase_ = phase;
  log.strokes_ = std::move(strokes);
  return log;
}

KeystrokeLog KeystrokeLog::from_strokes(std::string user_id, Phase phase,
                                        std::vector<Stroke> strokes) {
  for (const auto& s : strokes) {
    if (s.press.count < 0) throw Error(Errc::MalformedLine, "negative timestamp " + id_detail(s.id));
    if (s.release < s.press) throw Error(Errc::NegativeHold, id_detail(s.id));
  }
  check_press_order(strokes);
  KeystrokeLog log;
  log.user_id_ = std::move(user_id);
  log.phase_ = phase;
  log.strokes_ = std::move(strokes);
  return log;
}

std::vector<KeyEvent> KeystrokeLog::events() const {
  std::vector<KeyEvent> out;
  out.reserve(strokes_.size() * 2);
  for (const auto& s : strokes_) {
    out.push_back({s.id, KeyKind::Press, s.press});
    out.push_back({s.id, KeyKind::Release, s.release});
  }
  std::sort(out.begin(), out.end(), [](const KeyEvent& a, const KeyEvent& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.stroke_id != b.stroke_id) return a.stroke_id < b.stroke_id;
    return a.kind == KeyKind::Press && b.kind == KeyKind::Release;
  });
  return out;
}

KeystrokeLog parse_log(std::string_view source) {
  std::string user_id;
  Phase phase = Phase::Prompted;
  bool seen_comment = false;
  std::vector<KeyEvent> events;

  auto all = text::lines(source);
  for (std::size_t n = 0; n < all.size(); ++n) {
    auto line = all[n];
    auto where = "line=" + std::to_string(n + 1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!seen_comment && line.starts_with(kHeaderPrefix)) {
        auto fields = text::split(line.substr(kHeaderPrefix.size()), ' ');
        if (fields.empty() || fields[0] != "v1") throw Error(Errc::MalformedLine, where + " unsupported log version");
        for (std::size_t i = 1; i < fields.size(); ++i) {
          auto f = fields[i];
          if (f.starts_with("user=")) {
            user_id = std::string(f.substr(5));
          } else if (f.starts_with("phase=")) {
            try {
              phase = parse_phase(f.substr(6));
            } catch (const Error&) {
              throw Error(Errc::MalformedLine, where + " bad phase");
            }
          } else if (!f.empty()) {
            throw Error(Errc::MalformedLine, where + " unknown header field");
          }
        }
      }
      seen_comment = true;
      continue;
    }
    auto fields = text::split(line, ',');
    if (fields.size() != 3) throw Error(Errc::MalformedLine, where);
    KeyEvent e;
    if (!text::parse_uint(fields[0], e.stroke_id)) throw Error(Errc::MalformedLine, where);
    if (fields[1] == "P") {
      e.kind = KeyKind::Press;
    } else if (fields[1] == "R") {
      e.kind = KeyKind::Release;
    } else {
      throw Error(Errc::MalformedLine, where);
    }
    if (!parse_ms(fields[2], e.t)) throw Error(Errc::MalformedLine, where);
    events.push_back(e);
  }
  return KeystrokeLog::from_events(std::move(user_id), phase, events);
}

std::string serialize_log(const KeystrokeLog& log) {
  std::string out;
  out.reserve(32 + log.strokes().size() * 40);
  out += kHeaderPrefix;
  out += "v1 user=";
  out += log.user_id();
  out += " phase=";
  out += to_string(log.phase());
  out += '\n';
  for (const auto& e : log.events()) {
    out += std::to_string(e.stroke_id);
    out += e.kind == KeyKind::Press ? ",P," : ",R,";
    out += format_ms(e.t);
    out += '\n';
  }
  return out;
}

std::size_t stroke_count(const KeystrokeLog& log) { return log.strokes().size(); }

KeystrokeLog slice_strokes(const KeystrokeLog& log, std::size_t start, std::size_t len) {
  const auto n = log.strokes().size();
  if (start > n || len > n - start)
    throw Error(Errc::OutOfRange, "start=" + std::to_string(start) + " len=" + std::to_string(len) +
                                      " strokes=" + std::to_string(n));
  auto first = log.strokes().begin() + static_cast<std::ptrdiff_t>(start);
  return KeystrokeLog::from_strokes(log.user_id(), log.phase(),
                                    std::vector<Stroke>(first, first + static_cast<std::ptrdiff_t>(len)));
}

}  // namespace keydyn

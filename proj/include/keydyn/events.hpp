#pragma once

// Anonymized keystroke timing logs: press/release instants only, never the
// key itself. A per-stroke correlation id pairs a press with its release.

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace keydyn {

/// Integer microseconds. Used for both instants (relative to stream start)
/// and intervals so that interval arithmetic is exact.
struct Micros {
  std::int64_t count = 0;

  constexpr double ms() const { return static_cast<double>(count) / 1000.0; }
  static constexpr Micros from_ms(std::int64_t ms) { return Micros{ms * 1000}; }

  friend constexpr Micros operator+(Micros a, Micros b) { return {a.count + b.count}; }
  friend constexpr Micros operator-(Micros a, Micros b) { return {a.count - b.count}; }
  friend constexpr auto operator<=>(Micros, Micros) = default;
};

enum class KeyKind { Press, Release };

struct KeyEvent {
  std::uint64_t stroke_id = 0;
  KeyKind kind = KeyKind::Press;
  Micros t;

  friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};

enum class Phase { Prompted, Freestyle };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view s);

struct Stroke {
  std::uint64_t id = 0;
  Micros press;
  Micros release;

  Micros hold() const { return release - press; }
  friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// A validated log. Strokes are stored in press order; the interleaved event
/// stream is reconstructed by events().
class KeystrokeLog {
 public:
  KeystrokeLog() = default;

  /// Validates `events` and builds a log; throws keydyn::Error on any
  /// invariant violation.
  static KeystrokeLog from_events(std::string user_id, Phase phase,
                                  const std::vector<KeyEvent>& events);

  /// Strokes must already be in press order with ids increasing.
  static KeystrokeLog from_strokes(std::string user_id, Phase phase,
                                   std::vector<Stroke> strokes);

  const std::string& user_id() const { return user_id_; }
  Phase phase() const { return phase_; }
  const std::vector<Stroke>& strokes() const { return strokes_; }

  /// Events sorted by time, ties broken by (stroke_id, Press before Release).
  std::vector<KeyEvent> events() const;

  friend bool operator==(const KeystrokeLog&, const KeystrokeLog&) = default;

 private:
  std::string user_id_;
  Phase phase_ = Phase::Prompted;
  std::vector<Stroke> strokes_;
};

KeystrokeLog parse_log(std::string_view source);
std::string serialize_log(const KeystrokeLog& log);

std::size_t stroke_count(const KeystrokeLog& log);

/// Strokes [start, start+len) with their original ids and timestamps.
KeystrokeLog slice_strokes(const KeystrokeLog& log, std::size_t start, std::size_t len);

}  // namespace keydyn

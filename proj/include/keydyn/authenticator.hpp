#pragma once

// Periodic block authentication: the test stream is cut into consecutive
// blocks of strokes; each block's digraphs are classified and the session is
// rejected as soon as the fraction of intruder labels reaches the threshold.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keydyn/events.hpp"
#include "keydyn/ocsvm.hpp"

namespace keydyn {

struct AuthConfig {
  std::size_t block_size = 80;
  double threshold = 0.65;
  bool drop_partial_final_block = true;

  /// Throws InvalidArgument unless block_size >= 2 and threshold in (0, 1).
  void validate() const;
};

enum class BlockDecision { Continue, Reject };

struct BlockVerdict {
  std::size_t block_index = 0;
  double intruder_fraction = 0.0;
  BlockDecision decision = BlockDecision::Continue;

  friend bool operator==(const BlockVerdict&, const BlockVerdict&) = default;
};

enum class Outcome { Rejected, DataExhausted };

struct DecisionTrace {
  std::string model_user;
  std::string test_user;
  std::vector<BlockVerdict> verdicts;
  Outcome outcome = Outcome::DataExhausted;
  std::size_t blocks_consumed = 0;

  friend bool operator==(const DecisionTrace&, const DecisionTrace&) = default;
};

enum class RunOutcome { TrueReject, FalseAccept, FalseReject, TrueAccept };

std::string_view to_string(BlockDecision d);
std::string_view to_string(Outcome o);
std::string_view to_string(RunOutcome o);

/// Fraction of verdicts labeled -1; 0 for an empty block.
double intruder_fraction(std::span<const Verdict> verdicts);

BlockVerdict judge_block(std::size_t block_index, std::span<const Verdict> verdicts,
                         double threshold);

/// Throws InsufficientData when the log holds fewer strokes than one block.
DecisionTrace run_stream(const OcsvmModel& model, const KeystrokeLog& test_log,
                         const AuthConfig& cfg);

RunOutcome classify_outcome(const DecisionTrace& trace, bool ground_truth_same_user);

/// `block_index,intruder_fraction,decision` rows plus the
/// `outcome=<...> blocks=<n>` trailer.
std::string trace_csv(const DecisionTrace& trace);

}  // namespace keydyn

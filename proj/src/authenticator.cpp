#include "keydyn/authenticator.hpp"

#include <algorithm>

#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/text.hpp"

namespace keydyn {

void AuthConfig::validate() const {
  if (block_size < 2) throw Error(Errc::InvalidArgument, "block_size must be >= 2");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error(Errc::InvalidArgument, "threshold must lie in (0, 1)");
}

std::string_view to_string(BlockDecision d) {
  return d == BlockDecision::Reject ? "Reject" : "Continue";
}

std::string_view to_string(Outcome o) {
  return o == Outcome::Rejected ? "Rejected" : "DataExhausted";
}

std::string_view to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::TrueReject: return "TrueReject";
    case RunOutcome::FalseAccept: return "FalseAccept";
    case RunOutcome::FalseReject: return "FalseReject";
    case RunOutcome::TrueAccept: return "TrueAccept";
  }
  return "Unknown";
}

double intruder_fraction(std::span<const Verdict> verdicts) {
  if (verdicts.empty()) return 0.0;
  const auto intruders = std::count_if(verdicts.begin(), verdicts.end(),
                                       [](const Verdict& v) { return v.label == -1; });
  return static_cast<double>(intruders) / static_cast<double>(verdicts.size());
}

BlockVerdict judge_block(std::size_t block_index, std::span<const Verdict> verdicts,
                         double threshold) {
  BlockVerdict v;
  v.block_index = block_index;
  v.intruder_fraction = intruder_fraction(verdicts);
  v.decision = v.intruder_fraction >= threshold ? BlockDecision::Reject : BlockDecision::Continue;
  return v;
}

DecisionTrace run_stream(const OcsvmModel& model, const KeystrokeLog& test_log,
                         const AuthConfig& cfg) {
  cfg.validate();
  const std::size_t strokes = stroke_count(test_log);
  if (strokes < cfg.block_size)
    throw Error(Errc::InsufficientData, "test log has " + std::to_string(strokes) +
                                            " strokes, block needs " + std::to_string(cfg.block_size));

  DecisionTrace trace;
  trace.model_user = model.train_user;
  trace.test_user = test_log.user_id();

  std::size_t blocks = strokes / cfg.block_size;
  const std::size_t tail = strokes % cfg.block_size;
  // A trailing block of one stroke has no digraph to judge.
  if (!cfg.drop_partial_final_block && tail >= 2) ++blocks;

  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t start = b * cfg.block_size;
    const std::size_t len = std::min(cfg.block_size, strokes - start);
    const auto digraphs = extract_features(slice_strokes(test_log, start, len));
    const auto verdicts = predict_block(model, digraphs);
    trace.verdicts.push_back(judge_block(b, verdicts, cfg.threshold));
    if (trace.verdicts.back().decision == BlockDecision::Reject) {
      trace.outcome = Outcome::Rejected;
      break;
    }
  }
  trace.blocks_consumed = trace.verdicts.size();
  return trace;
}

RunOutcome classify_outcome(const DecisionTrace& trace, bool ground_truth_same_user) {
  const bool rejected = trace.outcome == Outcome::Rejected;
  if (ground_truth_same_user) return rejected ? RunOutcome::FalseReject : RunOutcome::TrueAccept;
  return rejected ? RunOutcome::TrueReject : RunOutcome::FalseAccept;
}

std::string trace_csv(const DecisionTrace& trace) {
  std::string out = "block_index,intruder_fraction,decision\n";
  for (const auto& v : trace.verdicts) {
    out += std::to_string(v.block_index) + "," + text::format_real(v.intruder_fraction) + "," +
           std::string(to_string(v.decision)) + "\n";
  }
  out += "outcome=" + std::string(to_string(trace.outcome)) +
         " blocks=" + std::to_string(trace.blocks_consumed) + "\n";
  return out;
}

}  // namespace keydyn

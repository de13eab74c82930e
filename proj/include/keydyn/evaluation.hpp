#pragma once

// Evaluation harness: every user's model is streamed against every user's
// test data (including their own), and the outcomes are aggregated into
// FAR / FRR / average-blocks cells.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "keydyn/authenticator.hpp"
#include "keydyn/events.hpp"
#include "keydyn/kernel.hpp"
#include "keydyn/ocsvm.hpp"
#include "keydyn/synth.hpp"

namespace keydyn {

/// Logs per phase, each list ordered by user id.
struct CohortLogs {
  std::map<Phase, std::vector<KeystrokeLog>> by_phase;
};

CohortLogs generate_cohort_logs(const CohortSpec& spec, Execution exec = Execution::Serial);

/// Writes `cohort.txt` plus `<user>_<phase>.log` for both phases.
void write_cohort_dir(const CohortSpec& spec, const std::filesystem::path& dir);

/// Reads every `*.log` file in `dir`. Throws Io when the directory is missing.
CohortLogs load_cohort_dir(const std::filesystem::path& dir);

struct InitialProtocol {
  std::size_t train_strokes = 1500;
  std::size_t test_strokes = 500;
  std::vector<std::size_t> block_sizes{30, 50, 80, 100};
  double threshold = 0.65;
};

enum class FoldStrategy { SingleRandomFold, AllFolds };

std::string_view to_string(FoldStrategy s);
FoldStrategy parse_fold_strategy(std::string_view s);

struct KFoldProtocol {
  std::vector<std::size_t> fold_counts{5, 10};
  std::size_t strokes_per_user = 2000;
  std::size_t block_size = 80;
  double threshold = 0.65;
  FoldStrategy fold_strategy = FoldStrategy::AllFolds;
  std::uint64_t seed = 0;
};

struct RunRecord {
  std::string model_user;
  std::string test_user;
  std::size_t fold = 0;
  DecisionTrace trace;
  RunOutcome outcome = RunOutcome::TrueAccept;
};

struct ReportCell {
  Phase phase = Phase::Prompted;
  std::string protocol;  // "initial" or "kfold"
  std::size_t param = 0;  // block size (initial) or fold count (kfold)
  double far = 0.0;
  double frr = 0.0;
  double avg_blocks = 0.0;
  std::size_t impostor_runs = 0;
  std::size_t genuine_runs = 0;
  std::size_t max_blocks_per_run = 0;

  friend bool operator==(const ReportCell&, const ReportCell&) = default;
};

/// Runs of one cell, kept for accounting checks.
struct CellRuns {
  Phase phase = Phase::Prompted;
  std::string protocol;
  std::size_t param = 0;
  std::vector<RunRecord> runs;
};

ReportCell aggregate(Phase phase, std::string protocol, std::size_t param,
                     const std::vector<RunRecord>& runs);

struct ReportTable {
  std::string name;
  std::vector<ReportCell> cells;

  friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

struct EvalReport {
  std::vector<std::pair<std::string, std::string>> config;  // ordered echo
  std::vector<std::string> notes;
  std::vector<ReportTable> tables;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport run_initial(const CohortLogs& logs, const InitialProtocol& protocol,
                       const OcsvmConfig& svm, Execution exec = Execution::Parallel,
                       std::vector<CellRuns>* runs = nullptr);

EvalReport run_kfold(const CohortLogs& logs, const KFoldProtocol& protocol,
                     const OcsvmConfig& svm, Execution exec = Execution::Parallel,
                     std::vector<CellRuns>* runs = nullptr);

/// Fold order for `n_folds` contiguous chunks, shuffled by `seed`.
std::vector<std::size_t> fold_order(std::size_t n_folds, std::uint64_t seed);

struct TrendFinding {
  Phase phase = Phase::Prompted;
  std::string metric;  // "far" (non-decreasing) or "frr" (non-increasing)
  bool pass = true;
  /// Adjacent (smaller, larger) block-size pairs that break the trend.
  std::vector<std::pair<std::size_t, std::size_t>> offending;
};

/// Checks FAR non-decreasing and FRR non-increasing across block sizes for
/// every phase with initial-protocol cells.
std::vector<TrendFinding> trend_check(const EvalReport& report);

std::string serialize_report(const EvalReport& report);
EvalReport parse_report(std::string_view text);

/// Tables laid out with metrics as rows (initial) or phase x folds rows (kfold).
std::string render_markdown(const EvalReport& report);

}  // namespace keydyn

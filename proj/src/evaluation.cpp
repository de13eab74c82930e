#include "keydyn/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <numeric>

#include "keydyn/error.hpp"
#include "keydyn/features.hpp"
#include "keydyn/text.hpp"

namespace keydyn {

namespace {

constexpr std::string_view kReportHeader = "keydyn-report v1";
constexpr std::string_view kReportColumns =
    "phase,protocol,param,far,frr,avg_blocks,impostor_runs,genuine_runs,max_blocks_per_run";

/// Runs f(0..n-1) serially or across OpenMP threads. Exceptions are captured
/// per index and the first (lowest index) one is rethrown afterwards.
template <class F>
void for_each_index(std::size_t n, Execution exec, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  if (exec == Execution::Parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        f(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string gamma_echo(const OcsvmConfig& svm) {
  return svm.gamma ? text::format_real(*svm.gamma) : std::string("scale");
}

void echo_svm(EvalReport& r, const OcsvmConfig& svm) {
  r.config.emplace_back("nu", text::format_real(svm.nu));
  r.config.emplace_back("gamma", gamma_echo(svm));
  r.config.emplace_back("kkt_tol", text::format_real(svm.kkt_tol));
  r.config.emplace_back("max_iter", std::to_string(svm.max_iter));
  r.config.emplace_back("alpha_floor", text::format_real(kAlphaFloor));
  r.config.emplace_back("std_floor", text::format_real(kStdFloor));
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(v[k]);
  }
  return s;
}

/// Users with at least `needed` strokes; the rest are noted and skipped.
std::vector<const KeystrokeLog*> eligible_users(const std::vector<KeystrokeLog>& logs,
                                                std::size_t needed, Phase phase,
                                                std::vector<std::string>& notes) {
  std::vector<const KeystrokeLog*> out;
  for (const auto& log : logs) {
    if (stroke_count(log) >= needed) {
      out.push_back(&log);
    } else {
      notes.push_back("phase=" + std::string(to_string(phase)) + " user=" + log.user_id() +
                      " skipped: InsufficientData strokes=" + std::to_string(stroke_count(log)) +
                      " needed=" + std::to_string(needed));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(FoldStrategy s) {
  return s == FoldStrategy::AllFolds ? "all" : "single";
}

FoldStrategy parse_fold_strategy(std::string_view s) {
  if (s == "all") return FoldStrategy::AllFolds;
  if (s == "single") return FoldStrategy::SingleRandomFold;
  throw Error(Errc::InvalidArgument, "fold strategy " + std::string(s));
}

CohortLogs generate_cohort_logs(const CohortSpec& spec, Execution exec) {
  CohortLogs logs;
  for (Phase phase : {Phase::Prompted, Phase::Freestyle}) {
    std::vector<KeystrokeLog> out(spec.profiles.size());
    for_each_index(spec.profiles.size(), exec, [&](std::size_t k) {
      out[k] = generate_log(spec.profiles[k], spec.strokes_per_user, phase);
    });
    std::sort(out.begin(), out.end(),
              [](const KeystrokeLog& a, const KeystrokeLog& b) { return a.user_id() < b.user_id(); });
    logs.by_phase[phase] = std::move(out);
  }
  return logs;
}

void write_cohort_dir(const CohortSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  text::write_file_atomic(dir / "cohort.txt", serialize_cohort(spec));
  const auto logs = generate_cohort_logs(spec, Execution::Serial);
  for (const auto& [phase, list] : logs.by_phase) {
    for (const auto& log : list) {
      const auto name = log.user_id() + "_" + std::string(to_string(phase)) + ".log";
      text::write_file_atomic(dir / name, serialize_log(log));
    }
  }
}

CohortLogs load_cohort_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(Errc::Io, "no such directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".log") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(Errc::InsufficientData, "no .log files in " + dir.string());

  CohortLogs logs;
  for (const auto& f : files) {
    auto log = parse_log(text::read_file(f));
    logs.by_phase[log.phase()].push_back(std::move(log));
  }
  for (auto& [phase, list] : logs.by_phase)
    std::sort(list.begin(), list.end(),
              [](const KeystrokeLog& a, const KeystrokeLog& b) { return a.user_id() < b.user_id(); });
  return logs;
}

ReportCell aggregate(Phase phase, std::string protocol, std::size_t param,
                     const std::vector<RunRecord>& runs) {
  ReportCell cell;
  cell.phase = phase;
  cell.protocol = std::move(protocol);
  cell.param = param;
  std::size_t false_accepts = 0, false_rejects = 0, blocks = 0;
  for (const auto& r : runs) {
    const bool genuine = r.outcome == RunOutcome::TrueAccept || r.outcome == RunOutcome::FalseReject;
    ++(genuine ? cell.genuine_runs : cell.impostor_runs);
    if (r.outcome == RunOutcome::FalseAccept) ++false_accepts;
    if (r.outcome == RunOutcome::FalseReject) ++false_rejects;
    blocks += r.trace.blocks_consumed;
    cell.max_blocks_per_run = std::max(cell.max_blocks_per_run, r.trace.blocks_consumed);
  }
  if (cell.impostor_runs)
    cell.far = static_cast<double>(false_accepts) / static_cast<double>(cell.impostor_runs);
  if (cell.genuine_runs)
    cell.frr = static_cast<double>(false_rejects) / static_cast<double>(cell.genuine_runs);
  if (!runs.empty()) cell.avg_blocks = static_cast<double>(blocks) / static_cast<double>(runs.size());
  return cell;
}

EvalReport run_initial(const CohortLogs& logs, const InitialProtocol& protocol,
                       const OcsvmConfig& svm, Execution exec, std::vector<CellRuns>* runs_out) {
  EvalReport report;
  report.config.emplace_back("protocol", "initial");
  report.config.emplace_back("train_strokes", std::to_string(protocol.train_strokes));
  report.config.emplace_back("test_strokes", std::to_string(protocol.test_strokes));
  report.config.emplace_back("block_sizes", join_sizes(protocol.block_sizes));
  report.config.emplace_back("threshold", text::format_real(protocol.threshold));
  report.config.emplace_back("reject_rule", "intruder_fraction>=threshold");
  report.config.emplace_back("drop_partial_final_block", "true");
  echo_svm(report, svm);
  report.config.emplace_back("avg_blocks", "mean_blocks_consumed_all_runs");

  for (const auto& [phase, list] : logs.by_phase) {
    const auto users =
        eligible_users(list, protocol.train_strokes + protocol.test_strokes, phase, report.notes);
    const std::size_t n = users.size();

    std::vector<OcsvmModel> models(n);
    std::vector<KeystrokeLog> tests(n);
    for_each_index(n, exec, [&](std::size_t u) {
      const auto& log = *users[u];
      models[u] = train(extract_features(slice_strokes(log, 0, protocol.train_strokes)), svm,
                        log.user_id());
      tests[u] = slice_strokes(log, protocol.train_strokes, protocol.test_strokes);
    });

    ReportTable table;
    table.name = "initial-" + std::string(to_string(phase));
    for (std::size_t block : protocol.block_sizes) {
      AuthConfig auth{block, protocol.threshold, true};
      std::vector<RunRecord> runs(n * n);
      for_each_index(n * n, exec, [&](std::size_t k) {
        const auto m = k / n, t = k % n;
        auto& r = runs[k];
        r.model_user = models[m].train_user;
        r.test_user = tests[t].user_id();
        r.trace = run_stream(models[m], tests[t], auth);
        r.outcome = classify_outcome(r.trace, m == t);
      });
      table.cells.push_back(aggregate(phase, "initial", block, runs));
      if (runs_out) runs_out->push_back(CellRuns{phase, "initial", block, std::move(runs)});
    }
    report.tables.push_back(std::move(table));
  }
  return report;
}

std::vector<std::size_t> fold_order(std::size_t n_folds, std::uint64_t seed) {
  std::vector<std::size_t> order(n_folds);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(seed);
  for (std::size_t k = n_folds; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
  return order;
}

EvalReport run_kfold(const CohortLogs& logs, const KFoldProtocol& protocol, const OcsvmConfig& svm,
                     Execution exec, std::vector<CellRuns>* runs_out) {
  for (auto k : protocol.fold_counts)
    if (k < 2 || protocol.strokes_per_user % k != 0)
      throw Error(Errc::InvalidArgument, std::to_string(protocol.strokes_per_user) +
                                             " strokes do not split into " + std::to_string(k) +
                                             " equal folds");
  EvalReport report;
  report.config.emplace_back("protocol", "kfold");
  report.config.emplace_back("strokes_per_user", std::to_string(protocol.strokes_per_user));
  report.config.emplace_back("folds", join_sizes(protocol.fold_counts));
  report.config.emplace_back("fold_strategy", std::string(to_string(protocol.fold_strategy)));
  report.config.emplace_back("seed", std::to_string(protocol.seed));
  report.config.emplace_back("block_size", std::to_string(protocol.block_size));
  report.config.emplace_back("threshold", text::format_real(protocol.threshold));
  report.config.emplace_back("reject_rule", "intruder_fraction>=threshold");
  report.config.emplace_back("drop_partial_final_block", "true");
  echo_svm(report, svm);
  report.config.emplace_back("avg_blocks", "mean_blocks_consumed_all_runs");

  ReportTable table;
  table.name = "kfold";
  const AuthConfig auth{protocol.block_size, protocol.threshold, true};
  for (const auto& [phase, list] : logs.by_phase) {
    const auto users = eligible_users(list, protocol.strokes_per_user, phase, report.notes);
    const std::size_t n = users.size();

    for (std::size_t k : protocol.fold_counts) {
      const std::size_t chunk = protocol.strokes_per_user / k;
      const auto order = fold_order(k, splitmix64(protocol.seed) ^ k);
      const std::size_t evaluated = protocol.fold_strategy == FoldStrategy::AllFolds ? k : 1;

      // Digraphs are taken within each chunk, so training sets assembled from
      // non-adjacent chunks never contain a digraph spanning a gap.
      std::vector<std::vector<FeatureMatrix>> chunk_features(n, std::vector<FeatureMatrix>(k));
      for_each_index(n * k, exec, [&](std::size_t idx) {
        const auto u = idx / k, c = idx % k;
        chunk_features[u][c] = extract_features(slice_strokes(*users[u], c * chunk, chunk));
      });

      std::vector<OcsvmModel> models(n * evaluated);
      for_each_index(n * evaluated, exec, [&](std::size_t idx) {
        const auto u = idx / evaluated, f = idx % evaluated;
        FeatureMatrix training;
        for (std::size_t c = 0; c < k; ++c)
          if (c != order[f]) training = concat(training, chunk_features[u][c]);
        models[idx] = train(training, svm, users[u]->user_id());
      });

      std::vector<RunRecord> runs(n * n * evaluated);
      for_each_index(runs.size(), exec, [&](std::size_t idx) {
        const auto m = idx / (n * evaluated);
        const auto t = (idx / evaluated) % n;
        const auto f = idx % evaluated;
        auto& r = runs[idx];
        const auto test = slice_strokes(*users[t], order[f] * chunk, chunk);
        const auto& model = models[m * evaluated + f];
        r.model_user = model.train_user;
        r.test_user = test.user_id();
        r.fold = order[f];
        r.trace = run_stream(model, test, auth);
        r.outcome = classify_outcome(r.trace, m == t);
      });
      table.cells.push_back(aggregate(phase, "kfold", k, runs));
      if (runs_out) runs_out->push_back(CellRuns{phase, "kfold", k, std::move(runs)});
    }
  }
  report.tables.push_back(std::move(table));
  return report;
}

std::vector<TrendFinding> trend_check(const EvalReport& report) {
  std::map<Phase, std::vector<ReportCell>> by_phase;
  for (const auto& t : report.tables)
    for (const auto& c : t.cells)
      if (c.protocol == "initial") by_phase[c.phase].push_back(c);

  std::vector<TrendFinding> out;
  for (auto& [phase, cells] : by_phase) {
    std::sort(cells.begin(), cells.end(),
              [](const ReportCell& a, const ReportCell& b) { return a.param < b.param; });
    TrendFinding far{phase, "far", true, {}};
    TrendFinding frr{phase, "frr", true, {}};
    for (std::size_t k = 1; k < cells.size(); ++k) {
      const auto& a = cells[k - 1];
      const auto& b = cells[k];
      if (b.far < a.far) far.offending.emplace_back(a.param, b.param);
      if (b.frr > a.frr) frr.offending.emplace_back(a.param, b.param);
    }
    far.pass = far.offending.empty();
    frr.pass = frr.offending.empty();
    out.push_back(std::move(far));
    out.push_back(std::move(frr));
  }
  return out;
}

std::string serialize_report(const EvalReport& r) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& [k, v] : r.config) out += k + "=" + v + "\n";
  for (const auto& n : r.notes) out += "note=" + n + "\n";
  for (const auto& t : r.tables) {
    out += "\n[table " + t.name + "]\n";
    out += kReportColumns;
    out += '\n';
    for (const auto& c : t.cells) {
      out += std::string(to_string(c.phase)) + "," + c.protocol + "," + std::to_string(c.param) + "," +
             text::format_real(c.far) + "," + text::format_real(c.frr) + "," +
             text::format_real(c.avg_blocks) + "," + std::to_string(c.impostor_runs) + "," +
             std::to_string(c.genuine_runs) + "," + std::to_string(c.max_blocks_per_run) + "\n";
    }
  }
  return out;
}

EvalReport parse_report(std::string_view src) {
  auto ls = text::lines(src);
  if (ls.empty() || !ls[0].starts_with("keydyn-report "))
    throw Error(Errc::MalformedLine, "not a report file");
  if (ls[0] != kReportHeader) throw Error(Errc::VersionMismatch, std::string(ls[0]));

  EvalReport r;
  ReportTable* table = nullptr;
  bool expect_columns = false;
  for (std::size_t n = 1; n < ls.size(); ++n) {
    const auto line = ls[n];
    const auto where = "line=" + std::to_string(n + 1);
    if (line.empty()) continue;
    if (line.starts_with("[table ") && line.ends_with("]")) {
      r.tables.push_back(ReportTable{std::string(line.substr(7, line.size() - 8)), {}});
      table = &r.tables.back();
      expect_columns = true;
      continue;
    }
    if (expect_columns) {
      if (line != kReportColumns) throw Error(Errc::MalformedLine, where + " bad column header");
      expect_columns = false;
      continue;
    }
    if (!table) {
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error(Errc::MalformedLine, where);
      auto key = line.substr(0, eq);
      auto value = line.substr(eq + 1);
      if (key == "note") r.notes.emplace_back(value);
      else r.config.emplace_back(std::string(key), std::string(value));
      continue;
    }
    auto f = text::split(line, ',');
    if (f.size() != 9) throw Error(Errc::MalformedLine, where);
    ReportCell c;
    std::uint64_t param = 0, imp = 0, gen = 0, maxb = 0;
    try {
      c.phase = parse_phase(f[0]);
    } catch (const Error&) {
      throw Error(Errc::MalformedLine, where + " phase");
    }
    c.protocol = std::string(f[1]);
    if (!text::parse_uint(f[2], param) || !text::parse_real(f[3], c.far) ||
        !text::parse_real(f[4], c.frr) || !text::parse_real(f[5], c.avg_blocks) ||
        !text::parse_uint(f[6], imp) || !text::parse_uint(f[7], gen) || !text::parse_uint(f[8], maxb))
      throw Error(Errc::MalformedLine, where);
    c.param = param;
    c.impostor_runs = imp;
    c.genuine_runs = gen;
    c.max_blocks_per_run = maxb;
    table->cells.push_back(std::move(c));
  }
  if (expect_columns) throw Error(Errc::MalformedLine, "table without column header");
  return r;
}

namespace {
std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}
}  // namespace

std::string render_markdown(const EvalReport& r) {
  std::string out;
  for (const auto& t : r.tables) {
    out += "### " + t.name + "\n\n";
    if (t.name == "kfold") {
      out += "| Phase | # Folds | FAR | FRR | Avg. # of Blocks |\n|---|---|---|---|---|\n";
      for (const auto& c : t.cells)
        out += "| " + std::string(to_string(c.phase)) + " | " + std::to_string(c.param) + " | " +
               fixed4(c.far) + " | " + fixed4(c.frr) + " | " + fixed4(c.avg_blocks) + " |\n";
    } else {
      std::string head = "| |", rule = "|---|", far = "| FAR |", frr = "| FRR |",
                  blocks = "| Avg. # of Blocks |";
      for (const auto& c : t.cells) {
        head += " " + std::to_string(c.param) + " |";
        rule += "---|";
        far += " " + fixed4(c.far) + " |";
        frr += " " + fixed4(c.frr) + " |";
        blocks += " " + fixed4(c.avg_blocks) + " |";
      }
      out += head + "\n" + rule + "\n" + far + "\n" + frr + "\n" + blocks + "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace keydyn

#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "keydyn/authenticator.hpp"
#include "keydyn/error.hpp"
#include "keydyn/evaluation.hpp"
#include "keydyn/events.hpp"
#include "keydyn/features.hpp"
#include "keydyn/ocsvm.hpp"
#include "keydyn/synth.hpp"
#include "keydyn/text.hpp"

namespace keydyn::cli {

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::TooFewUsers:
    case Errc::OutOfRange:
    case Errc::Io:
      return kBadArgs;
    case Errc::MalformedLine:
    case Errc::OrphanStroke:
    case Errc::NegativeHold:
    case Errc::NonMonotonicPress:
    case Errc::DuplicateStrokeKind:
    case Errc::InsufficientData:
    case Errc::NonFiniteInput:
    case Errc::VersionMismatch:
    case Errc::CorruptModel:
    case Errc::InvalidProfile:
      return kValidation;
  }
  return kInternal;
}

std::optional<double> parse_gamma(const std::string& s) {
  if (s == "scale") return std::nullopt;
  double g = 0.0;
  if (!text::parse_real(s, g) || !(g > 0.0)) throw Error(Errc::InvalidArgument, "gamma=" + s);
  return g;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  auto parts = text::split(s, ':');
  std::uint64_t start = 0, len = 0;
  if (parts.size() != 2 || !text::parse_uint(parts[0], start) || !text::parse_uint(parts[1], len))
    throw Error(Errc::InvalidArgument, "range must be <start>:<len>, got " + s);
  return {start, len};
}

struct SvmFlags {
  double nu = 0.1;
  std::string gamma = "scale";
  double kkt_tol = 1e-3;
  std::uint64_t max_iter = 100'000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--nu", nu, "Upper bound on training outlier fraction")->capture_default_str();
    cmd->add_option("--gamma", gamma, "RBF width, or 'scale'")->capture_default_str();
    cmd->add_option("--kkt-tol", kkt_tol, "Solver stopping tolerance")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "Maximum SMO pair updates")->capture_default_str();
  }

  OcsvmConfig config() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw Error(Errc::InvalidArgument, "nu must lie in (0, 1]");
    if (!(kkt_tol > 0.0)) throw Error(Errc::InvalidArgument, "kkt-tol must be positive");
    return OcsvmConfig{nu, parse_gamma(gamma), kkt_tol, max_iter};
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Keystroke-dynamics continuous authentication toolkit", "keydyn"};
  app.require_subcommand(1);

  std::string input, output, model_path, range, cohort_dir, protocol = "initial",
                                                             fold_strategy = "all", markdown;
  std::size_t block_size = 80, users = 0, strokes = 2000;
  double threshold = 0.65;
  std::uint64_t seed = 0;
  bool keep_partial = false, serial = false;
  std::vector<std::size_t> folds{5, 10};
  SvmFlags svm;

  auto* validate = app.add_subcommand("validate", "Parse and validate a keystroke log");
  validate->add_option("--input", input, "Log file")->required();

  auto* features = app.add_subcommand("features", "Dump digraph features as CSV");
  features->add_option("--input", input, "Log file")->required();
  features->add_option("--out", output, "CSV output (default: stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a one-class SVM on a stroke range");
  train_cmd->add_option("--input", input, "Log file")->required();
  train_cmd->add_option("--range", range, "<start>:<len> in strokes (default: whole log)");
  train_cmd->add_option("--out", output, "Model file")->required();
  svm.attach(train_cmd);

  auto* auth = app.add_subcommand("auth", "Stream a log through a model block by block");
  auth->add_option("--model", model_path, "Model file")->required();
  auth->add_option("--input", input, "Log file")->required();
  auth->add_option("--block-size", block_size, "Strokes per block")->capture_default_str();
  auth->add_option("--threshold", threshold, "Intruder fraction that rejects a block")
      ->capture_default_str();
  auth->add_flag("--keep-partial", keep_partial, "Judge a trailing partial block too");

  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic cohort");
  synth->add_option("--users", users, "Number of typists")->required();
  synth->add_option("--strokes", strokes, "Strokes per user and phase")->capture_default_str();
  synth->add_option("--seed", seed, "Master seed")->capture_default_str();
  synth->add_option("--out-dir", output, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol over a cohort directory");
  eval->add_option("--cohort-dir", cohort_dir, "Directory of .log files")->required();
  eval->add_option("--protocol", protocol, "initial or kfold")
      ->check(CLI::IsMember({"initial", "kfold"}))
      ->capture_default_str();
  eval->add_option("--folds", folds, "Fold counts, e.g. 5 or 5,10")->delimiter(',')->capture_default_str();
  eval->add_option("--fold-strategy", fold_strategy, "all or single")
      ->check(CLI::IsMember({"all", "single"}))
      ->capture_default_str();
  eval->add_option("--seed", seed, "Fold shuffle seed")->capture_default_str();
  eval->add_option("--threshold", threshold, "Intruder fraction that rejects a block")
      ->capture_default_str();
  eval->add_option("--out", output, "Report file")->required();
  eval->add_option("--markdown", markdown, "Also write a Markdown rendering here");
  eval->add_flag("--serial", serial, "Use the serial reference run grid");
  svm.attach(eval);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadArgs;
  }

  try {
    if (*validate) {
      if (!std::filesystem::exists(input)) throw Error(Errc::Io, "no such file " + input);
      const auto log = parse_log(text::read_file(input));
      const auto& s = log.strokes();
      Micros duration{0};
      for (const auto& st : s) duration = std::max(duration, st.release);
      if (!s.empty()) duration = duration - s.front().press;
      out << "strokes=" << stroke_count(log) << " duration_ms=" << text::format_real(duration.ms())
          << "\n";
      return kOk;
    }

    if (*features) {
      const auto csv = features_csv(extract_features(parse_log(text::read_file(input))));
      if (output.empty()) out << csv;
      else text::write_file_atomic(output, csv);
      return kOk;
    }

    if (*train_cmd) {
      const auto cfg = svm.config();
      auto log = parse_log(text::read_file(input));
      if (!range.empty()) {
        const auto [start, len] = parse_range(range);
        log = slice_strokes(log, start, len);
      }
      const auto model = train(extract_features(log), cfg, log.user_id(), Execution::Parallel);
      text::write_file_atomic(output, serialize_model(model));
      out << "support_vectors=" << model.alpha.size() << " rho=" << text::format_real(model.rho)
          << " converged=" << (model.converged ? 1 : 0) << "\n";
      if (!model.converged) err << "warning: solver hit max_iter before reaching kkt_tol\n";
      return kOk;
    }

    if (*auth) {
      const AuthConfig cfg{block_size, threshold, !keep_partial};
      cfg.validate();
      const auto model = parse_model(text::read_file(model_path));
      const auto log = parse_log(text::read_file(input));
      const auto trace = run_stream(model, log, cfg);
      out << trace_csv(trace);
      return trace.outcome == Outcome::Rejected ? kValidation : kOk;
    }

    if (*synth) {
      const auto spec = default_cohort(users, seed, strokes);
      write_cohort_dir(spec, output);
      out << "users=" << users << " files=" << 2 * users << " dir=" << output << "\n";
      return kOk;
    }

    if (*eval) {
      const auto cfg = svm.config();
      if (!(threshold > 0.0 && threshold < 1.0))
        throw Error(Errc::InvalidArgument, "threshold must lie in (0, 1)");
      const auto logs = load_cohort_dir(cohort_dir);
      const auto exec = serial ? Execution::Serial : Execution::Parallel;
      EvalReport report;
      if (protocol == "initial") {
        InitialProtocol p;
        p.threshold = threshold;
        report = run_initial(logs, p, cfg, exec);
        for (const auto& f : trend_check(report))
          out << "trend phase=" << to_string(f.phase) << " " << f.metric << "="
              << (f.pass ? "pass" : "fail") << "\n";
      } else {
        KFoldProtocol p;
        p.fold_counts = folds;
        p.fold_strategy = parse_fold_strategy(fold_strategy);
        p.seed = seed;
        p.threshold = threshold;
        report = run_kfold(logs, p, cfg, exec);
      }
      text::write_file_atomic(output, serialize_report(report));
      if (!markdown.empty()) text::write_file_atomic(markdown, render_markdown(report));
      for (const auto& n : report.notes) err << "note: " << n << "\n";
      out << "report=" << output << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace keydyn::cli

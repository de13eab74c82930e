#include <doctest.h>

#include <algorithm>
#include <set>

#include "keydyn/error.hpp"
#include "keydyn/evaluation.hpp"
#include "keydyn/text.hpp"
#include "support.hpp"

using namespace keydyn;

namespace {

CohortSpec identical_cohort(std::size_t users) {
  CohortSpec spec;
  for (std::size_t k = 0; k < users; ++k)
    spec.profiles.push_back({"same" + std::to_string(k), 80, 0, 130, 0, 0.0, 0.0, 1000 + k});
  return spec;
}

CohortSpec separated_pair() {
  CohortSpec spec;
  spec.profiles.push_back({"slow", 140, 2, 185, 2, 0.0, 0.0, 1});
  spec.profiles.push_back({"fast", 60, 2, 185, 2, 0.0, 0.0, 2});
  return spec;
}

const CohortLogs& small_cohort() {
  static const CohortLogs logs = generate_cohort_logs(default_cohort(4, 9));
  return logs;
}

ReportCell cell(Phase phase, std::size_t block, double far, double frr, double blocks) {
  ReportCell c;
  c.phase = phase;
  c.protocol = "initial";
  c.param = block;
  c.far = far;
  c.frr = frr;
  c.avg_blocks = blocks;
  return c;
}

EvalReport published_tables() {
  EvalReport r;
  r.tables.push_back({"initial-prompted",
                      {cell(Phase::Prompted, 30, 0.0025, 0.0500, 2.1947),
                       cell(Phase::Prompted, 50, 0.0150, 0.0350, 2.6684),
                       cell(Phase::Prompted, 80, 0.0400, 0.0175, 3.0711),
                       cell(Phase::Prompted, 100, 0.0525, 0.0125, 2.9737)}});
  r.tables.push_back({"initial-freestyle",
                      {cell(Phase::Freestyle, 30, 0.0000, 0.0500, 1.8237),
                       cell(Phase::Freestyle, 50, 0.0000, 0.0400, 2.2763),
                       cell(Phase::Freestyle, 80, 0.0100, 0.0300, 2.4553),
                       cell(Phase::Freestyle, 100, 0.0150, 0.0225, 2.5737)}});
  return r;
}

}  // namespace

TEST_CASE("identical typists cannot be told apart") {
  const auto logs = generate_cohort_logs(identical_cohort(3));
  OcsvmConfig svm;
  for (const auto& t : run_initial(logs, InitialProtocol{}, svm).tables)
    for (const auto& c : t.cells) {
      CHECK(c.far == 1.0);
      CHECK(c.frr == 0.0);
    }
  for (auto strategy : {FoldStrategy::AllFolds, FoldStrategy::SingleRandomFold}) {
    KFoldProtocol p;
    p.fold_strategy = strategy;
    for (const auto& c : run_kfold(logs, p, svm).tables.at(0).cells) {
      CHECK(c.far == 1.0);
      CHECK(c.frr == 0.0);
    }
  }
}

TEST_CASE("well separated pair is perfectly classified") {
  const auto logs = generate_cohort_logs(separated_pair());
  std::vector<CellRuns> runs;
  const auto report = run_initial(logs, InitialProtocol{}, OcsvmConfig{}, Execution::Parallel, &runs);
  for (const auto& t : report.tables)
    for (const auto& c : t.cells) {
      CHECK(c.far == 0.0);
      CHECK(c.frr == 0.0);
    }
  for (const auto& cr : runs) {
    std::size_t impostor_blocks = 0, impostors = 0;
    for (const auto& r : cr.runs)
      if (r.model_user != r.test_user) {
        impostor_blocks += r.trace.blocks_consumed;
        ++impostors;
      }
    CHECK(impostors == 2);
    CHECK(static_cast<double>(impostor_blocks) / static_cast<double>(impostors) == 1.0);
  }

  // Direct check: every impostor digraph is labeled -1.
  for (const auto& [phase, list] : logs.by_phase) {
    const auto model = train(extract_features(slice_strokes(list[0], 0, 1500)), OcsvmConfig{}, list[0].user_id());
    const auto other = extract_features(slice_strokes(list[1], 1500, 500));
    for (const auto& v : predict_block(model, other)) CHECK(v.label == -1);
  }
}

TEST_CASE("initial protocol shape and accounting") {
  std::vector<CellRuns> runs;
  const auto report = run_initial(small_cohort(), InitialProtocol{}, OcsvmConfig{}, Execution::Parallel, &runs);
  REQUIRE(report.tables.size() == 2);
  CHECK(report.tables[0].name == "initial-prompted");
  CHECK(report.tables[1].name == "initial-freestyle");
  for (const auto& t : report.tables) {
    REQUIRE(t.cells.size() == 4);
    for (const auto& c : t.cells) {
      CHECK(c.impostor_runs == 12);
      CHECK(c.genuine_runs == 4);
      CHECK(c.far >= 0.0);
      CHECK(c.far <= 1.0);
      CHECK(c.frr >= 0.0);
      CHECK(c.frr <= 1.0);
      CHECK(c.avg_blocks >= 1.0);
      CHECK(c.avg_blocks <= static_cast<double>(500 / c.param));
    }
  }
  REQUIRE(runs.size() == 8);
  for (const auto& cr : runs) {
    std::size_t fa = 0, tr = 0, fr = 0, ta = 0;
    for (const auto& r : cr.runs) {
      switch (r.outcome) {
        case RunOutcome::FalseAccept: ++fa; break;
        case RunOutcome::TrueReject: ++tr; break;
        case RunOutcome::FalseReject: ++fr; break;
        case RunOutcome::TrueAccept: ++ta; break;
      }
      CHECK((r.model_user == r.test_user) == (r.outcome == RunOutcome::FalseReject ||
                                              r.outcome == RunOutcome::TrueAccept));
    }
    const auto c = aggregate(cr.phase, cr.protocol, cr.param, cr.runs);
    CHECK(fa + tr == c.impostor_runs);
    CHECK(fr + ta == c.genuine_runs);
    CHECK(c.impostor_runs == 4 * 3);
    CHECK(c.genuine_runs == 4);
  }
}

TEST_CASE("k-fold protocol") {
  KFoldProtocol p;
  p.fold_counts = {10};
  const auto report = run_kfold(small_cohort(), p, OcsvmConfig{});
  REQUIRE(report.tables.size() == 1);
  const auto& cells = report.tables[0].cells;
  REQUIRE(cells.size() == 2);
  for (const auto& c : cells) {
    CHECK(c.protocol == "kfold");
    CHECK(c.param == 10);
    CHECK(c.max_blocks_per_run == 2);
    CHECK(c.impostor_runs == 4 * 3 * 10);
    CHECK(c.genuine_runs == 4 * 10);
  }

  p.fold_strategy = FoldStrategy::SingleRandomFold;
  p.fold_counts = {5};
  const auto single = run_kfold(small_cohort(), p, OcsvmConfig{});
  for (const auto& c : single.tables[0].cells) {
    CHECK(c.impostor_runs == 12);
    CHECK(c.genuine_runs == 4);
    CHECK(c.max_blocks_per_run <= 5);
  }

  p.fold_counts = {3};
  CHECK_THROWS_AS(run_kfold(small_cohort(), p, OcsvmConfig{}), Error);
}

TEST_CASE("fold order is a seeded permutation") {
  for (std::size_t k : {5, 10}) {
    auto order = fold_order(k, 42);
    CHECK(order == fold_order(k, 42));
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < k; ++i) CHECK(order[i] == i);
  }
  CHECK(fold_order(10, 1) != fold_order(10, 2));
}

TEST_CASE("serial and parallel grids produce identical reports") {
  KFoldProtocol p;
  p.fold_counts = {5};
  p.seed = 3;
  const auto a = run_kfold(small_cohort(), p, OcsvmConfig{}, Execution::Serial);
  const auto b = run_kfold(small_cohort(), p, OcsvmConfig{}, Execution::Parallel);
  CHECK(serialize_report(a) == serialize_report(b));
  CHECK(serialize_report(run_initial(small_cohort(), InitialProtocol{}, OcsvmConfig{}, Execution::Serial)) ==
        serialize_report(run_initial(small_cohort(), InitialProtocol{}, OcsvmConfig{}, Execution::Parallel)));
}

TEST_CASE("short users are skipped and noted") {
  auto logs = small_cohort();
  auto& prompted = logs.by_phase[Phase::Prompted];
  prompted[1] = slice_strokes(prompted[1], 0, 1200);
  const auto report = run_initial(logs, InitialProtocol{}, OcsvmConfig{});
  REQUIRE(report.notes.size() == 1);
  CHECK(report.notes[0].find("user=" + prompted[1].user_id()) != std::string::npos);
  CHECK(report.tables[0].cells[0].genuine_runs == 3);
  CHECK(report.tables[1].cells[0].genuine_runs == 4);
}

TEST_CASE("trend check") {
  SUBCASE("published tables follow the block-size trade-off") {
    const auto findings = trend_check(published_tables());
    REQUIRE(findings.size() == 4);
    for (const auto& f : findings) CHECK(f.pass);
  }
  SUBCASE("constant report passes") {
    EvalReport r;
    r.tables.push_back({"initial-prompted",
                        {cell(Phase::Prompted, 30, 0.1, 0.1, 2), cell(Phase::Prompted, 50, 0.1, 0.1, 2),
                         cell(Phase::Prompted, 80, 0.1, 0.1, 2), cell(Phase::Prompted, 100, 0.1, 0.1, 2)}});
    for (const auto& f : trend_check(r)) CHECK(f.pass);
  }
  SUBCASE("violations name the offending cells") {
    auto r = published_tables();
    r.tables[0].cells[2].far = 0.001;
    r.tables[1].cells[3].frr = 0.9;
    const auto findings = trend_check(r);
    for (const auto& f : findings) {
      if (f.phase == Phase::Prompted && f.metric == "far") {
        CHECK_FALSE(f.pass);
        REQUIRE(f.offending.size() == 1);
        CHECK(f.offending[0] == std::pair<std::size_t, std::size_t>{50, 80});
      } else if (f.phase == Phase::Freestyle && f.metric == "frr") {
        CHECK_FALSE(f.pass);
        CHECK(f.offending[0] == std::pair<std::size_t, std::size_t>{80, 100});
      } else {
        CHECK(f.pass);
      }
    }
  }
}

TEST_CASE("report file") {
  auto r = published_tables();
  r.config = {{"protocol", "initial"}, {"threshold", "0.65"}};
  r.notes = {"phase=prompted user=x skipped"};
  const auto text = serialize_report(r);
  CHECK(text.starts_with("keydyn-report v1\n"));
  CHECK(text.find("phase,protocol,param,far,frr,avg_blocks,impostor_runs,genuine_runs") != std::string::npos);
  CHECK(parse_report(text) == r);
  CHECK_THROWS_AS(parse_report("keydyn-report v0\n"), Error);
  CHECK_THROWS_AS(parse_report("keydyn-report v1\n[table x]\nprompted,initial\n"), Error);

  const auto md = render_markdown(r);
  CHECK(md.find("| FAR | 0.0025 | 0.0150 | 0.0400 | 0.0525 |") != std::string::npos);
  CHECK(md.find("| Avg. # of Blocks | 1.8237 | 2.2763 | 2.4553 | 2.5737 |") != std::string::npos);
}

TEST_CASE("cohort directory round trip") {
  const auto dir = testing_support::scratch_dir("cohort_dir");
  const auto spec = default_cohort(3, 5, 600);
  write_cohort_dir(spec, dir);
  CHECK(parse_cohort(text::read_file(dir / "cohort.txt")) == spec);
  const auto loaded = load_cohort_dir(dir);
  const auto expected = generate_cohort_logs(spec);
  CHECK(loaded.by_phase == expected.by_phase);
  CHECK_THROWS_AS(load_cohort_dir(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}

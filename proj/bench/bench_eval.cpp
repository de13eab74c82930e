#include <chrono>
#include <cstdio>
#include <string>

#include "keydyn/evaluation.hpp"
#include "keydyn/kernel.hpp"

using namespace keydyn;

namespace {

template <typename Fn>
double seconds(Fn&& fn, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-14s serial %9.4fs  parallel %9.4fs  speedup %5.2fx  identical=%s\n", name, serial, parallel,
              serial / parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t users = argc > 1 ? std::stoul(argv[1]) : 10;
  std::printf("threads=%d users=%zu\n", max_threads(), users);

  const auto logs = generate_cohort_logs(default_cohort(users, 42, 2000));
  const auto raw = to_points(extract_features(logs.by_phase.at(Phase::Prompted)[0]));
  const auto x = apply_scaler(raw, fit_scaler(raw));

  GramMatrix gs, gp;
  const double t_gs = seconds([&] { gs = gram(x, 0.25, Execution::Serial); }, 5);
  const double t_gp = seconds([&] { gp = gram(x, 0.25, Execution::Parallel); }, 5);
  row("gram", t_gs, t_gp, gs == gp);

  EvalReport rs, rp;
  const double t_is = seconds([&] { rs = run_initial(logs, InitialProtocol{}, OcsvmConfig{}, Execution::Serial); }, 1);
  const double t_ip = seconds([&] { rp = run_initial(logs, InitialProtocol{}, OcsvmConfig{}, Execution::Parallel); }, 1);
  row("eval-initial", t_is, t_ip, rs == rp);

  KFoldProtocol kp;
  kp.fold_counts = {5};
  const double t_ks = seconds([&] { rs = run_kfold(logs, kp, OcsvmConfig{}, Execution::Serial); }, 1);
  const double t_kp = seconds([&] { rp = run_kfold(logs, kp, OcsvmConfig{}, Execution::Parallel); }, 1);
  row("eval-kfold", t_ks, t_kp, rs == rp);
  return 0;
}

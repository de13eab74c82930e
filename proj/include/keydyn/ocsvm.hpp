#pragma once

// One-class SVM, nu formulation with an RBF kernel.
//
// Dual problem over l training points:
//   minimize   1/2 a^T Q a,   Q_ij = exp(-gamma |x_i - x_j|^2)
//   subject to 0 <= a_i <= 1/(nu l),  sum a_i = 1
// Decision function: f(x) = sum_i a_i k(x_i, x) - rho, label +1 iff f >= -kkt_tol
// (scores within solver tolerance of the boundary count as ties).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keydyn/features.hpp"
#include "keydyn/kernel.hpp"

namespace keydyn {

inline constexpr double kAlphaFloor = 1e-8;

struct OcsvmConfig {
  double nu = 0.1;
  /// nullopt selects the scale heuristic: 1 / (4 * mean column variance of
  /// the standardized training features).
  std::optional<double> gamma;
  double kkt_tol = 1e-3;
  std::uint64_t max_iter = 100'000;

  friend bool operator==(const OcsvmConfig&, const OcsvmConfig&) = default;
};

struct OcsvmModel {
  Points support_vectors;  // standardized feature space
  std::vector<double> alpha;
  double rho = 0.0;
  double gamma = 0.0;
  Scaler scaler;
  OcsvmConfig config;
  std::string train_user;
  std::uint64_t train_digest = 0;
  bool converged = true;

  friend bool operator==(const OcsvmModel&, const OcsvmModel&) = default;
};

struct Verdict {
  int label = 1;
  double score = 0.0;
};

/// Raw solver output over the full training set.
struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> gradient;  // Q a, maintained incrementally
  double upper = 0.0;            // 1/(nu l)
  std::uint64_t iterations = 0;
  double kkt_violation = 0.0;
  bool converged = false;
};

/// SMO with two-coordinate updates on the maximal violating pair
/// (lowest index wins ties). Stops when the pair's violation <= tol.
DualSolution solve_one_class_dual(const GramMatrix& q, double nu, double tol,
                                  std::uint64_t max_iter);

/// max_{a_i < C} (-G_i) - min_{a_j > 0} (-G_j); zero or negative at optimum.
double kkt_violation(std::span<const double> alpha, std::span<const double> gradient,
                     double upper);

double dual_objective(const GramMatrix& q, std::span<const double> alpha);

/// Gamma picked by the scale heuristic for already standardized points.
double scale_heuristic_gamma(std::span<const Point> scaled);

std::uint64_t feature_digest(const FeatureMatrix& m);

struct TrainDiagnostics {
  std::vector<double> alpha;  // one per training row, before the floor cut
  std::uint64_t iterations = 0;
  double kkt_violation = 0.0;
};

/// Fits the scaler, standardizes, solves the dual and keeps the points with
/// alpha > kAlphaFloor. A model that hit max_iter is returned with
/// converged == false.
OcsvmModel train(const FeatureMatrix& features, const OcsvmConfig& cfg,
                 std::string train_user = {}, Execution exec = Execution::Serial,
                 TrainDiagnostics* diag = nullptr);

/// sum_i a_i k(s_i, x) for a point already in standardized space.
double kernel_sum(const OcsvmModel& model, const Point& scaled);

/// `raw` is in milliseconds (hold, ud, dd, uu). Throws NonFiniteInput.
Verdict decision(const OcsvmModel& model, const Point& raw);
Verdict decision(const OcsvmModel& model, const DigraphFeatures& x);

std::vector<Verdict> predict_block(const OcsvmModel& model, const FeatureMatrix& block);

std::string serialize_model(const OcsvmModel& model);
OcsvmModel parse_model(std::string_view bytes);

}  // namespace keydyn

#include "keydyn/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "keydyn/error.hpp"
#include "keydyn/text.hpp"

namespace keydyn {

namespace {

constexpr std::string_view kModelMagic = "keydyn-model";
constexpr std::string_view kModelVersion = "v1";

}  // namespace

double kkt_violation(std::span<const double> alpha, std::span<const double> gradient,
                     double upper) {
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (alpha[k] < upper) up = std::max(up, -gradient[k]);
    if (alpha[k] > 0.0) low = std::min(low, -gradient[k]);
  }
  if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
  return up - low;
}

double dual_objective(const GramMatrix& q, std::span<const double> alpha) {
  double obj = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0.0) continue;
    auto row = q.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) s += row[j] * alpha[j];
    obj += alpha[i] * s;
  }
  return 0.5 * obj;
}

DualSolution solve_one_class_dual(const GramMatrix& q, double nu, double tol,
                                  std::uint64_t max_iter) {
  const std::size_t l = q.size();
  DualSolution sol;
  sol.upper = 1.0 / (nu * static_cast<double>(l));
  const double c = sol.upper;
  sol.alpha.assign(l, 0.0);

  // Fill the box greedily so that sum a = 1: floor(nu l) entries at C, one
  // entry takes the remainder.
  double remaining = 1.0;
  for (std::size_t k = 0; k < l && remaining > 0.0; ++k) {
    const double a = std::min(c, remaining);
    sol.alpha[k] = a;
    remaining -= a;
    if (remaining < 1e-15) remaining = 0.0;
  }

  sol.gradient.assign(l, 0.0);
  for (std::size_t k = 0; k < l; ++k) {
    if (sol.alpha[k] == 0.0) continue;
    auto row = q.row(k);
    for (std::size_t m = 0; m < l; ++m) sol.gradient[m] += sol.alpha[k] * row[m];
  }

  auto& alpha = sol.alpha;
  auto& grad = sol.gradient;
  while (true) {
    std::size_t i = l, j = l;
    double up = -std::numeric_limits<double>::infinity();
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < l; ++k) {
      if (alpha[k] < c && -grad[k] > up) {
        up = -grad[k];
        i = k;
      }
      if (alpha[k] > 0.0 && -grad[k] < low) {
        low = -grad[k];
        j = k;
      }
    }
    sol.kkt_violation = (i == l || j == l) ? 0.0 : up - low;
    if (sol.kkt_violation <= tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= max_iter) break;
    ++sol.iterations;

    double curvature = q(i, i) + q(j, j) - 2.0 * q(i, j);
    if (curvature <= 0.0) curvature = 1e-12;
    double step = (grad[j] - grad[i]) / curvature;
    const double room_i = c - alpha[i];
    bool i_at_upper = false, j_at_zero = false;
    if (step >= std::min(room_i, alpha[j])) {
      step = std::min(room_i, alpha[j]);
      i_at_upper = room_i <= alpha[j];
      j_at_zero = alpha[j] <= room_i;
    }
    alpha[i] = i_at_upper ? c : alpha[i] + step;
    alpha[j] = j_at_zero ? 0.0 : alpha[j] - step;

    auto qi = q.row(i);
    auto qj = q.row(j);
    for (std::size_t k = 0; k < l; ++k) grad[k] += step * (qi[k] - qj[k]);
  }
  return sol;
}

double scale_heuristic_gamma(std::span<const Point> scaled) {
  if (scaled.empty()) return 0.25;
  const double n = static_cast<double>(scaled.size());
  double var_sum = 0.0;
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    double mean = 0.0;
    for (const auto& p : scaled) mean += p[c];
    mean /= n;
    double ss = 0.0;
    for (const auto& p : scaled) ss += (p[c] - mean) * (p[c] - mean);
    var_sum += ss / n;
  }
  const double mean_var = var_sum / static_cast<double>(kFeatureDim);
  // Constant data: every column collapsed to zero after standardization.
  if (!(mean_var > 1e-12)) return 0.25;
  return 1.0 / (4.0 * mean_var);
}

std::uint64_t feature_digest(const FeatureMatrix& m) {
  std::uint64_t h = text::fnv1a({});
  for (const auto& r : m.rows) {
    for (auto v : {r.hold, r.ud, r.dd, r.uu}) {
      const auto raw = static_cast<std::uint64_t>(v.count);
      char bytes[8];
      for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((raw >> (8 * b)) & 0xff);
      h = text::fnv1a(std::string_view(bytes, 8), h);
    }
  }
  return h;
}

double kernel_sum(const OcsvmModel& model, const Point& scaled) {
  double s = 0.0;
  for (std::size_t k = 0; k < model.alpha.size(); ++k)
    s += model.alpha[k] * rbf(model.support_vectors[k], scaled, model.gamma);
  return s;
}

OcsvmModel train(const FeatureMatrix& features, const OcsvmConfig& cfg, std::string train_user,
                 Execution exec, TrainDiagnostics* diag) {
  if (!(cfg.nu > 0.0 && cfg.nu <= 1.0))
    throw Error(Errc::InvalidArgument, "nu must lie in (0, 1]");
  if (cfg.gamma && !(*cfg.gamma > 0.0 && std::isfinite(*cfg.gamma)))
    throw Error(Errc::InvalidArgument, "gamma must be positive");
  if (!(cfg.kkt_tol > 0.0)) throw Error(Errc::InvalidArgument, "kkt_tol must be positive");
  const auto needed = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(1.0 / cfg.nu)));
  if (features.size() < needed)
    throw Error(Errc::InsufficientData, "training needs >= " + std::to_string(needed) +
                                            " rows, got " + std::to_string(features.size()));

  const auto raw = to_points(features);
  OcsvmModel model;
  model.config = cfg;
  model.train_user = std::move(train_user);
  model.train_digest = feature_digest(features);
  model.scaler = fit_scaler(std::span<const Point>(raw));
  const auto x = apply_scaler(std::span<const Point>(raw), model.scaler);
  model.gamma = cfg.gamma ? *cfg.gamma : scale_heuristic_gamma(x);

  const auto q = gram(x, model.gamma, exec);
  auto sol = solve_one_class_dual(q, cfg.nu, cfg.kkt_tol, cfg.max_iter);
  model.converged = sol.converged;

  for (std::size_t k = 0; k < x.size(); ++k) {
    if (sol.alpha[k] > kAlphaFloor) {
      model.support_vectors.push_back(x[k]);
      model.alpha.push_back(sol.alpha[k]);
    }
  }

  // rho from the stored model itself, so decision() on a training point
  // reproduces exactly the value rho was derived from.
  const double c = sol.upper;
  double first_free = 0.0, free_shift = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = sol.alpha[k];
    const double s = kernel_sum(model, x[k]);
    if (a > kAlphaFloor && a < c) {
      if (free_count == 0) first_free = s;
      free_shift += s - first_free;
      ++free_count;
    } else if (a >= c) {
      lower = std::max(lower, s);
    } else {
      upper = std::min(upper, s);
    }
  }
  if (free_count > 0) {
    model.rho = first_free + free_shift / static_cast<double>(free_count);
  } else if (std::isfinite(lower) && std::isfinite(upper)) {
    model.rho = (lower + upper) / 2.0;
  } else {
    model.rho = std::isfinite(lower) ? lower : upper;
  }

  if (diag) {
    diag->alpha = std::move(sol.alpha);
    diag->iterations = sol.iterations;
    diag->kkt_violation = sol.kkt_violation;
  }
  return model;
}

Verdict decision(const OcsvmModel& model, const Point& raw) {
  for (double v : raw)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteInput, "feature value is not finite");
  const double score = kernel_sum(model, apply_scaler(raw, model.scaler)) - model.rho;
  return Verdict{score >= -model.config.kkt_tol ? 1 : -1, score};
}

Verdict decision(const OcsvmModel& model, const DigraphFeatures& x) {
  return decision(model, to_point(x));
}

std::vector<Verdict> predict_block(const OcsvmModel& model, const FeatureMatrix& block) {
  std::vector<Verdict> out;
  out.reserve(block.size());
  for (const auto& r : block.rows) out.push_back(decision(model, r));
  return out;
}

namespace {

std::string join4(const Point& p) {
  std::string s;
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    if (c) s += ',';
    s += text::format_real(p[c]);
  }
  return s;
}

Point parse4(std::string_view s) {
  auto parts = text::split(s, ',');
  if (parts.size() != kFeatureDim) throw Error(Errc::CorruptModel, "bad vector " + std::string(s));
  Point p;
  for (std::size_t c = 0; c < kFeatureDim; ++c)
    if (!text::parse_real(parts[c], p[c])) throw Error(Errc::CorruptModel, "bad real " + std::string(parts[c]));
  return p;
}

double parse_real_field(std::string_view v) {
  double d = 0.0;
  if (!text::parse_real(v, d)) throw Error(Errc::CorruptModel, "bad real " + std::string(v));
  return d;
}

}  // namespace

std::string serialize_model(const OcsvmModel& m) {
  std::string body;
  body += std::string(kModelMagic) + " " + std::string(kModelVersion) + "\n";
  body += "user=" + m.train_user + "\n";
  body += "nu=" + text::format_real(m.config.nu) + "\n";
  body += "gamma=" + text::format_real(m.gamma) + "\n";
  body += "rho=" + text::format_real(m.rho) + "\n";
  body += "scaler_mean=" + join4(m.scaler.mean) + "\n";
  body += "scaler_std=" + join4(m.scaler.std) + "\n";
  body += std::string("gamma_mode=") + (m.config.gamma ? "fixed" : "scale") + "\n";
  body += "kkt_tol=" + text::format_real(m.config.kkt_tol) + "\n";
  body += "max_iter=" + std::to_string(m.config.max_iter) + "\n";
  body += std::string("converged=") + (m.converged ? "1" : "0") + "\n";
  body += "train_digest=" + text::hex64(m.train_digest) + "\n";

  std::string svs;
  for (std::size_t k = 0; k < m.alpha.size(); ++k)
    svs += text::format_real(m.alpha[k]) + "," + join4(m.support_vectors[k]) + "\n";

  const auto digest = text::fnv1a(svs, text::fnv1a(body));
  return body + "digest=" + text::hex64(digest) + "\n" + svs;
}

OcsvmModel parse_model(std::string_view bytes) {
  auto ls = text::lines(bytes);
  if (ls.empty()) throw Error(Errc::CorruptModel, "empty model file");
  {
    auto head = text::split(ls[0], ' ');
    if (head.size() != 2 || head[0] != kModelMagic) throw Error(Errc::CorruptModel, "not a model file");
    if (head[1] != kModelVersion) throw Error(Errc::VersionMismatch, "model version " + std::string(head[1]));
  }

  static constexpr std::string_view kKeys[] = {"user",      "nu",       "gamma",     "rho",
                                               "scaler_mean", "scaler_std", "gamma_mode", "kkt_tol",
                                               "max_iter",  "converged", "train_digest", "digest"};
  constexpr std::size_t kKeyCount = std::size(kKeys);
  if (ls.size() < 1 + kKeyCount) throw Error(Errc::CorruptModel, "truncated model header");

  std::string_view values[kKeyCount];
  for (std::size_t k = 0; k < kKeyCount; ++k) {
    auto line = ls[1 + k];
    auto eq = line.find('=');
    if (eq == std::string_view::npos || line.substr(0, eq) != kKeys[k])
      throw Error(Errc::CorruptModel, "expected key " + std::string(kKeys[k]));
    values[k] = line.substr(eq + 1);
  }

  // Digest covers every byte except the digest line itself.
  std::string body, svs;
  for (std::size_t k = 0; k < kKeyCount; ++k) {
    body += ls[k];
    body += '\n';
  }
  for (std::size_t k = 1 + kKeyCount; k < ls.size(); ++k) {
    if (ls[k].empty()) continue;
    svs += ls[k];
    svs += '\n';
  }
  if (text::hex64(text::fnv1a(svs, text::fnv1a(body))) != values[11])
    throw Error(Errc::CorruptModel, "digest mismatch");

  OcsvmModel m;
  m.train_user = std::string(values[0]);
  m.config.nu = parse_real_field(values[1]);
  m.gamma = parse_real_field(values[2]);
  m.rho = parse_real_field(values[3]);
  m.scaler.mean = parse4(values[4]);
  m.scaler.std = parse4(values[5]);
  if (values[6] == "fixed") {
    m.config.gamma = m.gamma;
  } else if (values[6] != "scale") {
    throw Error(Errc::CorruptModel, "gamma_mode");
  }
  m.config.kkt_tol = parse_real_field(values[7]);
  if (!text::parse_uint(values[8], m.config.max_iter)) throw Error(Errc::CorruptModel, "max_iter");
  if (values[9] != "0" && values[9] != "1") throw Error(Errc::CorruptModel, "converged");
  m.converged = values[9] == "1";
  {
    auto hex = values[10];
    if (hex.size() != 16) throw Error(Errc::CorruptModel, "train_digest");
    std::uint64_t d = 0;
    for (char ch : hex) {
      d <<= 4;
      if (ch >= '0' && ch <= '9') d |= static_cast<std::uint64_t>(ch - '0');
      else if (ch >= 'a' && ch <= 'f') d |= static_cast<std::uint64_t>(ch - 'a' + 10);
      else throw Error(Errc::CorruptModel, "train_digest");
    }
    m.train_digest = d;
  }

  for (auto line : text::lines(svs)) {
    auto comma = line.find(',');
    if (comma == std::string_view::npos) throw Error(Errc::CorruptModel, "bad support vector line");
    m.alpha.push_back(parse_real_field(line.substr(0, comma)));
    m.support_vectors.push_back(parse4(line.substr(comma + 1)));
  }
  if (!(m.config.nu > 0.0 && m.config.nu <= 1.0) || !(m.gamma > 0.0))
    throw Error(Errc::CorruptModel, "invalid hyperparameters");
  return m;
}

}  // namespace keydyn

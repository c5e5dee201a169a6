#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>

#include "json.hpp"
#include "logcoral/cli/cli.hpp"

namespace logcoral::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr double kStep = 1e-5;

struct LossCheck {
  std::string name;
  double threshold;
  double worst = 0.0;
  int worst_trial = -1;
  json worst_input = json::object();
};

Matrix random_spd(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(0.0, 0.1);
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  // Eigenvalues at least 0.4 apart.
  Vector spectrum(d);
  for (int i = 0; i < d; ++i) spectrum[i] = 0.5 * (i + 1) + jitter(rng);
  Matrix m = q * spectrum.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Vector random_vector(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

// Central differences in the symmetric-matrix convention: C_ij and C_ji move
// together, so off-diagonal responses are halved.
Matrix fd_symmetric(const std::function<double(const SymmetricMatrix&)>& f, const Matrix& c) {
  const Eigen::Index d = c.rows();
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Matrix up = c;
      Matrix down = c;
      up(i, j) += kStep;
      down(i, j) -= kStep;
      if (i != j) {
        up(j, i) += kStep;
        down(j, i) -= kStep;
      }
      double v = (f(SymmetricMatrix::symmetrize(up)) - f(SymmetricMatrix::symmetrize(down))) /
                 (2.0 * kStep);
      if (i != j) v *= 0.5;
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Vector fd_vector(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector up = x;
    Vector down = x;
    up[i] += kStep;
    down[i] -= kStep;
    g[i] = (f(up) - f(down)) / (2.0 * kStep);
  }
  return g;
}

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  const double scale = numeric.cwiseAbs().maxCoeff();
  const double diff = (analytic - numeric).cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void record(LossCheck& check, double error, int trial, const json& input) {
  const double e = std::isnan(error) ? INFINITY : error;
  if (check.worst_trial < 0 || e > check.worst) {
    check.worst = e;
    check.worst_trial = trial;
    check.worst_input = input;
  }
}

}  // namespace

int cmd_gradcheck(const RunConfig& config, std::ostream& out) {
  const int d = config.dim.value_or(5);
  const double sign = config.corrupt_target_sign ? -1.0 : 1.0;
  std::vector<LossCheck> checks{{"coral", 1e-6}, {"logcoral", 1e-4}, {"mean", 1e-6}};
  if (d == 1) checks.push_back({"logcoral_closed_form", 1e-10});

  for (int trial = 0; trial < config.trials; ++trial) {
    std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(trial));
    const Matrix cs = random_spd(rng, d);
    const Matrix ct = random_spd(rng, d);
    const SymmetricMatrix s = SymmetricMatrix::symmetrize(cs);
    const SymmetricMatrix t = SymmetricMatrix::symmetrize(ct);
    const double eps = config.epsilon.value_or(default_pair_epsilon(s, t));
    const json input{{"trial", trial},  {"seed", config.seed + static_cast<std::uint64_t>(trial)},
                     {"dim", d},        {"epsilon", eps},
                     {"cov_source", matrix_json(cs)}, {"cov_target", matrix_json(ct)}};

    const LossBundle coral = coral_loss(s, t);
    double err = std::max(
        relative_error(coral.grad_source,
                       fd_symmetric([&](const SymmetricMatrix& x) { return coral_loss(x, t).value; },
                                    cs)),
        relative_error(sign * coral.grad_target,
                       fd_symmetric([&](const SymmetricMatrix& x) { return coral_loss(s, x).value; },
                                    ct)));
    record(checks[0], err, trial, input);

    const LossBundle logc = logcoral_loss(s, t, eps);
    err = std::max(
        relative_error(logc.grad_source,
                       fd_symmetric(
                           [&](const SymmetricMatrix& x) { return logcoral_loss(x, t, eps).value; },
                           cs)),
        relative_error(sign * logc.grad_target,
                       fd_symmetric(
                           [&](const SymmetricMatrix& x) { return logcoral_loss(s, x, eps).value; },
                           ct)));
    record(checks[1], err, trial, input);

    const Vector ms = random_vector(rng, d);
    const Vector mt = random_vector(rng, d);
    const LossBundle mean = mean_loss(ms, mt);
    json mean_input = input;
    mean_input["mean_source"] = matrix_json(ms);
    mean_input["mean_target"] = matrix_json(mt);
    err = std::max(
        relative_error(mean.grad_source,
                       fd_vector([&](const Vector& x) { return mean_loss(x, mt).value; }, ms)),
        relative_error(sign * mean.grad_target,
                       fd_vector([&](const Vector& x) { return mean_loss(ms, x).value; }, mt)));
    record(checks[2], err, trial, mean_input);

    if (d == 1) {
      // d/da (1/4)(log(a+e) - log(b+e))^2 = (log(a+e) - log(b+e)) / (2(a+e)).
      const double a = cs(0, 0) + eps;
      const double b = ct(0, 0) + eps;
      const double gap = std::log(a) - std::log(b);
      Matrix closed_s(1, 1);
      Matrix closed_t(1, 1);
      closed_s(0, 0) = gap / (2.0 * a);
      closed_t(0, 0) = -gap / (2.0 * b);
      err = std::max(relative_error(logc.grad_source, closed_s),
                     relative_error(sign * logc.grad_target, closed_t));
      record(checks[3], err, trial, input);
    }
  }

  bool all_pass = true;
  for (const LossCheck& c : checks) all_pass = all_pass && c.worst <= c.threshold;

  std::filesystem::path dump;
  if (!all_pass) {
    json failures = json::array();
    for (const LossCheck& c : checks) {
      if (c.worst <= c.threshold) continue;
      failures.push_back({{"loss", c.name},
                          {"relative_error", c.worst},
                          {"threshold", c.threshold},
                          {"input", c.worst_input}});
    }
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    dump = config.out / "gradcheck_failure.json";
    std::ofstream file(dump);
    file << failures.dump(1) << "\n";
    if (!file) throw UsageError("cannot write '" + dump.string() + "'");
  }

  switch (config.format) {
    case OutputFormat::kJson: {
      json report{{"dim", d}, {"trials", config.trials}, {"seed", config.seed}, {"losses", json::array()}};
      for (const LossCheck& c : checks) {
        report["losses"].push_back({{"loss", c.name},
                                    {"max_relative_error", c.worst},
                                    {"threshold", c.threshold},
                                    {"passed", c.worst <= c.threshold}});
      }
      report["passed"] = all_pass;
      if (!dump.empty()) report["failure_dump"] = dump.string();
      out << report.dump() << "\n";
      break;
    }
    case OutputFormat::kCsv:
      out << "loss,max_relative_error,threshold,passed\n";
      for (const LossCheck& c : checks) {
        out << c.name << "," << c.worst << "," << c.threshold << ","
            << (c.worst <= c.threshold ? "true" : "false") << "\n";
      }
      break;
    case OutputFormat::kText:
      out << "gradient check: d=" << d << ", " << config.trials << " trial(s), seed "
          << config.seed << "\n";
      for (const LossCheck& c : checks) {
        out << "  " << std::left << std::setw(22) << c.name << std::scientific
            << std::setprecision(3) << c.worst << "  (<= " << c.threshold << ")  "
            << (c.worst <= c.threshold ? "PASS" : "FAIL") << "\n";
        out.unsetf(std::ios::floatfield);
      }
      if (!dump.empty()) out << "worst-case inputs written to " << dump.string() << "\n";
      break;
  }
  return all_pass ? kExitOk : kExitFailure;
}

}  // namespace logcoral::cli

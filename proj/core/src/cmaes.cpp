#include "meshreg/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "meshreg/rng.hpp"

namespace meshreg {
namespace {

void check_config(const Eigen::VectorXd& x0, const OptConfig& cfg, int lambda) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw std::invalid_argument("empty parameter vector");
  if (static_cast<int>(cfg.bounds.size()) != n) {
    throw std::invalid_argument("bounds do not match parameter count");
  }
  for (int i = 0; i < n; ++i) {
    const auto [lo, hi] = cfg.bounds[i];
    if (!(lo < hi)) throw std::invalid_argument("bound lo >= hi at index " +
                                                std::to_string(i));
    if (x0[i] < lo || x0[i] > hi) {
      throw std::invalid_argument("x0 outside bounds at index " + std::to_string(i));
    }
  }
  if (cfg.maxiter < 1) throw std::invalid_argument("maxiter must be >= 1");
  if (lambda < 4) throw std::invalid_argument("population size must be >= 4");
  if (cfg.sigma0 <= 0.0) throw std::invalid_argument("sigma0 must be positive");
}

}  // namespace

int default_popsize(int n) {
  if (n < 1) throw std::invalid_argument("dimension must be >= 1");
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(n))));
}

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::maxiter: return "maxiter";
    case TerminationReason::ftol: return "ftol";
    case TerminationReason::xtol: return "xtol";
  }
  return "unknown";
}

Eigen::VectorXd repair_to_bounds(const Eigen::VectorXd& x,
                                 const std::vector<std::array<double, 2>>& bounds) {
  if (static_cast<size_t>(x.size()) != bounds.size()) {
    throw std::invalid_argument("bounds do not match parameter count");
  }
  Eigen::VectorXd out = x;
  for (int i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(out[i], bounds[i][0], bounds[i][1]);
  }
  return out;
}

OptResult minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                   const Eigen::VectorXd& x0, const OptConfig& cfg) {
  const int n = static_cast<int>(x0.size());
  const int lambda = cfg.popsize > 0 ? cfg.popsize : default_popsize(n);
  check_config(x0, cfg, lambda);

  Eigen::VectorXd lo(n), span(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = cfg.bounds[i][0];
    span[i] = cfg.bounds[i][1] - cfg.bounds[i][0];
  }
  auto denorm = [&](const Eigen::VectorXd& u) -> Eigen::VectorXd {
    return lo.array() + span.array() * u.array();
  };

  OptResult result;
  result.f_best = f(x0);
  result.evaluations = 1;
  result.x_best = x0;
  if (!std::isfinite(result.f_best)) {
    throw std::runtime_error("invalid starting point");
  }

  // Selection and adaptation constants (standard CMA-ES settings).
  const int mu = lambda / 2;
  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) {
    weights[i] = std::log(mu + 0.5) - std::log(static_cast<double>(i + 1));
  }
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();
  const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
  const double cs = (mueff + 2.0) / (n + mueff + 5.0);
  const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
  const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) /
                                            ((n + 2.0) * (n + 2.0) + mueff));
  const double damps =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
  const double chi_n =
      std::sqrt(static_cast<double>(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  // State in normalized coordinates: every box becomes [0,1].
  Eigen::VectorXd mean = ((x0 - lo).array() / span.array()).matrix();
  double sigma = cfg.sigma0 * 0.5;  // relative to the unit half-box
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd pc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(n);
  Rng rng(cfg.seed);

  const std::vector<std::array<double, 2>> unit_bounds(
      n, std::array<double, 2>{0.0, 1.0});
  const int hist_window = 10;
  result.termination_reason = TerminationReason::maxiter;

  for (int gen = 0; gen < cfg.maxiter; ++gen) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("covariance eigendecomposition failed");
    }
    const Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(1e-20);
    const Eigen::MatrixXd& B = eig.eigenvectors();
    const Eigen::VectorXd D = evals.cwiseSqrt();

    std::vector<Eigen::VectorXd> xs(lambda);
    std::vector<double> fs(lambda);
    for (int k = 0; k < lambda; ++k) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.gaussian();
      xs[k] = repair_to_bounds(mean + sigma * (B * D.cwiseProduct(z)), unit_bounds);
      fs[k] = f(denorm(xs[k]));
      ++result.evaluations;
    }

    std::vector<int> order(lambda);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });

    const double gen_best = fs[order.front()];
    const double gen_worst = fs[order.back()];
    result.history.push_back(gen_best);
    if (gen_best < result.f_best) {
      result.f_best = gen_best;
      result.x_best = denorm(xs[order.front()]);
    }

    const Eigen::VectorXd old_mean = mean;
    mean.setZero();
    for (int i = 0; i < mu; ++i) mean += weights[i] * xs[order[i]];

    const Eigen::VectorXd shift = (mean - old_mean) / sigma;
    const Eigen::VectorXd c_inv_sqrt_shift =
        B * (B.transpose() * shift).cwiseQuotient(D);
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * c_inv_sqrt_shift;
    const double ps_decay =
        std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1)));
    const bool hsig =
        ps.norm() / ps_decay < (1.4 + 2.0 / (n + 1.0)) * chi_n;
    pc = (1.0 - cc) * pc +
         (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * shift;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Eigen::VectorXd y = (xs[order[i]] - old_mean) / sigma;
      rank_mu += weights[i] * y * y.transpose();
    }
    C = (1.0 - c1 - cmu) * C +
        c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) +
        cmu * rank_mu;
    C = 0.5 * (C + C.transpose()).eval();
    if (cfg.diagonal_only) {
      // Materialize first: assigning C.diagonal().asDiagonal() back into C
      // zero-fills C before the aliased diagonal is read.
      const Eigen::VectorXd diag = C.diagonal();
      C = diag.asDiagonal();
    }

    sigma *= std::exp((cs / damps) * (ps.norm() / chi_n - 1.0));

    if (cfg.trace) {
      *cfg.trace << "{\"generation\":" << gen << ",\"f_best\":" << gen_best
                 << ",\"sigma\":" << sigma << ",\"spread\":" << gen_worst - gen_best
                 << "}\n";
    }

    // ftol: recent generation-best values and the current population have
    // collapsed to a flat region.
    const int hist = static_cast<int>(result.history.size());
    if (hist >= hist_window) {
      const auto [lo_it, hi_it] = std::minmax_element(
          result.history.end() - hist_window, result.history.end());
      const double scale = std::max(1.0, std::abs(gen_best));
      if ((*hi_it - *lo_it) <= cfg.ftol * scale &&
          (gen_worst - gen_best) <= cfg.ftol * scale) {
        result.termination_reason = TerminationReason::ftol;
        break;
      }
    }
    if (sigma * D.maxCoeff() <= cfg.xtol) {
      result.termination_reason = TerminationReason::xtol;
      break;
    }
  }
  return result;
}

}  // namespace meshreg

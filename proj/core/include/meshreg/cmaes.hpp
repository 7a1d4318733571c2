// Bounded derivative-free minimization with (mu/mu_w, lambda) CMA-ES.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace meshreg {

// Population heuristic 4 + floor(3 ln n). The registration pipeline
// overrides this to 15 (run-config default); the heuristic stays available
// for other problem sizes.
int default_popsize(int n);

struct OptConfig {
  int maxiter = 100;
  int popsize = 0;  // <= 0 selects default_popsize(n)
  // Initial step size relative to half the (normalized) box width; 0.3 is
  // the standard CMA-ES choice.
  double sigma0 = 0.3;
  std::vector<std::array<double, 2>> bounds;  // per-variable [lo, hi]
  uint64_t seed = 0;
  bool diagonal_only = false;
  // ftol: relative spread of recent generation-best values; xtol: absolute
  // collapse of the sampling step in normalized coordinates.
  double ftol = 1e-8;
  double xtol = 1e-10;
  std::ostream* trace = nullptr;  // optional JSON-lines telemetry
};

enum class TerminationReason { maxiter, ftol, xtol };

std::string to_string(TerminationReason reason);

struct OptResult {
  Eigen::VectorXd x_best;
  double f_best = 0.0;
  int evaluations = 0;
  TerminationReason termination_reason = TerminationReason::maxiter;
  std::vector<double> history;  // per-generation best f
};

// Component-wise clamp into the bounds box.
Eigen::VectorXd repair_to_bounds(const Eigen::VectorXd& x,
                                 const std::vector<std::array<double, 2>>& bounds);

// Minimizes f over the bounds box starting from x0 (must lie inside).
// Variables are normalized to the unit box internally so mixed-unit
// parameters share one step size. Candidates outside the box are repaired by
// clamping before evaluation and recombination. Deterministic for a fixed
// seed. Throws "invalid starting point" when f(x0) is not finite.
OptResult minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                   const Eigen::VectorXd& x0, const OptConfig& cfg);

}  // namespace meshreg

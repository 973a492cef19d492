#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace snapnet {

struct FitParameter {
  std::string name;
  double lower = 0;
  double upper = 1;
  double initial = 0;
};

/// Residual of a target is (metric - value) / scale.
struct FitTarget {
  std::string name;
  double value = 0;
  double scale = 1;
  double weight = 1;
};

struct FitProblem {
  std::vector<FitParameter> parameters;
  std::vector<FitTarget> targets;
  std::uint64_t seed = 1;
  int max_evals = 300;
  double tol = 1e-10;  // objective spread that ends a simplex run
  int restarts = 2;
};

void check_problem(const FitProblem& problem);

/// Maps a parameter vector to one metric per target. Non-finite metrics
/// mark the point as infeasible; an exception is an evaluator failure.
using Evaluator = std::function<std::vector<double>(const std::vector<double>&)>;

struct FitEvaluation {
  std::vector<double> x;
  std::vector<double> metrics;
  double objective = 0;
};

struct FitResult {
  std::vector<double> x;
  std::vector<double> metrics;
  std::vector<double> residuals;
  double objective = 0;
  double initial_objective = 0;
  bool converged = false;
  int evaluations = 0;
  std::vector<FitEvaluation> log;
};

double fit_objective(const FitProblem& problem, const std::vector<double>& metrics);

/// Bounded Nelder-Mead on the unit box of the parameter bounds, restarted
/// from the best point along seeded random directions when a run stalls.
/// Never returns a point worse than the initial one.
FitResult fit_parameters(const FitProblem& problem, const Evaluator& evaluate);

}  // namespace snapnet

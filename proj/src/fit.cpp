#include "snapnet/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "snapnet/error.hpp"

namespace snapnet {

void check_problem(const FitProblem& problem) {
  if (problem.parameters.empty()) throw Error(Errc::kInvalidArgument, "fit has no free parameters");
  if (problem.targets.empty()) throw Error(Errc::kInvalidArgument, "fit has no targets");
  for (const auto& p : problem.parameters) {
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper)) {
      throw Error(Errc::kInvalidArgument, "parameter '" + p.name + "' needs finite lower < upper");
    }
    if (!(p.initial >= p.lower && p.initial <= p.upper)) {
      throw Error(Errc::kInvalidArgument, "parameter '" + p.name + "' starts outside its bounds");
    }
  }
  bool any = false;
  for (const auto& t : problem.targets) {
    if (!(t.weight >= 0) || !(t.scale > 0) || !std::isfinite(t.value)) {
      throw Error(Errc::kInvalidArgument, "target '" + t.name + "' needs weight >= 0, scale > 0");
    }
    any = any || t.weight > 0;
  }
  if (!any) throw Error(Errc::kInvalidArgument, "all target weights are zero");
  if (problem.max_evals < 1) throw Error(Errc::kInvalidArgument, "max_evals must be >= 1");
}

double fit_objective(const FitProblem& problem, const std::vector<double>& metrics) {
  if (metrics.size() != problem.targets.size()) {
    throw Error(Errc::kEvaluatorFailure, "evaluator returned the wrong number of metrics");
  }
  double f = 0;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& t = problem.targets[i];
    if (!std::isfinite(metrics[i])) return std::numeric_limits<double>::infinity();
    const double r = (metrics[i] - t.value) / t.scale;
    f += t.weight * r * r;
  }
  return f;
}

namespace {

struct MaxEvals {};

class Search {
 public:
  Search(const FitProblem& problem, const Evaluator& evaluate, FitResult& result)
      : problem_(problem), evaluate_(evaluate), result_(result) {}

  std::vector<double> to_params(const std::vector<double>& u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto& p = problem_.parameters[i];
      x[i] = p.lower + std::clamp(u[i], 0.0, 1.0) * (p.upper - p.lower);
    }
    return x;
  }

  double operator()(const std::vector<double>& u) {
    if (result_.evaluations >= problem_.max_evals) throw MaxEvals{};
    const auto x = to_params(u);
    std::vector<double> metrics;
    try {
      metrics = evaluate_(x);
    } catch (const std::exception& err) {
      std::ostringstream os;
      os << err.what() << " at parameters [";
      for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
      os << "]";
      throw Error(Errc::kEvaluatorFailure, os.str());
    }
    const double f = fit_objective(problem_, metrics);
    ++result_.evaluations;
    result_.log.push_back({x, metrics, f});
    if (f < result_.objective) {
      result_.objective = f;
      result_.x = x;
      result_.metrics = metrics;
    }
    return f;
  }

 private:
  const FitProblem& problem_;
  const Evaluator& evaluate_;
  FitResult& result_;
};

struct Vertex {
  std::vector<double> u;
  double f;
};

std::vector<double> clamp_unit(std::vector<double> u) {
  for (auto& v : u) v = std::clamp(v, 0.0, 1.0);
  return u;
}

// One Nelder-Mead run from the given simplex; returns when the objective
// spread or the simplex diameter falls below tolerance.
void nelder_mead(std::vector<Vertex>& simplex, Search& f, double tol) {
  const std::size_t n = simplex.size() - 1;
  auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  for (;;) {
    std::stable_sort(simplex.begin(), simplex.end(), by_f);
    const double spread = simplex.back().f - simplex.front().f;
    double diameter = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        diameter = std::max(diameter, std::abs(simplex[i].u[k] - simplex[0].u[k]));
      }
    }
    if ((std::isfinite(spread) && spread <= tol) || diameter <= 1e-7) return;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i].u[k] / static_cast<double>(n);
    }
    auto along = [&](double coef) {
      std::vector<double> u(n);
      for (std::size_t k = 0; k < n; ++k) u[k] = centroid[k] + coef * (simplex[n].u[k] - centroid[k]);
      return clamp_unit(std::move(u));
    };

    const auto ur = along(-1.0);
    const double fr = f(ur);
    if (fr < simplex[0].f) {
      const auto ue = along(-2.0);
      const double fe = f(ue);
      simplex[n] = fe < fr ? Vertex{ue, fe} : Vertex{ur, fr};
      continue;
    }
    if (fr < simplex[n - 1].f) {
      simplex[n] = {ur, fr};
      continue;
    }
    const bool outside = fr < simplex[n].f;
    const auto uc = along(outside ? -0.5 : 0.5);
    const double fc = f(uc);
    if (fc < (outside ? fr : simplex[n].f)) {
      simplex[n] = {uc, fc};
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        simplex[i].u[k] = simplex[0].u[k] + 0.5 * (simplex[i].u[k] - simplex[0].u[k]);
      }
      simplex[i].f = f(simplex[i].u);
    }
  }
}

std::vector<Vertex> axis_simplex(const Vertex& start, Search& f, double step) {
  std::vector<Vertex> s{start};
  for (std::size_t k = 0; k < start.u.size(); ++k) {
    auto u = start.u;
    u[k] += u[k] + step <= 1.0 ? step : -step;
    s.push_back({u, f(u)});
  }
  return s;
}

std::vector<Vertex> random_simplex(const Vertex& start, Search& f, double step, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Vertex> s{start};
  for (std::size_t k = 0; k < start.u.size(); ++k) {
    std::vector<double> d(start.u.size());
    for (auto& v : d) v = normal(rng);
    const double len = std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0));
    auto u = start.u;
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += step * d[i] / std::max(len, 1e-12);
    u = clamp_unit(std::move(u));
    s.push_back({u, f(u)});
  }
  return s;
}

}  // namespace

FitResult fit_parameters(const FitProblem& problem, const Evaluator& evaluate) {
  check_problem(problem);
  FitResult result;
  result.objective = std::numeric_limits<double>::infinity();
  Search f(problem, evaluate, result);
  std::mt19937_64 rng(problem.seed);

  std::vector<double> u0;
  for (const auto& p : problem.parameters) u0.push_back((p.initial - p.lower) / (p.upper - p.lower));

  try {
    Vertex best{u0, f(u0)};
    result.initial_objective = best.f;
    if (result.x.empty()) result.x = f.to_params(u0);
    auto simplex = axis_simplex(best, f, 0.1);
    nelder_mead(simplex, f, problem.tol);
    best = simplex.front();
    for (int r = 0; r < problem.restarts; ++r) {
      auto again = random_simplex(best, f, 0.05, rng);
      nelder_mead(again, f, problem.tol);
      const bool improved = again.front().f < best.f - problem.tol;
      if (again.front().f < best.f) best = again.front();
      if (!improved) break;
    }
    result.converged = true;
  } catch (const MaxEvals&) {
    result.converged = false;
  }

  result.residuals.clear();
  for (std::size_t i = 0; i < problem.targets.size() && i < result.metrics.size(); ++i) {
    const auto& t = problem.targets[i];
    result.residuals.push_back((result.metrics[i] - t.value) / t.scale);
  }
  return result;
}

}  // namespace snapnet

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "snapnet/error.hpp"
#include "snapnet/fit.hpp"

using namespace snapnet;

namespace {

FitProblem quadratic() {
  FitProblem p;
  p.parameters = {{"v", 0, 10, 8}};
  p.targets = {{"v", 3, 1, 1}};
  p.max_evals = 400;
  return p;
}

// Two metrics of two parameters, with a known exact solution at (1, 2).
std::vector<double> mixed(const std::vector<double>& x) {
  return {x[0] + x[1], x[0] * x[0] - 2 * x[1] + std::sin(x[1])};
}

FitProblem mixed_problem(double x0, double x1) {
  FitProblem p;
  p.parameters = {{"a", -3, 3, x0}, {"b", -1, 4, x1}};
  const auto m = mixed({1, 2});
  p.targets = {{"sum", m[0], 1, 1}, {"mix", m[1], 1, 1}};
  p.max_evals = 2000;
  p.tol = 1e-20;
  return p;
}

}  // namespace

TEST_CASE("one-dimensional quadratic") {
  const FitResult r = fit_parameters(quadratic(), [](const std::vector<double>& x) { return x; });
  REQUIRE(r.x.size() == 1);
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-3 / 3));
  CHECK(r.objective <= r.initial_objective);
  CHECK(r.converged);
  CHECK(r.initial_objective == doctest::Approx(25.0));
  CHECK(r.evaluations == static_cast<int>(r.log.size()));
}

TEST_CASE("recovers a known parameter vector") {
  const FitResult from_truth = fit_parameters(mixed_problem(1, 2), mixed);
  CHECK(from_truth.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(from_truth.x[1] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(from_truth.objective < 1e-20);

  const FitResult from_afar = fit_parameters(mixed_problem(-0.5, 0.5), mixed);
  CHECK(from_afar.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(from_afar.x[1] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("never worse than the start and always inside the bounds") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    FitProblem p = mixed_problem(-2.5, 3.5);
    p.seed = seed;
    p.max_evals = 60;
    const FitResult r = fit_parameters(p, mixed);
    CHECK(r.objective <= r.initial_objective);
    CHECK(r.x[0] >= -3);
    CHECK(r.x[0] <= 3);
    CHECK(r.x[1] >= -1);
    CHECK(r.x[1] <= 4);
    for (const auto& e : r.log) {
      CHECK(e.x[0] >= -3);
      CHECK(e.x[1] <= 4);
    }
  }
}

TEST_CASE("same seed, same search") {
  FitProblem p = mixed_problem(-2.5, 3.5);
  p.max_evals = 150;
  const FitResult a = fit_parameters(p, mixed);
  const FitResult b = fit_parameters(p, mixed);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].x == b.log[i].x);
}

TEST_CASE("evaluation budget") {
  FitProblem p = mixed_problem(-2.5, 3.5);
  p.max_evals = 7;
  const FitResult r = fit_parameters(p, mixed);
  CHECK_FALSE(r.converged);
  CHECK(r.evaluations == 7);
  CHECK(r.objective <= r.initial_objective);
}

TEST_CASE("infeasible points and evaluator failures") {
  SUBCASE("non-finite metrics are avoided") {
    const FitResult r = fit_parameters(quadratic(), [](const std::vector<double>& x) {
      return std::vector<double>{x[0] < 2.5 ? NAN : x[0]};
    });
    CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-3));
  }
  SUBCASE("exceptions carry the parameter vector") {
    try {
      fit_parameters(quadratic(), [](const std::vector<double>& x) -> std::vector<double> {
        if (x[0] < 5) throw std::runtime_error("solver blew up");
        return x;
      });
      FAIL("expected EVALUATOR_FAILURE");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kEvaluatorFailure);
      CHECK(std::string(e.what()).find("solver blew up") != std::string::npos);
      CHECK(std::string(e.what()).find("at parameters [") != std::string::npos);
    }
  }
}

TEST_CASE("problem checks") {
  FitProblem p = quadratic();
  p.parameters[0].lower = 11;
  CHECK_THROWS_AS(check_problem(p), Error);
  p = quadratic();
  p.parameters[0].initial = -1;
  CHECK_THROWS_AS(check_problem(p), Error);
  p = quadratic();
  p.targets[0].weight = 0;
  CHECK_THROWS_AS(check_problem(p), Error);
  p = quadratic();
  p.targets[0].weight = -1;
  CHECK_THROWS_AS(check_problem(p), Error);
}

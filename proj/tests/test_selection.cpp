#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "vfpid/selection.hpp"
#include "vfpid/simulate.hpp"

using namespace vfpid;
using test_helpers::linear_truth_spec;

TEST_SUITE_BEGIN("selection");

TEST_CASE("pooled bic penalty gap is exact") {
  Eigen::VectorXd sigma2(3);
  sigma2 << 0.5, 1.5, 0.9;
  const double gap = pooled_bic(sigma2, 800, 12) - pooled_bic(sigma2, 800, 6);
  CHECK(gap == doctest::Approx(6.0 * std::log(3.0 * 800.0)).epsilon(1e-12));
  Eigen::VectorXd degenerate(2);
  degenerate << 1.0, 0.0;
  CHECK(pooled_bic(degenerate, 100, 4) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("basis-dimension scan recovers the linear surface") {
  int hits = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const SimSpec spec = linear_truth_spec(7000 + static_cast<std::uint64_t>(trial), 700);
    const SignalPool pool = simulate_pool(spec);
    const SelectionReport report = select_basis_dim(pool, 2, 6);
    REQUIRE(report.chosen.has_value());
    if (report.chosen->second == 3) ++hits;
  }
  CHECK(hits >= 17);
}

TEST_CASE("basis-dimension scan trivial and nesting properties") {
  const SimSpec spec = linear_truth_spec(111, 600);
  const SignalPool pool = simulate_pool(spec);

  const SelectionReport trivial = select_basis_dim(pool, 2, 1);
  REQUIRE(trivial.chosen.has_value());
  CHECK(trivial.chosen->second == 1);

  const SelectionReport scan = select_basis_dim(pool, 2, 6);
  REQUIRE(scan.trials.size() == 6);
  for (std::size_t i = 1; i < scan.trials.size(); ++i)
    CHECK(scan.trials[i].rss_sss <=
          scan.trials[i - 1].rss_sss * (1.0 + 1e-10) + 1e-14);
}

TEST_CASE("order scan recovers the true order and nests") {
  int hits = 0;
  const int trials = 20;
  for (int trial = 0; trial < trials; ++trial) {
    const SimSpec spec = linear_truth_spec(8800 + static_cast<std::uint64_t>(trial), 700);
    const SignalPool pool = simulate_pool(spec);
    const SelectionReport report =
        select_order_global(pool, spec.model.basis, {1, 2, 3, 4, 5, 6});
    REQUIRE(report.chosen.has_value());
    if (report.chosen->first == 2) ++hits;
  }
  CHECK(hits >= 17);

  const SimSpec spec = linear_truth_spec(42, 600);
  const SignalPool pool = simulate_pool(spec);
  const SelectionReport scan =
      select_order_global(pool, spec.model.basis, {1, 2, 3, 4, 5, 6});
  for (std::size_t i = 1; i < scan.trials.size(); ++i)
    CHECK(scan.trials[i].rss_sss <=
          scan.trials[i - 1].rss_sss * (1.0 + 1e-10) + 1e-14);

  const SelectionReport singleton = select_order_global(pool, spec.model.basis, {3});
  REQUIRE(singleton.chosen.has_value());
  CHECK(singleton.chosen->first == 3);
}

TEST_CASE("selection reports are deterministic") {
  const SimSpec spec = linear_truth_spec(99, 500);
  const SignalPool pool = simulate_pool(spec);
  const SelectionReport a = select_basis_dim(pool, 2, 4);
  const SelectionReport b = select_basis_dim(pool, 2, 4);
  REQUIRE(a.trials.size() == b.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].bic == b.trials[i].bic);
    CHECK(a.trials[i].rss_sss == b.trials[i].rss_sss);
    CHECK(a.trials[i].whiteness_pass_fraction == b.trials[i].whiteness_pass_fraction);
  }
  CHECK(a.chosen == b.chosen);
}

TEST_CASE("chosen trial never violates the gates") {
  const SimSpec spec = linear_truth_spec(1234, 600);
  const SignalPool pool = simulate_pool(spec);
  GateOptions gates;
  gates.whiteness_pass_fraction = 0.8;
  const SelectionReport report = select_basis_dim(pool, 2, 5, gates);
  REQUIRE(report.chosen.has_value());
  for (const auto& trial : report.trials)
    if (trial.order == report.chosen->first && trial.p == report.chosen->second)
      CHECK(trial.passed_gates);
}

TEST_CASE("impossible gates leave chosen unset with a diagnostic") {
  const SimSpec spec = linear_truth_spec(77, 400);
  const SignalPool pool = simulate_pool(spec);
  GateOptions gates;
  gates.whiteness_pass_fraction = 1.01;  // unreachable
  const SelectionReport report = select_basis_dim(pool, 2, 3, gates);
  CHECK_FALSE(report.chosen.has_value());
  CHECK_FALSE(report.diagnostic.empty());
}

TEST_CASE("validate passes well-specified fits and fails under-ordered ones") {
  const SimSpec spec = linear_truth_spec(4242, 3000);
  const SignalPool pool = simulate_pool(spec);

  VfpFitOptions options;
  options.method = FitMethod::wls1;
  const VfpArModel good = fit_vfp(pool, 2, spec.model.basis, options);
  const ValidationReport good_report = validate(good, pool);
  CHECK(good_report.pass_fraction >= 0.9);

  const VfpArModel bad = fit_vfp(pool, 1, spec.model.basis, options);
  const ValidationReport bad_report = validate(bad, pool);
  CHECK(bad_report.pass_fraction <= 0.5);

  // Advisory normality screen: Gaussian innovations stay within bounds.
  int normal_count = 0;
  for (const auto& screen : good_report.normality)
    if (screen.within_bounds) ++normal_count;
  CHECK(normal_count >= 8);
}

TEST_CASE("validate excludes zero-variance states with a warning") {
  VfpArModel model;
  model.order = 1;
  model.fs = 100.0;
  model.basis = complete_basis(1, Ranges{{0.0, 2.0}, {0.0, 2.0}});
  model.theta = Eigen::MatrixXd::Zero(1, 1);
  model.training_states = {{0.0, 0.0}, {2.0, 0.0}};
  model.sigma2_by_state = Eigen::VectorXd::Constant(2, 1.0);
  model.gamma_e = model.sigma2_by_state.asDiagonal();

  std::vector<SignalRecord> records;
  records.push_back({{0.0, 0.0}, std::vector<double>(600, 0.0), 100.0});
  records.push_back({{2.0, 0.0}, test_helpers::simulate_ar({}, 1.0, 600, 5), 100.0});
  const SignalPool pool = make_pool(records);

  const ValidationReport report = validate(model, pool);
  REQUIRE(report.excluded.size() == 2);
  CHECK(report.excluded[0]);
  CHECK_FALSE(report.excluded[1]);
  CHECK(report.warnings.size() == 1);
  CHECK(report.pass_fraction == 1.0);  // the one testable state is white
}

TEST_SUITE_END();

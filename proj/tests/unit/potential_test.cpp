#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "cim/potential.hpp"
#include "oracles.hpp"

namespace {

cim::IsingProblem single_spin() { return cim::IsingProblem(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1)); }

cim::NetworkState state_of(std::initializer_list<double> mu, std::initializer_list<double> nu) {
  cim::NetworkState s = cim::NetworkState::vacuum(mu.size());
  std::size_t j = 0;
  for (double v : mu) s.mu(static_cast<Eigen::Index>(j++)) = v;
  j = 0;
  for (double v : nu) s.nu(static_cast<Eigen::Index>(j++)) = v;
  return s;
}

// Central differences of g^2 Phi with Richardson extrapolation.
cim::FieldPair fd_gradient(const cim::NetworkState& s, const cim::IsingProblem& pr, const cim::ModelParams& params) {
  auto phi = [&](const cim::NetworkState& x) { return cim::eval_potential(x, pr, params).g2_phi; };
  auto central = [&](Eigen::VectorXd cim::NetworkState::*field, Eigen::Index j, double h) {
    cim::NetworkState a = s, b = s;
    (a.*field)(j) += h;
    (b.*field)(j) -= h;
    return (phi(a) - phi(b)) / (2 * h);
  };
  cim::FieldPair out{Eigen::VectorXd(s.mu.size()), Eigen::VectorXd(s.mu.size())};
  for (Eigen::Index j = 0; j < s.mu.size(); ++j) {
    const double h = 1e-4;
    out.mu(j) = (4 * central(&cim::NetworkState::mu, j, h / 2) - central(&cim::NetworkState::mu, j, h)) / 3;
    out.nu(j) = (4 * central(&cim::NetworkState::nu, j, h / 2) - central(&cim::NetworkState::nu, j, h)) / 3;
  }
  return out;
}

double relative_gap(const cim::FieldPair& a, const cim::FieldPair& b, double scale) {
  const double num = std::max((a.mu - b.mu).cwiseAbs().maxCoeff(), (a.nu - b.nu).cwiseAbs().maxCoeff());
  const double den = std::max({a.mu.cwiseAbs().maxCoeff(), a.nu.cwiseAbs().maxCoeff(), scale});
  return num / den;
}

TEST(EvalPotential, VacuumIsZero) {
  const auto v = cim::eval_potential(cim::NetworkState::vacuum(5), cim::make_ferro_random_field(5, 1.0, 0.3, 2),
                                     {1.4, 0.3, 0.1});
  EXPECT_EQ(v.g2_phi, 0.0);
}

TEST(EvalPotential, SingleOscillatorDoubleWell) {
  const double g = 0.1, p = 1.3;
  for (double x : {-0.8, -0.2, 0.35, 0.9}) {
    const auto v = cim::eval_potential(state_of({x}, {x}), single_spin(), {p, 0.5, g});
    EXPECT_NEAR(v.g2_phi, -2 * (1 - g * g) * std::log(1 - x * x) - 2 * p * x * x, 1e-14);
  }
}

TEST(EvalPotential, TwoSpinExampleMatchesOracle) {
  const auto pr = cim::make_ferro(2, 1.0);
  const auto s = state_of({0.5, 0.5}, {0.5, 0.5});
  const auto v = cim::eval_potential(s, pr, {1.0, 0.2, 0.1});
  EXPECT_DOUBLE_EQ(v.q_mu, 0.25);
  EXPECT_NEAR(v.interaction, -0.2 / 3.0, 1e-15);
  const std::array<double, 2> mu{0.5, 0.5}, h{0, 0};
  const std::array<std::array<double, 2>, 2> J{{{0, 0.25}, {0.25, 0}}};
  EXPECT_NEAR(v.g2_phi, oracle::potential_terms(mu, mu, J, h, 1.0, 0.2, 0.1), 1e-14);
  EXPECT_EQ(v.g2_phi, v.g2_phi0 + v.interaction);
}

TEST(EvalPotential, RandomStatesMatchOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial;
    const auto pr = cim::make_ferro_random_field(static_cast<std::size_t>(n), 1.3, 0.2, static_cast<std::uint64_t>(trial));
    cim::NetworkState s = cim::NetworkState::vacuum(static_cast<std::size_t>(n));
    std::vector<double> mu(static_cast<std::size_t>(n)), nu(mu.size()), h(mu.size());
    std::vector<std::vector<double>> J(mu.size(), std::vector<double>(mu.size()));
    for (int j = 0; j < n; ++j) {
      s.mu(j) = mu[static_cast<std::size_t>(j)] = u(rng);
      s.nu(j) = nu[static_cast<std::size_t>(j)] = u(rng);
      h[static_cast<std::size_t>(j)] = pr.fields()(j);
      for (int l = 0; l < n; ++l) J[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] = pr.couplings()(j, l);
    }
    const cim::ModelParams params{1.1, 0.35, 0.2};
    const double expected = oracle::potential_terms(mu, nu, J, h, params.p, params.xi, params.g);
    EXPECT_NEAR(cim::eval_potential(s, pr, params).g2_phi, expected, 1e-13 * (1 + std::abs(expected)));
  }
}

TEST(EvalPotential, DomainErrorAtUnitMeanSquare) {
  EXPECT_THROW(cim::eval_potential(state_of({1.0, 1.0}, {0, 0}), cim::make_ferro(2, 1), {1, 0.1, 0.1}),
               cim::DomainError);
  EXPECT_THROW(cim::eval_potential(state_of({0.1, 0.1}, {1.2, 0.9}), cim::make_ferro(2, 1), {1, 0.1, 0.1}),
               cim::DomainError);
  EXPECT_NO_THROW(cim::eval_potential(state_of({1.0, 0.0}, {0, 0}), cim::make_ferro(2, 1), {1, 0.1, 0.1}));
}

TEST(EvalPotential, GlobalFlipInvarianceWithoutField) {
  const auto pr = cim::make_ferro(4, 1.0);
  const auto s = state_of({0.1, -0.4, 0.7, 0.2}, {0.3, 0.5, -0.6, 0.0});
  auto t = s;
  t.mu = -t.mu;
  t.nu = -t.nu;
  const cim::ModelParams params{1.2, 0.4, 0.1};
  EXPECT_EQ(cim::eval_potential(s, pr, params).g2_phi, cim::eval_potential(t, pr, params).g2_phi);
}

TEST(EvalPotential, ReportsSpread) {
  const auto v = cim::eval_potential(state_of({0.2, -0.5}, {0.3, 0.3}), cim::make_ferro(2, 1), {1, 0.1, 0.1});
  EXPECT_DOUBLE_EQ(v.spread_mu, 0.25 - 0.04);
  EXPECT_EQ(v.spread_nu, 0.0);
}

TEST(DbGradient, VacuumWithoutFieldIsZero) {
  const auto d = cim::db_gradient(cim::NetworkState::vacuum(3), cim::make_ferro(3, 1), {1.3, 0.2, 0.1});
  EXPECT_EQ(d.mu.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.nu.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DbGradient, SingleOscillator) {
  const double g = 0.05, p = 2.0;
  auto grad = [&](double x) { return cim::db_gradient(state_of({x}, {x}), single_spin(), {p, 0.0, g}).mu(0); };
  for (double x : {-0.5, 0.2, 0.6}) {
    EXPECT_NEAR(grad(x), 2 * ((1 - g * g) * x - p * x * (1 - x * x)) / (g * g * (1 - x * x)), 1e-10);
  }
  EXPECT_EQ(grad(0.0), 0.0);
  const double root = std::sqrt(1 - (1 - g * g) / p);
  EXPECT_NEAR(grad(root), 0.0, 1e-10);
  EXPECT_NEAR(root, std::sqrt(1 - 1 / p), g * g);
}

TEST(DbGradient, SingularAtUnitAmplitude) {
  EXPECT_THROW(cim::db_gradient(state_of({1.0, 0.0}, {0, 0}), cim::make_ferro(2, 1), {1, 0.1, 0.1}),
               cim::SingularityError);
  EXPECT_THROW(cim::db_gradient(state_of({0.0, 0.0}, {0, -1.0}), cim::make_ferro(2, 1), {1, 0.1, 0.1}),
               cim::SingularityError);
  EXPECT_THROW(cim::db_gradient(state_of({0.0, 0.0}, {0, 0}), cim::make_ferro(2, 1), {1, 0.1, 0.0}),
               cim::InvalidInput);
}

TEST(DbGradient, MatchesFiniteDifferencesWithoutInjection) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> mag(0.05, 0.9);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 6);
    const auto pr = cim::make_ferro_random_field(n, 1.0, 0.3, static_cast<std::uint64_t>(trial));
    const double a = mag(rng), b = mag(rng);
    cim::NetworkState s = cim::NetworkState::vacuum(n);
    for (std::size_t j = 0; j < n; ++j) {
      s.mu(static_cast<Eigen::Index>(j)) = coin(rng) ? a : -a;
      s.nu(static_cast<Eigen::Index>(j)) = coin(rng) ? b : -b;
    }
    const cim::ModelParams params{0.5 + 0.1 * trial, 0.0, 0.1};
    const auto analytic = cim::db_gradient(s, pr, params);
    const double g2 = params.g * params.g;
    const cim::FieldPair scaled{g2 * analytic.mu, g2 * analytic.nu};
    EXPECT_LT(relative_gap(scaled, fd_gradient(s, pr, params), 1e-3), 1e-6) << trial;
  }
}

TEST(DbGradient, MatchesFiniteDifferencesWhenInteractionVanishes) {
  // With n = 4 (or 9) and three (six) sites up, (sum x)^2 = sum x^2, so the
  // ferromagnetic interaction sum is zero on the uniform-magnitude state.
  for (const auto& [n, up] : std::vector<std::pair<int, int>>{{4, 3}, {9, 6}}) {
    const auto pr = cim::make_ferro(static_cast<std::size_t>(n), 1.0);
    for (double a : {0.2, 0.55, 0.8}) {
      cim::NetworkState s = cim::NetworkState::vacuum(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        s.mu(j) = j < up ? a : -a;
        s.nu(j) = (j + 1) % n < up ? 0.6 * a : -0.6 * a;
      }
      const cim::ModelParams params{1.1, 0.4, 0.1};
      const auto analytic = cim::db_gradient(s, pr, params);
      const double g2 = params.g * params.g;
      const cim::FieldPair scaled{g2 * analytic.mu, g2 * analytic.nu};
      EXPECT_LT(relative_gap(scaled, fd_gradient(s, pr, params), 1e-3), 1e-6) << n << " " << a;
    }
  }
}

TEST(DbViolation, NoInjectionNoGap) {
  const auto v = cim::db_violation(state_of({0.1, 0.7, -0.3}, {0, 0, 0}), cim::make_ferro(3, 1), {1, 0.0, 0.1});
  EXPECT_EQ(v.pairs.size(), 3u);
  for (const auto& p : v.pairs) EXPECT_EQ(p.gap, 0.0);
  EXPECT_EQ(v.max_abs_gap, 0.0);
}

TEST(DbViolation, EqualSquaresNoGap) {
  const auto v = cim::db_violation(state_of({0.4, -0.4}, {0, 0}), cim::make_ferro(2, 1), {1, 0.3, 0.1});
  EXPECT_EQ(v.pairs.at(0).gap, 0.0);
}

TEST(DbViolation, TwoSpinExample) {
  const auto v = cim::db_violation(state_of({0.3, 0.6}, {0, 0}), cim::make_ferro(2, 1), {1, 0.2, 0.1});
  ASSERT_EQ(v.pairs.size(), 1u);
  double lhs = 0, rhs = 0;
  oracle::db_pair(0.25, 0.3, 0.6, 0.2, 0.1, lhs, rhs);
  EXPECT_NEAR(v.pairs[0].lhs, lhs, 1e-12);
  EXPECT_NEAR(v.pairs[0].rhs, rhs, 1e-12);
  EXPECT_NEAR(v.pairs[0].lhs, -10.98901, 1e-5);
  EXPECT_NEAR(v.pairs[0].rhs, -15.62500, 1e-5);
  EXPECT_NEAR(v.pairs[0].gap, 4.63599, 1e-5);
  EXPECT_EQ(v.max_abs_gap, std::abs(v.pairs[0].gap));
}

TEST(DbViolation, SkipsUncoupledPairs) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(4, 4);
  J(0, 1) = J(1, 0) = 0.3;
  J(2, 3) = J(3, 2) = 0.3;
  const cim::IsingProblem pr(J, Eigen::VectorXd::Zero(4));
  const auto v = cim::db_violation(state_of({0.1, 0.2, 0.3, 0.4}, {0, 0, 0, 0}), pr, {1, 0.2, 0.1});
  EXPECT_EQ(v.pairs.size(), 2u);
}

TEST(DbViolation, ExactlyLinearInInjectionAndCoupling) {
  const auto s = state_of({0.1, 0.5, -0.8, 0.3}, {0, 0, 0, 0});
  const cim::ModelParams base{1, 0.2, 0.1};
  const double g0 = cim::db_violation(s, cim::make_ferro(4, 1.0), base).max_abs_gap;
  for (double scale : {0.5, 2.0, 3.7, 11.0}) {
    cim::ModelParams scaled = base;
    scaled.xi *= scale;
    const double gx = cim::db_violation(s, cim::make_ferro(4, 1.0), scaled).max_abs_gap;
    EXPECT_NEAR(gx / g0, scale, 4e-15 * scale);
    const double gj = cim::db_violation(s, cim::make_ferro(4, scale), base).max_abs_gap;
    EXPECT_NEAR(gj / g0, scale, 4e-15 * scale);
  }
}

TEST(DbViolation, VanishesLinearlyWithSpread) {
  const cim::ModelParams params{1, 0.3, 0.1};
  std::vector<double> slopes;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const auto v = cim::db_violation(state_of({0.4, 0.4 + eps}, {0, 0}), cim::make_ferro(2, 1), params);
    slopes.push_back(v.max_abs_gap / eps);
  }
  EXPECT_NEAR(slopes[1] / slopes[0], 1.0, 1e-2);
  EXPECT_NEAR(slopes[2] / slopes[1], 1.0, 1e-3);
}

TEST(DbViolation, SingularAtUnitAmplitude) {
  EXPECT_THROW(cim::db_violation(state_of({1.0, 0.0}, {0, 0}), cim::make_ferro(2, 1), {1, 0.1, 0.1}),
               cim::SingularityError);
}

}  // namespace

#include "cim/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cim {
namespace {

void check_dimensions(const NetworkState& state, const IsingProblem& problem) {
  if (state.mu.size() != state.nu.size() || state.size() != problem.size()) {
    throw InvalidInput("state and problem dimensions differ");
  }
}

void check_off_boundary(const Eigen::VectorXd& x, const char* name) {
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (std::abs(x(j)) == 1.0) {
      throw SingularityError(std::string("|") + name + "_" + std::to_string(j) + "| = 1");
    }
  }
}

double spread(const Eigen::VectorXd& x) {
  const Eigen::ArrayXd sq = x.array().square();
  return sq.maxCoeff() - sq.minCoeff();
}

// sum_{j<l} J_jl x_j x_l + sum_j h_j x_j
double interaction_sum(const Eigen::VectorXd& x, const IsingProblem& problem) {
  return 0.5 * x.dot(problem.couplings() * x) + problem.fields().dot(x);
}

}  // namespace

PotentialValue eval_potential(const NetworkState& state, const IsingProblem& problem,
                              const ModelParams& params) {
  check_dimensions(state, problem);
  const double n = static_cast<double>(state.size());
  PotentialValue v;
  v.q_mu = state.mu.squaredNorm() / n;
  v.q_nu = state.nu.squaredNorm() / n;
  if (!(v.q_mu < 1.0) || !(v.q_nu < 1.0)) {
    throw DomainError("potential undefined for q_mu = " + std::to_string(v.q_mu) +
                      ", q_nu = " + std::to_string(v.q_nu) + " (need both < 1)");
  }
  v.spread_mu = spread(state.mu);
  v.spread_nu = spread(state.nu);
  const double g2 = params.g * params.g;
  v.g2_phi0 = -n * (1.0 - g2) * (std::log1p(-v.q_mu) + std::log1p(-v.q_nu)) -
              2.0 * params.p * state.mu.dot(state.nu);
  v.interaction = -(2.0 * params.xi / (1.0 - v.q_mu)) * interaction_sum(state.mu, problem) -
                  (2.0 * params.xi / (1.0 - v.q_nu)) * interaction_sum(state.nu, problem);
  v.g2_phi = v.g2_phi0 + v.interaction;
  return v;
}

FieldPair db_gradient(const NetworkState& state, const IsingProblem& problem, const ModelParams& params) {
  check_dimensions(state, problem);
  if (!(params.g > 0.0)) throw InvalidInput("db_gradient requires g > 0");
  check_off_boundary(state.mu, "mu");
  check_off_boundary(state.nu, "nu");
  const double g2 = params.g * params.g;
  const Eigen::MatrixXd& J = problem.couplings();
  const Eigen::VectorXd& h = problem.fields();
  auto component = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) -> Eigen::VectorXd {
    const Eigen::ArrayXd one_minus = 1.0 - x.array().square();
    const Eigen::ArrayXd v = (-(J * x) - h).array();
    return (2.0 / (g2 * one_minus)) *
           ((1.0 - g2) * x.array() - params.p * y.array() * one_minus + params.xi * v);
  };
  return {component(state.mu, state.nu), component(state.nu, state.mu)};
}

DbViolation db_violation(const NetworkState& state, const IsingProblem& problem, const ModelParams& params) {
  check_dimensions(state, problem);
  if (!(params.g > 0.0)) throw InvalidInput("db_violation requires g > 0");
  check_off_boundary(state.mu, "mu");
  const double g2 = params.g * params.g;
  const Eigen::MatrixXd& J = problem.couplings();
  DbViolation out;
  const auto n = static_cast<Eigen::Index>(state.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = j + 1; l < n; ++l) {
      const double c = J(j, l);
      if (c == 0.0) continue;
      DbPair pair;
      pair.j = static_cast<std::size_t>(j);
      pair.l = static_cast<std::size_t>(l);
      pair.lhs = -2.0 * params.xi * c / (g2 * (1.0 - state.mu(j) * state.mu(j)));
      pair.rhs = -2.0 * params.xi * c / (g2 * (1.0 - state.mu(l) * state.mu(l)));
      pair.gap = pair.lhs - pair.rhs;
      out.max_abs_gap = std::max(out.max_abs_gap, std::abs(pair.gap));
      out.pairs.push_back(pair);
    }
  }
  return out;
}

}  // namespace cim

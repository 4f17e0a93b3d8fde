#pragma once

#include <cstddef>
#include <vector>

#include "cim/problem.hpp"
#include "cim/sde.hpp"

namespace cim {

/// Truncated steady-state potential, scaled by g^2.
struct PotentialValue {
  double g2_phi = 0.0;
  double g2_phi0 = 0.0;      // independent-oscillator part
  double interaction = 0.0;  // coupling and field part
  double q_mu = 0.0, q_nu = 0.0;
  /// max_j mu_j^2 - min_j mu_j^2 (likewise nu). Zero on the subspace where
  /// the truncation is exact; how small is small enough is left to callers.
  double spread_mu = 0.0, spread_nu = 0.0;
};

struct DbPair {
  std::size_t j = 0, l = 0;
  double lhs = 0.0, rhs = 0.0, gap = 0.0;
};

struct DbViolation {
  std::vector<DbPair> pairs;
  double max_abs_gap = 0.0;
};

/// g^2 Phi = -N(1-g^2)[ln(1-q_mu) + ln(1-q_nu)] - 2p sum mu_j nu_j
///           - 2 xi/(1-q_mu) [sum_{j<l} J_jl mu_j mu_l + sum_j h_j mu_j] - (same for nu).
/// Throws DomainError when q_mu >= 1 or q_nu >= 1.
PotentialValue eval_potential(const NetworkState& state, const IsingProblem& problem,
                              const ModelParams& params);

/// Gradient the potential would need for detailed balance to hold.
/// Requires g > 0; throws SingularityError when any |mu_j| or |nu_j| is 1.
FieldPair db_gradient(const NetworkState& state, const IsingProblem& problem, const ModelParams& params);

/// Mixed second derivatives d/dmu_l (dPhi/dmu_j) and d/dmu_j (dPhi/dmu_l)
/// implied by db_gradient, for every pair j < l with J_jl != 0.
DbViolation db_violation(const NetworkState& state, const IsingProblem& problem, const ModelParams& params);

}  // namespace cim

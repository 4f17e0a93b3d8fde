#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "cim/problem.hpp"

namespace cim {

/// Normalized DOPO parameters: pump rate p, injection strength xi and
/// quantum-noise strength g. All are dimensionless.
struct ModelParams {
  double p = 0.0;
  double xi = 0.0;
  double g = 0.0;

  void validate() const;
};

enum class InitialCondition { Vacuum, UniformRandom };

struct IntegrationConfig {
  double dt = 0.01;  // step in normalized time tau
  long long steps = 10000;
  long long burn_in = 2000;  // steps discarded before measuring
  long long trajectories = 1;
  std::uint64_t seed = 0;
  InitialCondition init = InitialCondition::Vacuum;
  double init_amplitude = 0.0;  // half-width a of the uniform start in [-a, a]

  /// Euler-Maruyama with the cubic drift is only trusted for dt * p < 0.1.
  static constexpr double kMaxDtTimesPump = 0.1;

  void validate(const ModelParams& params) const;
};

/// In-phase amplitudes (mu_j, nu_j) of the N signal modes at time tau.
struct NetworkState {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
  double tau = 0.0;

  static NetworkState vacuum(std::size_t n);
  std::size_t size() const noexcept { return static_cast<std::size_t>(mu.size()); }
};

struct FieldPair {
  Eigen::VectorXd mu;
  Eigen::VectorXd nu;
};

/// Deterministic part of the signal-field SDEs:
///   D_mu_j = -mu_j + p nu_j (1 - mu_j^2) + xi (sum_{l!=j} J_jl mu_l + h_j)
/// and the same with mu and nu exchanged.
FieldPair drift(const NetworkState& state, const IsingProblem& problem, const ModelParams& params);

/// Per-component diffusion amplitudes g sqrt(max(0, 1 - x^2)).
FieldPair noise_amplitude(const NetworkState& state, const ModelParams& params);

/// Coefficients A of the first-order Fokker-Planck terms d/dx_j [A_j P],
///   A_mu_j = mu_j - p nu_j (1 - mu_j^2) + xi V_mu_j,  V_mu_j = -sum_l J_jl mu_l - h_j.
/// Evaluated with the dense coupling matrix; drift() must equal -A.
FieldPair fokker_planck_drift(const NetworkState& state, const IsingProblem& problem,
                              const ModelParams& params);

/// Source of independent standard normal draws for one trajectory.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_;
};

/// One Euler-Maruyama step (Ito). Throws NumericalError carrying `step_index`
/// when the new state is not finite.
NetworkState step(const NetworkState& state, const IsingProblem& problem, const ModelParams& params,
                  double dt, GaussianStream& noise, long long step_index = 0);

/// sigma_j = sign(mu_j + nu_j) with sign(0) = +1.
std::vector<int> spin_readout(const NetworkState& state);

struct EnsembleObservables {
  double m_mu = 0.0, m_nu = 0.0;
  double q_mu = 0.0, q_nu = 0.0;
  double m_sigma = 0.0;
  double m = 0.0, q = 0.0;  // (x_mu + x_nu) / 2
  double se_m_mu = 0.0, se_m_nu = 0.0, se_q_mu = 0.0, se_q_nu = 0.0, se_m_sigma = 0.0;
  double se_m = 0.0, se_q = 0.0;
  long long samples = 0;
  long long trajectories = 0;
  int batches = 0;
};

/// Called with (trajectory index, step index, state) after each step.
using StateObserver = std::function<void(long long, long long, const NetworkState&)>;

/// Integrates `config.trajectories` independent runs from the configured
/// start, averages m, q and m_sigma over post-burn-in steps and all runs, and
/// estimates standard errors by batch means over the trajectory-major sample
/// stream. Results depend only on the inputs, never on `threads`.
EnsembleObservables run_ensemble(const IsingProblem& problem, const ModelParams& params,
                                 const IntegrationConfig& config, unsigned threads = 1,
                                 const StateObserver& observer = {});

/// Runs the single trajectory `index` of an ensemble and reports every
/// `stride`-th state (including the start) to `observer`.
NetworkState simulate_trajectory(const IsingProblem& problem, const ModelParams& params,
                                 const IntegrationConfig& config, long long index, long long stride,
                                 const StateObserver& observer);

inline constexpr int kEnsembleBatches = 30;

}  // namespace cim

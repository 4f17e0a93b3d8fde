#include "cim/sde.hpp"

#include <array>
#include <cmath>
#include <string>

#include "cim/parallel.hpp"
#include "cim/rng.hpp"
#include "cim/stats.hpp"

namespace cim {

void ModelParams::validate() const {
  if (!std::isfinite(p) || p < 0.0) throw InvalidInput("pump rate p must be >= 0");
  if (!std::isfinite(xi) || xi < 0.0) throw InvalidInput("injection strength xi must be >= 0");
  if (!std::isfinite(g) || g < 0.0) throw InvalidInput("noise strength g must be >= 0");
}

void IntegrationConfig::validate(const ModelParams& params) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
  if (dt * params.p >= kMaxDtTimesPump) {
    throw InvalidInput("dt * p = " + std::to_string(dt * params.p) + " violates dt * p < 0.1");
  }
  if (steps <= 0) throw InvalidInput("steps must be positive");
  if (burn_in < 0 || burn_in >= steps) throw InvalidInput("burn_in must satisfy 0 <= burn_in < steps");
  if (trajectories <= 0) throw InvalidInput("trajectories must be positive");
  if (init == InitialCondition::UniformRandom && !(init_amplitude >= 0.0 && init_amplitude <= 1.0)) {
    throw InvalidInput("init_amplitude must lie in [0, 1]");
  }
}

NetworkState NetworkState::vacuum(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  return NetworkState{Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0.0};
}

namespace {

void check_dimensions(const NetworkState& state, const IsingProblem& problem) {
  if (state.mu.size() != state.nu.size() || state.size() != problem.size()) {
    throw InvalidInput("state has " + std::to_string(state.mu.size()) + "/" +
                       std::to_string(state.nu.size()) + " amplitudes but the problem has " +
                       std::to_string(problem.size()) + " spins");
  }
}

/// Preallocated buffers for the inner loop.
class Stepper {
 public:
  Stepper(const IsingProblem& problem, const ModelParams& params, double dt)
      : problem_(problem), params_(params), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
    const auto n = static_cast<Eigen::Index>(problem.size());
    local_mu_.resize(n);
    local_nu_.resize(n);
    drift_mu_.resize(n);
    drift_nu_.resize(n);
  }

  void drift(const NetworkState& s) {
    const auto& h = problem_.fields();
    problem_.coupling_field(s.mu, local_mu_);
    problem_.coupling_field(s.nu, local_nu_);
    const double p = params_.p;
    const double xi = params_.xi;
    drift_mu_ = -s.mu.array() + p * s.nu.array() * (1.0 - s.mu.array().square()) +
                xi * (local_mu_.array() + h.array());
    drift_nu_ = -s.nu.array() + p * s.mu.array() * (1.0 - s.nu.array().square()) +
                xi * (local_nu_.array() + h.array());
  }

  void advance(NetworkState& s, GaussianStream& noise, long long step_index) {
    drift(s);
    const double g = params_.g;
    const Eigen::Index n = s.mu.size();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double amp = g * std::sqrt(std::max(0.0, 1.0 - s.mu(j) * s.mu(j)));
      s.mu(j) += drift_mu_(j) * dt_ + amp * sqrt_dt_ * noise();
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double amp = g * std::sqrt(std::max(0.0, 1.0 - s.nu(j) * s.nu(j)));
      s.nu(j) += drift_nu_(j) * dt_ + amp * sqrt_dt_ * noise();
    }
    s.tau += dt_;
    if (!s.mu.allFinite() || !s.nu.allFinite()) {
      throw NumericalError("state became non-finite at step " + std::to_string(step_index), step_index);
    }
  }

  const Eigen::VectorXd& drift_mu() const { return drift_mu_; }
  const Eigen::VectorXd& drift_nu() const { return drift_nu_; }

 private:
  const IsingProblem& problem_;
  ModelParams params_;
  double dt_;
  double sqrt_dt_;
  Eigen::VectorXd local_mu_, local_nu_, drift_mu_, drift_nu_;
};

NetworkState initial_state(const IntegrationConfig& config, std::size_t n, std::uint64_t key) {
  NetworkState s = NetworkState::vacuum(n);
  if (config.init == InitialCondition::UniformRandom) {
    const double a = config.init_amplitude;
    auto uniform = [&](std::uint64_t counter) {
      const double u = static_cast<double>(counter_draw(key, counter) >> 11) * 0x1.0p-53;
      return a * (2.0 * u - 1.0);
    };
    for (std::size_t j = 0; j < n; ++j) {
      s.mu(static_cast<Eigen::Index>(j)) = uniform(2 * j);
      s.nu(static_cast<Eigen::Index>(j)) = uniform(2 * j + 1);
    }
  }
  return s;
}

// Stream keys for trajectory t: noise and initial condition use distinct keys.
std::uint64_t noise_seed(std::uint64_t seed, long long t) { return derive_seed(seed, 2 * static_cast<std::uint64_t>(t)); }
std::uint64_t init_key(std::uint64_t seed, long long t) { return derive_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1); }

enum Observable { kMuMean = 0, kNuMean, kMuSquare, kNuSquare, kSpin, kObservableCount };

using BatchSums = std::vector<std::array<CompensatedSum, kObservableCount>>;

struct TrajectoryAccumulator {
  BatchSums sums;
  std::vector<long long> counts;
};

}  // namespace

FieldPair drift(const NetworkState& state, const IsingProblem& problem, const ModelParams& params) {
  check_dimensions(state, problem);
  Stepper stepper(problem, params, 1.0);
  stepper.drift(state);
  return {stepper.drift_mu(), stepper.drift_nu()};
}

FieldPair noise_amplitude(const NetworkState& state, const ModelParams& params) {
  auto amp = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return params.g * (1.0 - x.array().square()).max(0.0).sqrt();
  };
  return {amp(state.mu), amp(state.nu)};
}

FieldPair fokker_planck_drift(const NetworkState& state, const IsingProblem& problem,
                              const ModelParams& params) {
  check_dimensions(state, problem);
  const Eigen::MatrixXd& J = problem.couplings();
  const Eigen::VectorXd& h = problem.fields();
  const Eigen::VectorXd v_mu = -(J * state.mu) - h;
  const Eigen::VectorXd v_nu = -(J * state.nu) - h;
  FieldPair out;
  out.mu = state.mu.array() - params.p * state.nu.array() * (1.0 - state.mu.array().square()) +
           params.xi * v_mu.array();
  out.nu = state.nu.array() - params.p * state.mu.array() * (1.0 - state.nu.array().square()) +
           params.xi * v_nu.array();
  return out;
}

NetworkState step(const NetworkState& state, const IsingProblem& problem, const ModelParams& params,
                  double dt, GaussianStream& noise, long long step_index) {
  check_dimensions(state, problem);
  if (!(dt > 0.0)) throw InvalidInput("dt must be positive");
  if (dt * params.p >= IntegrationConfig::kMaxDtTimesPump) throw InvalidInput("dt * p must be < 0.1");
  NetworkState next = state;
  Stepper stepper(problem, params, dt);
  stepper.advance(next, noise, step_index);
  return next;
}

std::vector<int> spin_readout(const NetworkState& state) {
  std::vector<int> spins(state.size());
  for (std::size_t j = 0; j < spins.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    spins[j] = (state.mu(i) + state.nu(i) >= 0.0) ? 1 : -1;
  }
  return spins;
}

NetworkState simulate_trajectory(const IsingProblem& problem, const ModelParams& params,
                                 const IntegrationConfig& config, long long index, long long stride,
                                 const StateObserver& observer) {
  params.validate();
  config.validate(params);
  if (stride <= 0) throw InvalidInput("stride must be positive");
  NetworkState state = initial_state(config, problem.size(), init_key(config.seed, index));
  GaussianStream noise(noise_seed(config.seed, index));
  Stepper stepper(problem, params, config.dt);
  if (observer) observer(index, 0, state);
  for (long long k = 1; k <= config.steps; ++k) {
    try {
      stepper.advance(state, noise, k);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " in trajectory " + std::to_string(index), k, index);
    }
    if (observer && k % stride == 0) observer(index, k, state);
  }
  return state;
}

EnsembleObservables run_ensemble(const IsingProblem& problem, const ModelParams& params,
                                 const IntegrationConfig& config, unsigned threads,
                                 const StateObserver& observer) {
  params.validate();
  config.validate(params);

  const long long per_traj = config.steps - config.burn_in;
  const long long total = per_traj * config.trajectories;
  const int batches = static_cast<int>(std::min<long long>(kEnsembleBatches, total));
  const std::size_t n = problem.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<TrajectoryAccumulator> acc(static_cast<std::size_t>(config.trajectories));

  parallel_for(acc.size(), threads, [&](std::size_t t) {
    auto& a = acc[t];
    a.sums.assign(static_cast<std::size_t>(batches), {});
    a.counts.assign(static_cast<std::size_t>(batches), 0);
    const auto traj = static_cast<long long>(t);
    NetworkState state = initial_state(config, n, init_key(config.seed, traj));
    GaussianStream noise(noise_seed(config.seed, traj));
    Stepper stepper(problem, params, config.dt);
    for (long long k = 1; k <= config.steps; ++k) {
      try {
        stepper.advance(state, noise, k);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " in trajectory " + std::to_string(traj), k, traj);
      }
      if (observer) observer(traj, k, state);
      if (k <= config.burn_in) continue;

      const long long global = traj * per_traj + (k - config.burn_in - 1);
      const auto b = static_cast<std::size_t>(global * batches / total);
      double spin = 0.0;
      for (Eigen::Index j = 0; j < state.mu.size(); ++j) spin += (state.mu(j) + state.nu(j) >= 0.0) ? 1.0 : -1.0;
      auto& s = a.sums[b];
      s[kMuMean].add(state.mu.sum() * inv_n);
      s[kNuMean].add(state.nu.sum() * inv_n);
      s[kMuSquare].add(state.mu.squaredNorm() * inv_n);
      s[kNuSquare].add(state.nu.squaredNorm() * inv_n);
      s[kSpin].add(spin * inv_n);
      ++a.counts[b];
    }
  });

  // Merge in trajectory order so the result does not depend on scheduling.
  BatchSums sums(static_cast<std::size_t>(batches));
  std::vector<long long> counts(static_cast<std::size_t>(batches), 0);
  for (const auto& a : acc) {
    for (std::size_t b = 0; b < sums.size(); ++b) {
      for (int o = 0; o < kObservableCount; ++o) sums[b][static_cast<std::size_t>(o)].add(a.sums[b][static_cast<std::size_t>(o)]);
      counts[b] += a.counts[b];
    }
  }

  std::array<std::vector<double>, kObservableCount> means;
  std::vector<double> m_combined, q_combined;
  std::array<CompensatedSum, kObservableCount> grand;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    for (int o = 0; o < kObservableCount; ++o) {
      const auto oi = static_cast<std::size_t>(o);
      means[oi].push_back(sums[b][oi].value() / static_cast<double>(counts[b]));
      grand[oi].add(sums[b][oi]);
    }
    m_combined.push_back(0.5 * (means[kMuMean].back() + means[kNuMean].back()));
    q_combined.push_back(0.5 * (means[kMuSquare].back() + means[kNuSquare].back()));
  }

  EnsembleObservables out;
  const double inv_total = 1.0 / static_cast<double>(total);
  out.m_mu = grand[kMuMean].value() * inv_total;
  out.m_nu = grand[kNuMean].value() * inv_total;
  out.q_mu = grand[kMuSquare].value() * inv_total;
  out.q_nu = grand[kNuSquare].value() * inv_total;
  out.m_sigma = grand[kSpin].value() * inv_total;
  out.m = 0.5 * (out.m_mu + out.m_nu);
  out.q = 0.5 * (out.q_mu + out.q_nu);
  out.se_m_mu = batch_mean_error(means[kMuMean]).stderr_;
  out.se_m_nu = batch_mean_error(means[kNuMean]).stderr_;
  out.se_q_mu = batch_mean_error(means[kMuSquare]).stderr_;
  out.se_q_nu = batch_mean_error(means[kNuSquare]).stderr_;
  out.se_m_sigma = batch_mean_error(means[kSpin]).stderr_;
  out.se_m = batch_mean_error(m_combined).stderr_;
  out.se_q = batch_mean_error(q_combined).stderr_;
  out.samples = total;
  out.trajectories = config.trajectories;
  out.batches = batches;
  return out;
}

}  // namespace cim

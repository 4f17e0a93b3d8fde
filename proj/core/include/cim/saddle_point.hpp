#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cim/errors.hpp"

namespace cim {

/// Mean-field parameters of the fully connected ferromagnet.
struct MeanFieldParams {
  double p = 0.0;
  double xiJ = 0.0;       // product xi * J
  double g = 0.0;
  double h0_over_J = 0.0; // binary random-field amplitude relative to J
  double xi = 0.0;
  double J = 1.0;

  static MeanFieldParams from_products(double p, double xiJ, double g, double h0_over_J = 0.0);
  static MeanFieldParams from_components(double p, double xi, double J, double g, double h0 = 0.0);

  double xi_h0() const noexcept { return xiJ * h0_over_J; }
  void validate() const;
};

enum class ProblemKind { NoField, RandomField };

/// Symmetric saddle point (m, q, m_tilde, q_tilde) with derived quantities.
struct SaddlePoint {
  double m = 0.0;
  double q = 0.0;
  double m_tilde = 0.0;
  double q_tilde = 0.0;
  bool stable = false;
  double m_sigma = 0.0;
  double free_energy = 0.0;
  double residual = 0.0;  // max-norm of the four residuals
};

enum class SolveStatus { Converged, NoRealSolution, Failed };

const char* to_string(SolveStatus status) noexcept;

struct SolveOutcome {
  SolveStatus status = SolveStatus::NoRealSolution;
  std::vector<SaddlePoint> roots;  // all roots with m >= 0, stable or not, sorted by (m, q)
  std::string message;

  std::vector<SaddlePoint> stable_roots() const;
};

/// Gaussian upper tail H(x) = (2 pi)^{-1/2} int_x^inf exp(-t^2/2) dt.
double h_upper(double x);

/// G = exp(eta/g^2) - 2 sinh(eta/g^2) H(m_tilde / (g sqrt(q_tilde - p))).
double g_function(double m_tilde, double q_tilde, double eta, double p, double g);

std::array<double, 4> residuals_no_field(const SaddlePoint& x, const MeanFieldParams& params);
std::array<double, 4> residuals_random_field(const SaddlePoint& x, const MeanFieldParams& params);
std::array<double, 4> residuals(const SaddlePoint& x, const MeanFieldParams& params, ProblemKind kind);

/// Finds every symmetric root with m >= 0 (mirrors follow by m -> -m) by
/// reducing the system to one equation in q on each branch (m = 0 and
/// m != 0), scanning q in (0, 1) and bracketing every sign change.
/// Requires g > 0; use g_zero_branches at g = 0.
SolveOutcome solve(const MeanFieldParams& params, ProblemKind kind);

/// Stable root closest in (m, q) to `previous`, or the stable root with the
/// lowest free energy when there is no previous point.
std::optional<SaddlePoint> select_root(const SolveOutcome& outcome, const SaddlePoint* previous);

/// Positive-definite Hessian of the free energy reduced to (m, q), with the
/// conjugate variables eliminated at their stationary values.
bool is_stable(const SaddlePoint& x, const MeanFieldParams& params, ProblemKind kind);

double m_sigma_no_field(const SaddlePoint& sp, const MeanFieldParams& params);
double m_sigma_random_field(const SaddlePoint& sp, const MeanFieldParams& params);
double m_sigma(const SaddlePoint& sp, const MeanFieldParams& params, ProblemKind kind);

double free_energy(const SaddlePoint& sp, const MeanFieldParams& params, ProblemKind kind);

enum class GZeroBranch { M0, MPlus, MMinus };

const char* to_string(GZeroBranch branch) noexcept;

struct GZeroSolution {
  GZeroBranch branch = GZeroBranch::M0;
  std::optional<double> m_sq;  // empty when the branch is complex
  bool stable = false;
  std::string region;
  double q_h = 0.0;

  std::optional<double> m() const;  // nonnegative root of m_sq when real and >= 0
  std::optional<double> q() const { return m_sq ? std::optional<double>(*m_sq + q_h) : std::nullopt; }
};

/// Closed-form g = 0 solutions m0, m_plus, m_minus with
///   m_pm^2 = (1 - q_h)[1 - (1 +- sqrt(1 - 2 p' xi'J)) / (2 p')],
/// p' = (1 - q_h) p, xi' = (1 + q_h) xi / (1 - q_h), q_h = (2 h0 / J)^2
/// (q_h = 0 without fields).
std::vector<GZeroSolution> g_zero_branches(const MeanFieldParams& params, ProblemKind kind);

/// Spin magnetization in the g -> 0 limit of the random-field readout at
/// magnetization m and q = m^2 + q_h: 1 below h0/(mJ) = 1/2, 1/2 at the
/// threshold, 0 above.
double m_sigma_g_zero(double m, const MeanFieldParams& params);

}  // namespace cim

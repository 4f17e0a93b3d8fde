#include "cim/saddle_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "cim/errors.hpp"

namespace cim {

MeanFieldParams MeanFieldParams::from_products(double p, double xiJ, double g, double h0_over_J) {
  MeanFieldParams mf;
  mf.p = p;
  mf.xiJ = xiJ;
  mf.g = g;
  mf.h0_over_J = h0_over_J;
  mf.J = 1.0;
  mf.xi = xiJ;
  return mf;
}

MeanFieldParams MeanFieldParams::from_components(double p, double xi, double J, double g, double h0) {
  if (!(J > 0.0)) throw InvalidInput("J must be positive");
  MeanFieldParams mf;
  mf.p = p;
  mf.xi = xi;
  mf.J = J;
  mf.xiJ = xi * J;
  mf.g = g;
  mf.h0_over_J = h0 / J;
  return mf;
}

void MeanFieldParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput(std::string(name) + " must be finite and >= 0");
  };
  nonneg(p, "p");
  nonneg(xiJ, "xiJ");
  nonneg(g, "g");
  nonneg(h0_over_J, "h0_over_J");
  nonneg(xi, "xi");
  if (!(J > 0.0) || !std::isfinite(J)) throw InvalidInput("J must be finite and > 0");
  if (std::abs(xi * J - xiJ) > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, xiJ)) {
    throw InvalidInput("xiJ must equal xi * J");
  }
}

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NoRealSolution: return "no_real_solution";
    case SolveStatus::Failed: return "failed";
  }
  return "failed";
}

const char* to_string(GZeroBranch branch) noexcept {
  switch (branch) {
    case GZeroBranch::M0: return "m0";
    case GZeroBranch::MPlus: return "m_plus";
    case GZeroBranch::MMinus: return "m_minus";
  }
  return "m0";
}

std::vector<SaddlePoint> SolveOutcome::stable_roots() const {
  std::vector<SaddlePoint> out;
  std::copy_if(roots.begin(), roots.end(), std::back_inserter(out), [](const SaddlePoint& s) { return s.stable; });
  return out;
}

double h_upper(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double g_function(double m_tilde, double q_tilde, double eta, double p, double g) {
  if (!(q_tilde > p)) throw DomainError("G requires q_tilde > p");
  if (!(g > 0.0)) throw DomainError("G requires g > 0");
  const double a = eta / (g * g);
  return std::exp(a) - 2.0 * std::sinh(a) * h_upper(m_tilde / (g * std::sqrt(q_tilde - p)));
}

namespace {

double field_xi_h0(const MeanFieldParams& params, ProblemKind kind) {
  return kind == ProblemKind::RandomField ? params.xi_h0() : 0.0;
}

void check_point(const SaddlePoint& x, double p) {
  if (!(x.q < 1.0)) throw DomainError("q must be < 1");
  if (x.q_tilde == p || x.q_tilde == -p) throw SingularityError("q_tilde^2 = p^2");
}

std::array<double, 4> residuals_impl(const SaddlePoint& x, const MeanFieldParams& mf, double xih0) {
  check_point(x, mf.p);
  const double g2 = mf.g * mf.g;
  const double one_q = 1.0 - x.q;
  const double u = x.q_tilde - mf.p;
  const double F = 2.0 * xih0 / one_q;
  const double half_m = x.m_tilde / (2.0 * u);
  const double half_f = F / (2.0 * u);
  return {
      x.m_tilde + mf.xiJ * x.m / one_q,
      x.q_tilde - (1.0 - g2) / one_q + mf.xiJ * x.m * x.m / (2.0 * one_q * one_q) +
          2.0 * xih0 * xih0 / (u * one_q * one_q * one_q),
      x.m + half_m,
      x.q - g2 * x.q_tilde / (2.0 * (x.q_tilde * x.q_tilde - mf.p * mf.p)) - half_m * half_m - half_f * half_f,
  };
}

double max_norm(const std::array<double, 4>& r) {
  double out = 0.0;
  for (double v : r) out = std::max(out, std::abs(v));
  return out;
}

double m_sigma_impl(const SaddlePoint& sp, const MeanFieldParams& mf, double xih0) {
  if (!(sp.q_tilde > mf.p)) throw DomainError("m_sigma requires q_tilde > p");
  if (!(mf.g > 0.0)) throw DomainError("m_sigma requires g > 0");
  const double s = mf.g * std::sqrt(sp.q_tilde - mf.p) * std::numbers::sqrt2;
  const double F = 2.0 * xih0 / (1.0 - sp.q);
  // -1 + H(a) + H(b) = -(erf(a/sqrt2) + erf(b/sqrt2)) / 2
  return -0.5 * (std::erf((sp.m_tilde - F) / s) + std::erf((sp.m_tilde + F) / s)) + 0.0;  // no -0
}

double free_energy_impl(const SaddlePoint& sp, const MeanFieldParams& mf, double xih0) {
  if (!(sp.q < 1.0)) throw DomainError("free energy requires q < 1");
  if (!(sp.q_tilde > mf.p)) throw DomainError("free energy requires q_tilde > p");
  const double g2 = mf.g * mf.g;
  const double one_q = 1.0 - sp.q;
  const double F = 2.0 * xih0 / one_q;
  const double u = sp.q_tilde - mf.p;
  double f = -2.0 * (1.0 - g2) * std::log1p(-sp.q) - 2.0 * sp.m_tilde * sp.m - 2.0 * sp.q_tilde * sp.q -
             mf.xiJ * sp.m * sp.m / one_q;
  if (g2 > 0.0) {
    f += -g2 * std::log(std::numbers::pi * g2) + 0.5 * g2 * std::log(sp.q_tilde * sp.q_tilde - mf.p * mf.p);
  }
  return f - (sp.m_tilde * sp.m_tilde + F * F) / (2.0 * u);
}

// Hessian of f(m, q) after eliminating m_tilde, q_tilde. u = q_tilde - p solves
// Psi(u) = q - m^2 - F^2/(4u^2) - g^2 (u + p) / (2u(u + 2p)) = 0.
std::array<double, 3> reduced_hessian(double m, double q, double u, const MeanFieldParams& mf, double xih0) {
  const double p = mf.p;
  const double g2 = mf.g * mf.g;
  const double one_q = 1.0 - q;
  const double F = 2.0 * xih0 / one_q;
  const double Fq = 2.0 * xih0 / (one_q * one_q);
  const double c = xih0 * xih0;
  const double psi_u =
      F * F / (2.0 * u * u * u) + g2 * (u * u + 2.0 * p * u + 2.0 * p * p) / (2.0 * u * u * (u + 2.0 * p) * (u + 2.0 * p));
  const double u_m = 2.0 * m / psi_u;
  const double u_q = -(1.0 - F * Fq / (2.0 * u * u)) / psi_u;
  const double h_mm = 4.0 * u + 4.0 * m * u_m - 2.0 * mf.xiJ / one_q;
  const double h_mq = 4.0 * m * u_q - 2.0 * mf.xiJ * m / (one_q * one_q);
  const double h_qq = 2.0 * (1.0 - g2) / (one_q * one_q) - 2.0 * u_q - 2.0 * mf.xiJ * m * m / (one_q * one_q * one_q) -
                      12.0 * c / (one_q * one_q * one_q * one_q * u) +
                      4.0 * c / (one_q * one_q * one_q * u * u) * u_q;
  return {h_mm, h_mq, h_qq};
}

bool positive_definite(const std::array<double, 3>& h) {
  return h[0] > 0.0 && h[2] > 0.0 && h[0] * h[2] - h[1] * h[1] > 0.0;
}

// ---- reduction to one equation in q ----------------------------------------

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Branch { ZeroLarge, ZeroSmall, Finite };

struct Reduced {
  double m = 0.0;
  double u = kNaN;  // q_tilde - p
  double residual = kNaN;
};

Reduced reduce(Branch branch, double q, const MeanFieldParams& mf, double xih0) {
  Reduced r;
  const double p = mf.p;
  const double g2 = mf.g * mf.g;
  const double one_q = 1.0 - q;
  const double F = 2.0 * xih0 / one_q;
  double m2 = 0.0;
  if (branch == Branch::Finite) {
    r.u = mf.xiJ / (2.0 * one_q);
    m2 = (2.0 * one_q * one_q / mf.xiJ) *
         ((1.0 - g2) / one_q - p - r.u - 2.0 * xih0 * xih0 / (r.u * one_q * one_q * one_q));
    if (!(m2 > 0.0)) return Reduced{};
    r.m = std::sqrt(m2);
  } else {
    // u^2 + (p - A) u + B = 0
    const double A = (1.0 - g2) / one_q;
    const double B = 2.0 * xih0 * xih0 / (one_q * one_q * one_q);
    const double disc = (A - p) * (A - p) - 4.0 * B;
    if (!(A - p > 0.0) || !(disc >= 0.0)) return Reduced{};
    const double sq = std::sqrt(disc);
    if (branch == Branch::ZeroLarge) {
      r.u = 0.5 * ((A - p) + sq);
    } else {
      if (B == 0.0) return Reduced{};
      r.u = 2.0 * B / ((A - p) + sq);  // smaller root without cancellation
    }
  }
  if (!(r.u > 0.0) || !std::isfinite(r.u)) return Reduced{};
  const double qt = p + r.u;
  r.residual = q - (g2 * qt / (2.0 * r.u * (qt + p)) + m2 + F * F / (4.0 * r.u * r.u));
  return r;
}

std::vector<double> scan_grid() {
  std::vector<double> qs;
  constexpr int kUniform = 2000;
  for (int i = 1; i < kUniform; ++i) qs.push_back(static_cast<double>(i) / kUniform);
  for (int i = 0; i < 60; ++i) qs.push_back(std::pow(10.0, -16.0 + 13.0 * i / 59.0));
  for (int i = 0; i < 40; ++i) qs.push_back(1.0 - std::pow(10.0, -12.0 + 9.0 * i / 39.0));
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  return qs;
}

template <class Fn>
std::vector<double> enumerate_roots(Fn&& f) {
  static const std::vector<double> base = scan_grid();
  std::vector<double> qs = base;
  std::vector<double> vals(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) vals[i] = f(qs[i]);

  // Refine around every edge of the valid region so roots hugging it are bracketed.
  std::vector<double> extra;
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
    const bool a = std::isfinite(vals[i]);
    const bool b = std::isfinite(vals[i + 1]);
    if (a == b) continue;
    double lo = qs[i], hi = qs[i + 1];
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (std::isfinite(f(mid)) == a ? lo : hi) = mid;
    }
    const double edge = a ? lo : hi;
    const double dir = a ? -1.0 : 1.0;
    const double span = qs[i + 1] - qs[i];
    extra.push_back(edge);
    for (int k = 0; k < 46; ++k) extra.push_back(edge + dir * std::pow(10.0, -15.0 + 15.0 * k / 45.0) * span);
  }
  if (!extra.empty()) {
    for (double e : extra) {
      if (e > 0.0 && e < 1.0) qs.push_back(e);
    }
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
    vals.resize(qs.size());
    for (std::size_t i = 0; i < qs.size(); ++i) vals[i] = f(qs[i]);
  }

  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < qs.size(); ++i) {
    const double a = vals[i], b = vals[i + 1];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (a == 0.0) {
      roots.push_back(qs[i]);
      continue;
    }
    if (b == 0.0 || (a < 0.0) == (b < 0.0)) continue;
    std::uintmax_t iters = 200;
    auto [lo, hi] = boost::math::tools::toms748_solve(f, qs[i], qs[i + 1], a, b,
                                                       boost::math::tools::eps_tolerance<double>(52), iters);
    const double flo = f(lo), fhi = f(hi);
    roots.push_back(std::abs(flo) <= std::abs(fhi) ? lo : hi);
  }
  return roots;
}

SaddlePoint make_point(Branch branch, double q, const MeanFieldParams& mf, double xih0) {
  const Reduced r = reduce(branch, q, mf, xih0);
  SaddlePoint sp;
  sp.q = q;
  sp.m = r.m;
  sp.q_tilde = mf.p + r.u;
  sp.m_tilde = branch == Branch::Finite ? -mf.xiJ * r.m / (1.0 - q) : 0.0;
  return sp;
}

}  // namespace

std::array<double, 4> residuals_no_field(const SaddlePoint& x, const MeanFieldParams& params) {
  return residuals_impl(x, params, 0.0);
}

std::array<double, 4> residuals_random_field(const SaddlePoint& x, const MeanFieldParams& params) {
  return residuals_impl(x, params, params.xi_h0());
}

std::array<double, 4> residuals(const SaddlePoint& x, const MeanFieldParams& params, ProblemKind kind) {
  return residuals_impl(x, params, field_xi_h0(params, kind));
}

double m_sigma_no_field(const SaddlePoint& sp, const MeanFieldParams& params) {
  return m_sigma_impl(sp, params, 0.0);
}

double m_sigma_random_field(const SaddlePoint& sp, const MeanFieldParams& params) {
  return m_sigma_impl(sp, params, params.xi_h0());
}

double m_sigma(const SaddlePoint& sp, const MeanFieldParams& params, ProblemKind kind) {
  return m_sigma_impl(sp, params, field_xi_h0(params, kind));
}

double free_energy(const SaddlePoint& sp, const MeanFieldParams& params, ProblemKind kind) {
  return free_energy_impl(sp, params, field_xi_h0(params, kind));
}

bool is_stable(const SaddlePoint& x, const MeanFieldParams& params, ProblemKind kind) {
  if (!(params.g > 0.0) || !(x.q_tilde > params.p) || !(x.q < 1.0)) return false;
  return positive_definite(reduced_hessian(x.m, x.q, x.q_tilde - params.p, params, field_xi_h0(params, kind)));
}

SolveOutcome solve(const MeanFieldParams& params, ProblemKind kind) {
  params.validate();
  if (!(params.g > 0.0)) throw InvalidInput("solve requires g > 0; use g_zero_branches at g = 0");
  const double xih0 = field_xi_h0(params, kind);

  SolveOutcome out;
  std::vector<Branch> branches{Branch::ZeroLarge};
  if (xih0 > 0.0) branches.push_back(Branch::ZeroSmall);
  if (params.xiJ > 0.0) branches.push_back(Branch::Finite);

  for (Branch branch : branches) {
    auto f = [&](double q) { return reduce(branch, q, params, xih0).residual; };
    for (double q : enumerate_roots(f)) {
      SaddlePoint sp = make_point(branch, q, params, xih0);
      if (!(sp.q_tilde > params.p) || !(sp.q < 1.0)) continue;
      sp.residual = max_norm(residuals_impl(sp, params, xih0));
      sp.stable = is_stable(sp, params, kind);
      sp.m_sigma = m_sigma_impl(sp, params, xih0);
      sp.free_energy = free_energy_impl(sp, params, xih0);
      out.roots.push_back(sp);
    }
  }

  std::sort(out.roots.begin(), out.roots.end(), [](const SaddlePoint& a, const SaddlePoint& b) {
    return a.m != b.m ? a.m < b.m : a.q < b.q;
  });
  auto same = [](const SaddlePoint& a, const SaddlePoint& b) {
    return std::abs(a.m - b.m) < 1e-10 && std::abs(a.q - b.q) < 1e-12;
  };
  out.roots.erase(std::unique(out.roots.begin(), out.roots.end(), same), out.roots.end());

  constexpr double kTolerance = 1e-8;
  bool any_stable = false;
  double worst = 0.0;
  for (const auto& r : out.roots) {
    if (!r.stable) continue;
    any_stable = true;
    worst = std::max(worst, r.residual);
  }
  if (!any_stable) {
    out.status = SolveStatus::NoRealSolution;
    out.message = out.roots.empty() ? "no real root" : "no stable real root";
  } else if (worst > kTolerance) {
    out.status = SolveStatus::Failed;
    out.message = "residual " + std::to_string(worst) + " above tolerance";
  } else {
    out.status = SolveStatus::Converged;
  }
  return out;
}

std::optional<SaddlePoint> select_root(const SolveOutcome& outcome, const SaddlePoint* previous) {
  std::optional<SaddlePoint> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const auto& r : outcome.roots) {
    if (!r.stable) continue;
    const double score = previous ? std::hypot(r.m - previous->m, r.q - previous->q) : r.free_energy;
    if (score < best_score) {
      best_score = score;
      best = r;
    }
  }
  return best;
}

std::optional<double> GZeroSolution::m() const {
  if (!m_sq || *m_sq < 0.0) return std::nullopt;
  return std::sqrt(*m_sq);
}

std::vector<GZeroSolution> g_zero_branches(const MeanFieldParams& params, ProblemKind kind) {
  params.validate();
  const double h = kind == ProblemKind::RandomField ? params.h0_over_J : 0.0;
  const double q_h = 4.0 * h * h;
  if (!(q_h < 1.0)) throw DomainError("random field too strong: q_h = (2 h0/J)^2 must be < 1");
  const double pp = (1.0 - q_h) * params.p;
  const double xj = (1.0 + q_h) * params.xiJ / (1.0 - q_h);
  const double disc = 1.0 - 2.0 * pp * xj;

  std::vector<GZeroSolution> out(3);
  out[0].branch = GZeroBranch::M0;
  out[0].m_sq = 0.0;
  out[0].q_h = q_h;
  out[0].stable = pp + xj / 2.0 < 1.0;
  out[0].region = out[0].stable ? "p'+xi'J/2<1" : "p'+xi'J/2>=1";

  for (int k = 1; k <= 2; ++k) {
    auto& s = out[static_cast<std::size_t>(k)];
    s.branch = k == 1 ? GZeroBranch::MPlus : GZeroBranch::MMinus;
    s.q_h = q_h;
    if (disc < 0.0 || pp == 0.0) {
      s.region = disc < 0.0 ? "2p'xi'J>1 (complex)" : "p'=0";
      continue;
    }
    const double sign = k == 1 ? 1.0 : -1.0;
    s.m_sq = (1.0 - q_h) * (1.0 - (1.0 + sign * std::sqrt(disc)) / (2.0 * pp));
  }
  auto& plus = out[1];
  if (plus.m_sq) {
    plus.stable = pp > 0.5 && pp + xj / 2.0 > 1.0;
    plus.region = plus.stable ? "p'>1/2, p'+xi'J/2>1, 2p'xi'J<=1" : "outside p'>1/2 and p'+xi'J/2>1";
  }
  if (out[2].m_sq) out[2].region = "always unstable";
  return out;
}

double m_sigma_g_zero(double m, const MeanFieldParams& params) {
  // Sign of m_tilde -/+ F is the sign of -(J m +/- 2 h0) for xi > 0.
  if (params.xiJ == 0.0) return 0.0;
  auto limit_h = [](double arg_sign) { return arg_sign < 0.0 ? 1.0 : (arg_sign > 0.0 ? 0.0 : 0.5); };
  const double two_h = 2.0 * params.h0_over_J;
  return -1.0 + limit_h(-(m + two_h)) + limit_h(-(m - two_h));
}

}  // namespace cim

#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace oracle {

using Big = boost::multiprecision::cpp_bin_float_50;

/// H(x) from its defining integral, in 50-digit arithmetic.
inline double gaussian_tail(double x) {
  using boost::multiprecision::exp;
  using boost::multiprecision::sqrt;
  boost::math::quadrature::exp_sinh<Big> integrator;
  const Big x0 = x;
  const Big pi = boost::math::constants::pi<Big>();
  auto f = [&](const Big& t) { return exp(-(x0 + t) * (x0 + t) / 2); };
  const Big value = integrator.integrate(f) / sqrt(2 * pi);
  return static_cast<double>(value);
}

/// G(m_tilde, q_tilde, eta) from the two-dimensional integral over (mu, nu)
/// of exp(-phi/g^2), phi = z^T Q z + m_tilde (mu + nu) + eta sign(mu + nu),
/// Q = [[q_tilde, -p], [-p, q_tilde]], divided by its eta = 0 Gaussian value.
inline double g_function_2d(double m_tilde, double q_tilde, double eta, double p, double g) {
  using boost::math::quadrature::gauss_kronrod;
  const double g2 = g * g;
  // Stationary point and the constant that makes the exponent <= 0 at eta = 0.
  const double c = m_tilde * m_tilde / (2.0 * (q_tilde - p));
  const double z0 = -m_tilde / (2.0 * (q_tilde - p));
  const double width = 14.0 * g / std::sqrt(q_tilde - p);
  auto integrand = [&](double mu, double nu) {
    const double s = (mu + nu > 0.0) ? 1.0 : -1.0;
    const double phi = q_tilde * (mu * mu + nu * nu) - 2.0 * p * mu * nu + m_tilde * (mu + nu) + eta * s;
    return std::exp(-(phi + c) / g2);
  };
  auto inner = [&](double mu) {
    // Split the nu integral at the sign discontinuity nu = -mu.
    const double lo = z0 - width, hi = z0 + width, cut = -mu;
    auto f = [&](double nu) { return integrand(mu, nu); };
    double total = 0.0;
    if (cut > lo && cut < hi) {
      total += gauss_kronrod<double, 61>::integrate(f, lo, cut, 15, 1e-14);
      total += gauss_kronrod<double, 61>::integrate(f, cut, hi, 15, 1e-14);
    } else {
      total += gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-14);
    }
    return total;
  };
  const double integral = gauss_kronrod<double, 61>::integrate(inner, z0 - width, z0 + width, 15, 1e-13);
  const double gaussian = std::numbers::pi * g2 / std::sqrt(q_tilde * q_tilde - p * p);
  return integral / gaussian;
}

/// g^2 Phi evaluated term by term in 50-digit arithmetic for a dense problem
/// given as row-major couplings.
template <class Vec, class Mat>
double potential_terms(const Vec& mu, const Vec& nu, const Mat& J, const Vec& h, double p, double xi, double g) {
  using boost::multiprecision::log;
  const std::size_t n = mu.size();
  Big qmu = 0, qnu = 0, cross = 0, imu = 0, inu = 0;
  for (std::size_t j = 0; j < n; ++j) {
    qmu += Big(mu[j]) * mu[j];
    qnu += Big(nu[j]) * nu[j];
    cross += Big(mu[j]) * nu[j];
    imu += Big(h[j]) * mu[j];
    inu += Big(h[j]) * nu[j];
    for (std::size_t l = j + 1; l < n; ++l) {
      imu += Big(J[j][l]) * mu[j] * mu[l];
      inu += Big(J[j][l]) * nu[j] * nu[l];
    }
  }
  qmu /= n;
  qnu /= n;
  const Big g2 = Big(g) * g;
  const Big phi0 = -Big(n) * (1 - g2) * (log(1 - qmu) + log(1 - qnu)) - 2 * Big(p) * cross;
  const Big inter = -(2 * Big(xi) / (1 - qmu)) * imu - (2 * Big(xi) / (1 - qnu)) * inu;
  return static_cast<double>(phi0 + inter);
}

/// Mixed second derivatives for one coupled pair, 50-digit arithmetic.
inline void db_pair(double Jjl, double mu_j, double mu_l, double xi, double g, double& lhs, double& rhs) {
  const Big g2 = Big(g) * g;
  lhs = static_cast<double>(-2 * Big(xi) * Jjl / (g2 * (1 - Big(mu_j) * mu_j)));
  rhs = static_cast<double>(-2 * Big(xi) * Jjl / (g2 * (1 - Big(mu_l) * mu_l)));
}

}  // namespace oracle

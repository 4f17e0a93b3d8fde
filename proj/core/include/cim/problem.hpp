#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "cim/errors.hpp"

namespace cim {

/// A problem file or a hand-built matrix broke one of the structural checks
/// (symmetry, zero diagonal, uniform row norm). `check()` names the failure.
class InvariantViolation : public InvalidInput {
 public:
  InvariantViolation(std::string check, const std::string& detail)
      : InvalidInput(check + ": " + detail), check_(std::move(check)) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

/// Ising instance embedded in the DOPO network: symmetric couplings J with
/// zero diagonal and a longitudinal field h. Immutable once built.
///
/// The optical model needs sum_{l != j} |J_jl| to be the same for every j.
/// Hand-built problems that break this are accepted and flagged through
/// row_norm_uniform(); load_problem() rejects them.
class IsingProblem {
 public:
  static constexpr double kRowNormTolerance = 1e-9;

  IsingProblem(Eigen::MatrixXd couplings, Eigen::VectorXd fields);

  std::size_t size() const noexcept { return static_cast<std::size_t>(fields_.size()); }
  const Eigen::MatrixXd& couplings() const noexcept { return couplings_; }
  const Eigen::VectorXd& fields() const noexcept { return fields_; }

  bool row_norm_uniform() const noexcept { return row_norm_uniform_; }
  /// Largest relative spread of the row norms, (max - min) / max.
  double row_norm_spread() const noexcept { return row_norm_spread_; }
  double row_norm(std::size_t j) const { return couplings_.row(static_cast<Eigen::Index>(j)).cwiseAbs().sum(); }

  /// Common value of every off-diagonal coupling, when they are all equal.
  std::optional<double> uniform_coupling() const noexcept { return uniform_coupling_; }

  /// out_j = sum_{l != j} J_jl x_l.
  void coupling_field(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;

  /// E(s) = -sum_{j<l} J_jl s_j s_l - sum_j h_j s_j.
  double ising_energy(std::span<const int> spins) const;

 private:
  Eigen::MatrixXd couplings_;
  Eigen::VectorXd fields_;
  bool row_norm_uniform_ = true;
  double row_norm_spread_ = 0.0;
  std::optional<double> uniform_coupling_;
};

/// Fully-connected ferromagnet: J_jl = J / (2n) for j != l, h = 0.
IsingProblem make_ferro(std::size_t n, double J);

/// make_ferro couplings plus binary fields h_j = +-h0. The sign of site j is
/// the top bit of counter_draw(seed, j): clear gives +h0, set gives -h0.
IsingProblem make_ferro_random_field(std::size_t n, double J, double h0, std::uint64_t seed);

enum class FamilyTag { FullyConnectedFerro, FullyConnectedFerroRandomField, FromFile };

struct ProblemFamily {
  FamilyTag tag = FamilyTag::FullyConnectedFerro;
  double J = 1.0;
  double h0 = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path path;  // FromFile only
};

/// Instantiate a family at size n (n is ignored for FromFile).
IsingProblem make_problem(const ProblemFamily& family, std::size_t n);

/// Text format:
///   # comment
///   N
///   j l J_jl      (1-indexed edge; the transposed entry may be omitted)
///   j h_j         (field; unspecified fields are zero)
IsingProblem load_problem(const std::filesystem::path& path);
IsingProblem parse_problem(std::istream& in);

/// Writes the upper triangle and every field with 17 significant digits.
void save_problem(const IsingProblem& problem, const std::filesystem::path& path);
void write_problem(const IsingProblem& problem, std::ostream& out);

}  // namespace cim

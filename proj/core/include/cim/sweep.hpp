#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cim/potential.hpp"
#include "cim/saddle_point.hpp"
#include "cim/sde.hpp"

namespace cim {

/// One grid axis over p, xiJ, g or h0_over_J.
struct Axis {
  std::string name;
  std::vector<double> values;

  static Axis linspace(std::string name, double start, double stop, int count);
};

enum class SweepMode { Saddle, Ensemble, Both };

SweepMode parse_sweep_mode(const std::string& text);
const char* to_string(SweepMode mode) noexcept;

/// Network used for ensemble points: a fully connected ferromagnet with
/// J = 1 and xi = xiJ, plus binary fields h0 = h0_over_J for RandomField.
struct EnsembleSettings {
  std::size_t n = 200;
  IntegrationConfig integration;
};

struct SweepSpec {
  Axis axis1;
  std::optional<Axis> axis2;
  std::map<std::string, double> fixed;
  SweepMode mode = SweepMode::Saddle;
  ProblemKind kind = ProblemKind::NoField;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = one per hardware thread
  EnsembleSettings ensemble;
  bool field_curve = false;  // adds the h0_over_mJ column

  void validate() const;
  std::size_t point_count() const;
};

struct SweepRow {
  std::size_t index = 0;
  MeanFieldParams params;
  std::optional<SaddlePoint> root;
  std::optional<EnsembleObservables> ensemble;
  SolveStatus status = SolveStatus::Failed;
  std::string message;

  /// h0 / (m J) from this row's solved m; infinite at m = 0.
  double h0_over_mJ() const;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  std::size_t failed_count() const;
};

/// Evaluates every grid point (axis2-major, axis1-minor). Saddle roots are
/// continued along axis1: the first point of a row takes the stable root with
/// the lowest free energy, later points the stable root nearest the previous
/// selection. Ensemble points use the seed derive_seed(spec.seed, index).
/// Rows are written to `csv` (if given) in index order as they complete, each
/// followed by a flush; a failing stream throws IoError.
SweepResult run_sweep(const SweepSpec& spec, std::ostream* csv = nullptr);

/// m_sigma against h0 at fixed (p, xi, J, g), continuing the saddle root
/// along the h0 grid.
SweepResult run_field_curve(double p, double xi, double J, double g, const std::vector<double>& h0_grid,
                            SweepMode mode, const EnsembleSettings& ensemble = {}, std::uint64_t seed = 0,
                            unsigned threads = 1, std::ostream* csv = nullptr);

std::string sweep_csv_header(const SweepSpec& spec);
std::string sweep_csv_row(const SweepSpec& spec, const SweepRow& row);

struct CrossvalEntry {
  std::string observable;
  double predicted = 0.0;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double z = 0.0;
  bool pass = false;  // |z| < z_limit, or |diff| <= 1e-12 when stderr is 0
};

struct CrossvalTable {
  MeanFieldParams params;
  std::size_t n = 0;
  SaddlePoint root;  // mirrored to the sign of the ensemble m
  EnsembleObservables ensemble;
  std::vector<CrossvalEntry> entries;  // m, q, m_sigma
  bool pass() const;
};

/// Runs the ensemble at size n and compares (m, q, m_sigma) with the stable
/// saddle root of lowest free energy. Throws NumericalError when no stable
/// root exists.
CrossvalTable run_crossvalidation(const MeanFieldParams& params, ProblemKind kind, std::size_t n,
                                  const IntegrationConfig& config, unsigned threads = 1, double z_limit = 4.0);

void write_crossval_csv(const CrossvalTable& table, std::ostream& out);

struct DbSnapshot {
  long long step = 0;
  double tau = 0.0;
  NetworkState state;
  double max_abs_gap = 0.0;
};

struct DbDiagnostic {
  std::vector<DbSnapshot> snapshots;
  DbViolation last;       // pairs at the final snapshot
  double max_abs_gap = 0.0;  // over all snapshots
};

/// Integrates trajectory 0 and evaluates db_violation every `stride` steps.
DbDiagnostic run_db_diagnostic(const IsingProblem& problem, const ModelParams& params,
                               const IntegrationConfig& config, long long stride);

/// Max gap over the recorded snapshots, re-evaluated at injection strength xi.
double max_gap_at_xi(const DbDiagnostic& diagnostic, const IsingProblem& problem, const ModelParams& params,
                     double xi);

/// "j,l,lhs,rhs,gap" rows followed by "max_abs_gap,<v>".
void write_db_csv(const DbViolation& violation, std::ostream& out);

/// "tau,j,mu,nu" rows for every recorded state.
void write_trajectory_csv(const std::vector<NetworkState>& states, std::ostream& out);

std::string ensemble_csv_header();
std::string ensemble_csv_row(const MeanFieldParams& params, std::size_t n, const EnsembleObservables& obs);

/// gnuplot script plotting `column` of a sweep CSV: a heatmap when the sweep
/// has two axes, a line plot otherwise.
std::string gnuplot_script(const SweepSpec& spec, const std::filesystem::path& csv_path, const std::string& column,
                           const std::filesystem::path& image_path);

}  // namespace cim

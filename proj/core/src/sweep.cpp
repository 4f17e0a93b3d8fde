#include "cim/sweep.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

#include "cim/format.hpp"
#include "cim/parallel.hpp"
#include "cim/rng.hpp"

namespace cim {

namespace {

const std::array<std::string, 4> kAxisNames{"p", "xiJ", "g", "h0_over_J"};

bool known_name(const std::string& name) {
  return std::find(kAxisNames.begin(), kAxisNames.end(), name) != kAxisNames.end();
}

void set_param(MeanFieldParams& mf, const std::string& name, double v) {
  if (name == "p") {
    mf.p = v;
  } else if (name == "xiJ") {
    mf.xiJ = v;
    mf.xi = v;
  } else if (name == "g") {
    mf.g = v;
  } else if (name == "h0_over_J") {
    mf.h0_over_J = v;
  } else {
    throw InvalidInput("unknown parameter '" + name + "'");
  }
}

std::string fmt(double v) { return format_shortest(v); }

}  // namespace

Axis Axis::linspace(std::string name, double start, double stop, int count) {
  if (count < 2) throw InvalidInput("axis '" + name + "' needs count >= 2");
  Axis a{std::move(name), {}};
  a.values.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    a.values.push_back(i == count - 1 ? stop : start + (stop - start) * i / (count - 1));
  }
  return a;
}

SweepMode parse_sweep_mode(const std::string& text) {
  if (text == "saddle") return SweepMode::Saddle;
  if (text == "ensemble") return SweepMode::Ensemble;
  if (text == "both") return SweepMode::Both;
  throw InvalidInput("mode must be saddle, ensemble or both, not '" + text + "'");
}

const char* to_string(SweepMode mode) noexcept {
  switch (mode) {
    case SweepMode::Saddle: return "saddle";
    case SweepMode::Ensemble: return "ensemble";
    case SweepMode::Both: return "both";
  }
  return "saddle";
}

std::size_t SweepSpec::point_count() const {
  return axis1.values.size() * (axis2 ? axis2->values.size() : 1);
}

namespace {

MeanFieldParams point_params(const SweepSpec& spec, std::size_t index) {
  MeanFieldParams mf;
  for (const auto& [name, v] : spec.fixed) set_param(mf, name, v);
  const std::size_t n1 = spec.axis1.values.size();
  set_param(mf, spec.axis1.name, spec.axis1.values[index % n1]);
  if (spec.axis2) set_param(mf, spec.axis2->name, spec.axis2->values[index / n1]);
  return mf;
}

bool uses_ensemble(SweepMode mode) { return mode != SweepMode::Saddle; }
bool uses_saddle(SweepMode mode) { return mode != SweepMode::Ensemble; }

}  // namespace

void SweepSpec::validate() const {
  std::set<std::string> names;
  auto check_axis = [&](const Axis& a) {
    if (!known_name(a.name)) throw InvalidInput("unknown axis '" + a.name + "'");
    if (a.values.size() < 2) throw InvalidInput("axis '" + a.name + "' needs at least 2 points");
    if (!names.insert(a.name).second) throw InvalidInput("axis '" + a.name + "' given twice");
  };
  check_axis(axis1);
  if (axis2) check_axis(*axis2);
  for (const auto& [name, v] : fixed) {
    if (!known_name(name)) throw InvalidInput("unknown fixed parameter '" + name + "'");
    if (!names.insert(name).second) throw InvalidInput("'" + name + "' is both an axis and fixed");
  }
  for (const char* required : {"p", "xiJ", "g"}) {
    if (!names.count(required)) throw InvalidInput(std::string("parameter '") + required + "' is not set");
  }
  if (kind == ProblemKind::NoField && names.count("h0_over_J")) {
    const bool nonzero = std::any_of(fixed.begin(), fixed.end(), [](const auto& kv) {
      return kv.first == "h0_over_J" && kv.second != 0.0;
    });
    if (nonzero || axis1.name == "h0_over_J" || (axis2 && axis2->name == "h0_over_J")) {
      throw InvalidInput("h0_over_J requires the random-field problem kind");
    }
  }
  for (std::size_t i = 0; i < point_count(); ++i) {
    const MeanFieldParams mf = point_params(*this, i);
    mf.validate();
    if (uses_ensemble(mode)) ensemble.integration.validate(ModelParams{mf.p, mf.xi, mf.g});
  }
  if (uses_ensemble(mode) && ensemble.n < 2) throw InvalidInput("ensemble size must be >= 2");
}

double SweepRow::h0_over_mJ() const {
  if (!root) return std::numeric_limits<double>::quiet_NaN();
  if (root->m == 0.0) return params.h0_over_J == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return params.h0_over_J / std::abs(root->m);
}

std::size_t SweepResult::failed_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status == SolveStatus::Failed; }));
}

std::string sweep_csv_header(const SweepSpec& spec) {
  std::string h;
  if (uses_saddle(spec.mode)) {
    h = "p,xiJ,g,h0_over_J,branch,m,q,m_tilde,q_tilde,stable,m_sigma,free_energy,residual,status";
    if (spec.field_curve) h += ",h0_over_mJ";
    if (spec.mode == SweepMode::Both) h += ",N,m_ens,q_ens,m_sigma_ens,se_m,se_q,se_msigma";
  } else {
    h = "p,xiJ,g,h0_over_J,N,m,q,m_sigma,se_m,se_q,se_msigma,status";
  }
  return h;
}

std::string sweep_csv_row(const SweepSpec& spec, const SweepRow& row) {
  std::ostringstream os;
  const auto& mf = row.params;
  os << fmt(mf.p) << ',' << fmt(mf.xiJ) << ',' << fmt(mf.g) << ',' << fmt(mf.h0_over_J);
  auto ensemble_cols = [&] {
    if (row.ensemble) {
      const auto& e = *row.ensemble;
      os << ',' << spec.ensemble.n << ',' << fmt(e.m) << ',' << fmt(e.q) << ',' << fmt(e.m_sigma) << ','
         << fmt(e.se_m) << ',' << fmt(e.se_q) << ',' << fmt(e.se_m_sigma);
    } else {
      os << ',' << spec.ensemble.n << ",nan,nan,nan,nan,nan,nan";
    }
  };
  if (uses_saddle(spec.mode)) {
    if (row.root) {
      const auto& r = *row.root;
      os << ',' << (r.m == 0.0 ? "m0" : "m_finite") << ',' << fmt(r.m) << ',' << fmt(r.q) << ','
         << fmt(r.m_tilde) << ',' << fmt(r.q_tilde) << ',' << (r.stable ? 1 : 0) << ',' << fmt(r.m_sigma) << ','
         << fmt(r.free_energy) << ',' << fmt(r.residual);
    } else {
      os << ",,nan,nan,nan,nan,0,nan,nan,nan";
    }
    os << ',' << to_string(row.status);
    if (spec.field_curve) os << ',' << fmt(row.h0_over_mJ());
    if (spec.mode == SweepMode::Both) ensemble_cols();
  } else {
    ensemble_cols();
    os << ',' << to_string(row.status);
  }
  return os.str();
}

namespace {

/// Single consumer that emits completed rows in index order.
class OrderedWriter {
 public:
  OrderedWriter(const SweepSpec& spec, std::vector<SweepRow>& rows, std::ostream* out)
      : spec_(spec), rows_(rows), done_(rows.size(), false), out_(out) {}

  void start() {
    if (!out_) return;
    *out_ << sweep_csv_header(spec_) << '\n';
    flush();
  }

  void publish(std::size_t index) {
    std::lock_guard lock(mutex_);
    done_[index] = true;
    while (next_ < done_.size() && done_[next_]) {
      if (out_) *out_ << sweep_csv_row(spec_, rows_[next_]) << '\n';
      ++next_;
    }
    flush();
  }

 private:
  void flush() {
    if (!out_) return;
    out_->flush();
    if (!*out_) throw IoError("failed writing sweep output");
  }

  const SweepSpec& spec_;
  std::vector<SweepRow>& rows_;
  std::vector<bool> done_;
  std::ostream* out_;
  std::mutex mutex_;
  std::size_t next_ = 0;
};

void solve_point(const SweepSpec& spec, SweepRow& row, const SaddlePoint*& previous) {
  const SolveOutcome outcome = solve(row.params, spec.kind);
  row.status = outcome.status;
  row.message = outcome.message;
  if (outcome.status == SolveStatus::Failed) {
    previous = nullptr;
    return;
  }
  row.root = select_root(outcome, previous);
  previous = row.root ? &*row.root : nullptr;
}

void ensemble_point(const SweepSpec& spec, SweepRow& row) {
  const std::uint64_t point_seed = derive_seed(spec.seed, row.index);
  const auto& mf = row.params;
  const IsingProblem problem = spec.kind == ProblemKind::RandomField
                                   ? make_ferro_random_field(spec.ensemble.n, 1.0, mf.h0_over_J,
                                                             counter_draw(point_seed, 0xF1E1D))
                                   : make_ferro(spec.ensemble.n, 1.0);
  IntegrationConfig config = spec.ensemble.integration;
  config.seed = point_seed;
  row.ensemble = run_ensemble(problem, ModelParams{mf.p, mf.xi, mf.g}, config, 1);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, std::ostream* csv) {
  spec.validate();
  const std::size_t total = spec.point_count();
  const std::size_t n1 = spec.axis1.values.size();
  SweepResult result;
  result.rows.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    result.rows[i].index = i;
    result.rows[i].params = point_params(spec, i);
  }
  OrderedWriter writer(spec, result.rows, csv);
  writer.start();

  auto guarded = [&](SweepRow& row, auto&& body) {
    try {
      body();
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      row.status = SolveStatus::Failed;
      row.message = e.what();
      row.root.reset();
    }
  };

  if (spec.mode == SweepMode::Ensemble) {
    parallel_for(total, spec.threads, [&](std::size_t i) {
      SweepRow& row = result.rows[i];
      guarded(row, [&] {
        ensemble_point(spec, row);
        row.status = SolveStatus::Converged;
      });
      writer.publish(i);
    });
  } else {
    const std::size_t lines = total / n1;
    parallel_for(lines, spec.threads, [&](std::size_t line) {
      const SaddlePoint* previous = nullptr;
      for (std::size_t c = 0; c < n1; ++c) {
        const std::size_t i = line * n1 + c;
        SweepRow& row = result.rows[i];
        guarded(row, [&] { solve_point(spec, row, previous); });
        if (row.status == SolveStatus::Failed) previous = nullptr;
        if (spec.mode == SweepMode::Both && row.status != SolveStatus::Failed) {
          guarded(row, [&] { ensemble_point(spec, row); });
          if (row.status == SolveStatus::Failed) previous = nullptr;
        }
        writer.publish(i);
      }
    });
  }
  return result;
}

SweepResult run_field_curve(double p, double xi, double J, double g, const std::vector<double>& h0_grid,
                            SweepMode mode, const EnsembleSettings& ensemble, std::uint64_t seed, unsigned threads,
                            std::ostream* csv) {
  if (!(J > 0.0)) throw InvalidInput("J must be positive");
  if (h0_grid.size() < 2) throw InvalidInput("h0 grid needs at least 2 points");
  SweepSpec spec;
  spec.axis1.name = "h0_over_J";
  for (double h0 : h0_grid) spec.axis1.values.push_back(h0 / J);
  spec.fixed = {{"p", p}, {"xiJ", xi * J}, {"g", g}};
  spec.mode = mode;
  spec.kind = ProblemKind::RandomField;
  spec.seed = seed;
  spec.threads = threads;
  spec.ensemble = ensemble;
  spec.field_curve = true;
  return run_sweep(spec, csv);
}

bool CrossvalTable::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const CrossvalEntry& e) { return e.pass; });
}

CrossvalTable run_crossvalidation(const MeanFieldParams& params, ProblemKind kind, std::size_t n,
                                  const IntegrationConfig& config, unsigned threads, double z_limit) {
  const SolveOutcome outcome = solve(params, kind);
  const auto root = select_root(outcome, nullptr);
  if (!root) throw NumericalError("no stable saddle point at these parameters", 0);

  const IsingProblem problem = kind == ProblemKind::RandomField
                                   ? make_ferro_random_field(n, 1.0, params.h0_over_J, counter_draw(config.seed, 0xF1E1D))
                                   : make_ferro(n, 1.0);
  CrossvalTable table;
  table.params = params;
  table.n = n;
  table.ensemble = run_ensemble(problem, ModelParams{params.p, params.xiJ, params.g}, config, threads);
  table.root = *root;
  if (table.ensemble.m < 0.0) {
    table.root.m = 0.0 - table.root.m;
    table.root.m_tilde = 0.0 - table.root.m_tilde;
    table.root.m_sigma = 0.0 - table.root.m_sigma;
  }
  auto entry = [&](const char* name, double predicted, double empirical, double se) {
    CrossvalEntry e{name, predicted, empirical, se, 0.0, false};
    const double diff = empirical - predicted;
    if (se > 0.0) {
      e.z = diff / se;
      e.pass = std::abs(e.z) < z_limit;
    } else {
      e.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
      e.pass = std::abs(diff) <= 1e-12;
    }
    table.entries.push_back(e);
  };
  entry("m", table.root.m, table.ensemble.m, table.ensemble.se_m);
  entry("q", table.root.q, table.ensemble.q, table.ensemble.se_q);
  entry("m_sigma", table.root.m_sigma, table.ensemble.m_sigma, table.ensemble.se_m_sigma);
  return table;
}

void write_crossval_csv(const CrossvalTable& table, std::ostream& out) {
  out << "observable,p,xiJ,g,h0_over_J,N,predicted,empirical,stderr,z,pass\n";
  for (const auto& e : table.entries) {
    out << e.observable << ',' << fmt(table.params.p) << ',' << fmt(table.params.xiJ) << ','
        << fmt(table.params.g) << ',' << fmt(table.params.h0_over_J) << ',' << table.n << ','
        << fmt(e.predicted) << ',' << fmt(e.empirical) << ',' << fmt(e.stderr_) << ',' << fmt(e.z) << ','
        << (e.pass ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("failed writing cross-validation table");
}

DbDiagnostic run_db_diagnostic(const IsingProblem& problem, const ModelParams& params,
                               const IntegrationConfig& config, long long stride) {
  DbDiagnostic diag;
  simulate_trajectory(problem, params, config, 0, stride, [&](long long, long long step, const NetworkState& s) {
    DbSnapshot snap{step, s.tau, s, 0.0};
    snap.max_abs_gap = db_violation(s, problem, params).max_abs_gap;
    diag.max_abs_gap = std::max(diag.max_abs_gap, snap.max_abs_gap);
    diag.snapshots.push_back(std::move(snap));
  });
  if (!diag.snapshots.empty()) diag.last = db_violation(diag.snapshots.back().state, problem, params);
  return diag;
}

double max_gap_at_xi(const DbDiagnostic& diagnostic, const IsingProblem& problem, const ModelParams& params,
                     double xi) {
  ModelParams scaled = params;
  scaled.xi = xi;
  double worst = 0.0;
  for (const auto& s : diagnostic.snapshots) worst = std::max(worst, db_violation(s.state, problem, scaled).max_abs_gap);
  return worst;
}

void write_db_csv(const DbViolation& violation, std::ostream& out) {
  out << "j,l,lhs,rhs,gap\n";
  for (const auto& pr : violation.pairs) {
    out << pr.j << ',' << pr.l << ',' << fmt(pr.lhs) << ',' << fmt(pr.rhs) << ',' << fmt(pr.gap) << '\n';
  }
  out << "max_abs_gap," << fmt(violation.max_abs_gap) << '\n';
  if (!out) throw IoError("failed writing diagnostic CSV");
}

void write_trajectory_csv(const std::vector<NetworkState>& states, std::ostream& out) {
  out << "tau,j,mu,nu\n";
  for (const auto& s : states) {
    for (Eigen::Index j = 0; j < s.mu.size(); ++j) {
      out << fmt(s.tau) << ',' << j << ',' << fmt(s.mu(j)) << ',' << fmt(s.nu(j)) << '\n';
    }
  }
  if (!out) throw IoError("failed writing trajectory CSV");
}

std::string ensemble_csv_header() { return "p,xiJ,g,N,m,q,m_sigma,se_m,se_q,se_msigma"; }

std::string ensemble_csv_row(const MeanFieldParams& params, std::size_t n, const EnsembleObservables& obs) {
  std::ostringstream os;
  os << fmt(params.p) << ',' << fmt(params.xiJ) << ',' << fmt(params.g) << ',' << n << ',' << fmt(obs.m) << ','
     << fmt(obs.q) << ',' << fmt(obs.m_sigma) << ',' << fmt(obs.se_m) << ',' << fmt(obs.se_q) << ','
     << fmt(obs.se_m_sigma);
  return os.str();
}

std::string gnuplot_script(const SweepSpec& spec, const std::filesystem::path& csv_path, const std::string& column,
                           const std::filesystem::path& image_path) {
  std::vector<std::string> cols;
  {
    std::stringstream header(sweep_csv_header(spec));
    for (std::string c; std::getline(header, c, ',');) cols.push_back(c);
  }
  auto col_index = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw InvalidInput("no CSV column named '" + name + "'");
    return std::to_string(it - cols.begin() + 1);
  };
  std::ostringstream gp;
  gp << "set datafile separator ','\n"
     << "set terminal pngcairo size 800,640\n"
     << "set output '" << image_path.string() << "'\n";
  if (spec.axis2) {
    gp << "set xlabel '" << spec.axis1.name << "'\nset ylabel '" << spec.axis2->name << "'\n"
       << "set view map\nset palette rgb 33,13,10\n"
       << "plot '" << csv_path.string() << "' every ::1 using " << col_index(spec.axis1.name) << ':'
       << col_index(spec.axis2->name) << ':' << col_index(column) << " with image title '" << column << "'\n";
  } else {
    const std::string x = spec.field_curve ? "h0_over_mJ" : spec.axis1.name;
    gp << "set xlabel '" << x << "'\nset ylabel '" << column << "'\n"
       << "plot '" << csv_path.string() << "' every ::1 using " << col_index(x) << ':' << col_index(column)
       << " with linespoints title '" << column << "'\n";
  }
  return gp.str();
}

}  // namespace cim

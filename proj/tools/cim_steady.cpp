#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cim/format.hpp"
#include "cim/potential.hpp"
#include "cim/problem.hpp"
#include "cim/saddle_point.hpp"
#include "cim/sde.hpp"
#include "cim/sweep.hpp"

namespace {

enum ExitCode { kOk = 0, kInvalidInput = 1, kNumericalFailure = 2, kIoFailure = 3 };

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw cim::InvalidInput("bad number '" + text + "' in " + what);
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// name:start:stop:count
cim::Axis parse_axis(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 4) throw cim::InvalidInput("axis must be name:start:stop:count, got '" + text + "'");
  const double count = parse_number(parts[3], "axis count");
  if (count != static_cast<int>(count)) throw cim::InvalidInput("axis count must be an integer");
  return cim::Axis::linspace(parts[0], parse_number(parts[1], "axis start"), parse_number(parts[2], "axis stop"),
                             static_cast<int>(count));
}

// start:stop:count
std::vector<double> parse_grid(const std::string& text) {
  auto axis = parse_axis("h:" + text);
  return axis.values;
}

unsigned parse_threads(const std::string& text) {
  if (text == "auto") return 0;
  const double v = parse_number(text, "--threads");
  if (v < 1 || v != static_cast<unsigned>(v)) throw cim::InvalidInput("--threads must be a positive integer or auto");
  return static_cast<unsigned>(v);
}

cim::ProblemKind parse_kind(const std::string& text) {
  if (text == "no-field") return cim::ProblemKind::NoField;
  if (text == "random-field") return cim::ProblemKind::RandomField;
  throw cim::InvalidInput("kind must be no-field or random-field");
}

cim::InitialCondition parse_init(const std::string& text) {
  if (text == "vacuum") return cim::InitialCondition::Vacuum;
  if (text == "uniform") return cim::InitialCondition::UniformRandom;
  throw cim::InvalidInput("init must be vacuum or uniform");
}

/// Output stream for --out: stdout when empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw cim::IoError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close() {
    stream().flush();
    if (!stream()) throw cim::IoError("write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

struct Common {
  std::string out;
  std::uint64_t seed = 0;
  std::string threads = "1";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "Output CSV path (default stdout)");
  cmd->add_option("--seed", c.seed, "Base random seed");
  cmd->add_option("--threads", c.threads, "Worker threads: N or auto")->envname("CIM_STEADY_THREADS");
}

struct Integration {
  double dt = 0.002;
  long long steps = 30000;
  long long burn_in = 10000;
  long long trajectories = 8;
  std::string init = "vacuum";
  double init_amplitude = 0.0;

  cim::IntegrationConfig config(std::uint64_t seed) const {
    cim::IntegrationConfig c;
    c.dt = dt;
    c.steps = steps;
    c.burn_in = burn_in;
    c.trajectories = trajectories;
    c.seed = seed;
    c.init = parse_init(init);
    c.init_amplitude = init_amplitude;
    return c;
  }
};

void add_integration(CLI::App* cmd, Integration& in) {
  cmd->add_option("--dt", in.dt, "Time step in tau");
  cmd->add_option("--steps", in.steps, "Steps per trajectory");
  cmd->add_option("--burn-in", in.burn_in, "Steps discarded before measuring");
  cmd->add_option("--trajectories", in.trajectories, "Independent trajectories");
  cmd->add_option("--init", in.init, "Initial condition: vacuum or uniform");
  cmd->add_option("--init-amplitude", in.init_amplitude, "Half-width of the uniform start");
}

void write_saddle(const cim::MeanFieldParams& mf, cim::ProblemKind kind, bool closed_form, std::ostream& out) {
  using cim::format_shortest;
  if (closed_form) {
    out << "branch,m_sq,stable,region,q_h\n";
    for (const auto& b : cim::g_zero_branches(mf, kind)) {
      out << cim::to_string(b.branch) << ',' << (b.m_sq ? format_shortest(*b.m_sq) : "complex") << ','
          << (b.stable ? 1 : 0) << ",\"" << b.region << "\"," << format_shortest(b.q_h) << '\n';
    }
    return;
  }
  const auto outcome = cim::solve(mf, kind);
  cim::SweepSpec spec;  // header/row formatting only
  spec.kind = kind;
  out << cim::sweep_csv_header(spec) << '\n';
  cim::SweepRow row;
  row.params = mf;
  row.status = outcome.status;
  if (outcome.roots.empty()) {
    out << cim::sweep_csv_row(spec, row) << '\n';
  }
  for (const auto& r : outcome.roots) {
    row.root = r;
    out << cim::sweep_csv_row(spec, row) << '\n';
  }
  if (outcome.status == cim::SolveStatus::Failed) throw cim::NumericalError(outcome.message, 0);
}

cim::IsingProblem build_problem(const std::string& family, const std::string& path, std::size_t n, double J,
                                double h0, std::uint64_t seed) {
  if (family == "ferro") return cim::make_ferro(n, J);
  if (family == "ferro-random-field") return cim::make_ferro_random_field(n, J, h0, seed);
  if (family == "file") {
    if (path.empty()) throw cim::InvalidInput("--problem is required with --family file");
    return cim::load_problem(path);
  }
  throw cim::InvalidInput("family must be ferro, ferro-random-field or file");
}

int run(int argc, char** argv) {
  CLI::App app{"Steady-state and mean-field analysis of coherent Ising machine networks", "cim_steady"};
  app.set_config("--config", "", "Read options from a TOML/INI file; flags override it");
  app.require_subcommand(1);

  Common common;
  Integration integ;
  double p = 1.0, xiJ = 0.0, xi = 0.0, g = 0.01, h0_over_J = 0.0, J = 1.0, h0 = 0.0;
  std::string kind = "no-field";

  // saddle
  auto* saddle = app.add_subcommand("saddle", "Solve the symmetric saddle point at one parameter set");
  bool closed_form = false;
  add_common(saddle, common);
  saddle->add_option("--p", p, "Pump rate")->required();
  saddle->add_option("--xiJ", xiJ, "Product xi*J");
  saddle->add_option("--g", g, "Noise strength");
  saddle->add_option("--h0-over-J", h0_over_J, "Random-field amplitude h0/J");
  saddle->add_option("--kind", kind, "no-field or random-field");
  saddle->add_flag("--closed-form", closed_form, "Print the g = 0 closed-form branches instead");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid sweep over (p, xiJ, g, h0_over_J)");
  std::string axis1, axis2, mode = "saddle", gnuplot, plot_column = "m";
  std::vector<std::string> fixed;
  std::size_t n = 200;
  add_common(sweep, common);
  add_integration(sweep, integ);
  sweep->add_option("--axis1", axis1, "name:start:stop:count")->required();
  sweep->add_option("--axis2", axis2, "name:start:stop:count");
  sweep->add_option("--fixed", fixed, "name=value (repeatable)");
  sweep->add_option("--mode", mode, "saddle, ensemble or both");
  sweep->add_option("--kind", kind, "no-field or random-field");
  sweep->add_option("--n", n, "Network size for ensemble points");
  sweep->add_option("--gnuplot", gnuplot, "Also write a gnuplot script to this path");
  sweep->add_option("--plot-column", plot_column, "Column plotted by the gnuplot script");

  // field-curve
  auto* field = app.add_subcommand("field-curve", "m_sigma against h0/(mJ) with random fields");
  std::string h0_grid = "0:0.2:81";
  add_common(field, common);
  add_integration(field, integ);
  field->add_option("--p", p, "Pump rate")->required();
  field->add_option("--xi", xi, "Injection strength")->required();
  field->add_option("--J", J, "Coupling scale");
  field->add_option("--g", g, "Noise strength");
  field->add_option("--h0", h0_grid, "h0 grid start:stop:count");
  field->add_option("--mode", mode, "saddle, ensemble or both");
  field->add_option("--n", n, "Network size for ensemble points");
  field->add_option("--gnuplot", gnuplot, "Also write a gnuplot script to this path");
  field->add_option("--plot-column", plot_column, "Column plotted by the gnuplot script");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Integrate the SDE ensemble");
  std::string family = "ferro", problem_path, trajectory_out;
  long long stride = 100;
  add_common(simulate, common);
  add_integration(simulate, integ);
  simulate->add_option("--p", p, "Pump rate")->required();
  simulate->add_option("--xi", xi, "Injection strength");
  simulate->add_option("--g", g, "Noise strength");
  simulate->add_option("--family", family, "ferro, ferro-random-field or file");
  simulate->add_option("--problem", problem_path, "Problem file for --family file");
  simulate->add_option("--n", n, "Network size");
  simulate->add_option("--J", J, "Coupling scale");
  simulate->add_option("--h0", h0, "Random-field amplitude");
  simulate->add_option("--trajectory-out", trajectory_out, "Dump trajectory 0 as tau,j,mu,nu");
  simulate->add_option("--stride", stride, "Steps between dumped states");

  // crossval
  auto* crossval = app.add_subcommand("crossval", "Compare the SDE ensemble with the saddle point");
  double z_limit = 4.0;
  add_common(crossval, common);
  add_integration(crossval, integ);
  crossval->add_option("--p", p, "Pump rate")->required();
  crossval->add_option("--xiJ", xiJ, "Product xi*J");
  crossval->add_option("--g", g, "Noise strength");
  crossval->add_option("--h0-over-J", h0_over_J, "Random-field amplitude h0/J");
  crossval->add_option("--n", n, "Network size");
  crossval->add_option("--z-limit", z_limit, "Pass threshold on |z|");

  // db-check
  auto* db = app.add_subcommand("db-check", "Detailed-balance violation along a trajectory");
  std::vector<double> xi_scan;
  std::string scan_out;
  add_common(db, common);
  add_integration(db, integ);
  db->add_option("--p", p, "Pump rate")->required();
  db->add_option("--xi", xi, "Injection strength");
  db->add_option("--g", g, "Noise strength");
  db->add_option("--family", family, "ferro, ferro-random-field or file");
  db->add_option("--problem", problem_path, "Problem file for --family file");
  db->add_option("--n", n, "Network size");
  db->add_option("--J", J, "Coupling scale");
  db->add_option("--h0", h0, "Random-field amplitude");
  db->add_option("--stride", stride, "Steps between evaluated states");
  db->add_option("--xi-scan", xi_scan, "Re-evaluate the max gap at these xi values");
  db->add_option("--scan-out", scan_out, "CSV path for the xi scan (default stderr)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInput;
  }

  const unsigned threads = parse_threads(common.threads);

  if (*saddle) {
    const auto mf = cim::MeanFieldParams::from_products(p, xiJ, g, h0_over_J);
    Output out(common.out);
    write_saddle(mf, parse_kind(kind), closed_form, out.stream());
    out.close();
    return kOk;
  }

  if (*sweep || *field) {
    cim::SweepSpec spec;
    if (*sweep) {
      spec.axis1 = parse_axis(axis1);
      if (!axis2.empty()) spec.axis2 = parse_axis(axis2);
      for (const auto& f : fixed) {
        const auto kv = split(f, '=');
        if (kv.size() != 2) throw cim::InvalidInput("--fixed expects name=value, got '" + f + "'");
        spec.fixed[kv[0]] = parse_number(kv[1], "--fixed");
      }
      spec.kind = parse_kind(kind);
    } else {
      if (!(J > 0.0)) throw cim::InvalidInput("--J must be positive");
      spec.axis1.name = "h0_over_J";
      for (double h : parse_grid(h0_grid)) spec.axis1.values.push_back(h / J);
      spec.fixed = {{"p", p}, {"xiJ", xi * J}, {"g", g}};
      spec.kind = cim::ProblemKind::RandomField;
      spec.field_curve = true;
    }
    spec.mode = cim::parse_sweep_mode(mode);
    spec.seed = common.seed;
    spec.threads = threads;
    spec.ensemble.n = n;
    spec.ensemble.integration = integ.config(common.seed);
    spec.validate();
    Output out(common.out);
    const auto result = cim::run_sweep(spec, &out.stream());
    out.close();
    if (!gnuplot.empty()) {
      std::ofstream gp(gnuplot);
      gp << cim::gnuplot_script(spec, common.out.empty() ? "sweep.csv" : common.out, plot_column,
                                std::filesystem::path(gnuplot).replace_extension(".png"));
      if (!gp) throw cim::IoError("cannot write '" + gnuplot + "'");
    }
    if (result.failed_count() > 0) {
      std::cerr << result.failed_count() << " grid point(s) failed\n";
      return kNumericalFailure;
    }
    return kOk;
  }

  if (*simulate) {
    const auto problem = build_problem(family, problem_path, n, J, h0, common.seed);
    const cim::ModelParams params{p, xi, g};
    const auto config = integ.config(common.seed);
    Output out(common.out);
    const auto obs = cim::run_ensemble(problem, params, config, threads);
    out.stream() << cim::ensemble_csv_header() << '\n'
                 << cim::ensemble_csv_row(cim::MeanFieldParams::from_products(p, xi * J, g), problem.size(), obs)
                 << '\n';
    out.close();
    if (!trajectory_out.empty()) {
      std::vector<cim::NetworkState> states;
      cim::simulate_trajectory(problem, params, config, 0, stride,
                               [&](long long, long long, const cim::NetworkState& s) { states.push_back(s); });
      std::ofstream traj(trajectory_out, std::ios::binary);
      if (!traj) throw cim::IoError("cannot open '" + trajectory_out + "'");
      cim::write_trajectory_csv(states, traj);
    }
    return kOk;
  }

  if (*crossval) {
    const auto mf = cim::MeanFieldParams::from_products(p, xiJ, g, h0_over_J);
    const auto kind_used = h0_over_J > 0.0 ? cim::ProblemKind::RandomField : cim::ProblemKind::NoField;
    const auto table = cim::run_crossvalidation(mf, kind_used, n, integ.config(common.seed), threads, z_limit);
    Output out(common.out);
    cim::write_crossval_csv(table, out.stream());
    out.close();
    return kOk;
  }

  if (*db) {
    const auto problem = build_problem(family, problem_path, n, J, h0, common.seed);
    const cim::ModelParams params{p, xi, g};
    auto config = integ.config(common.seed);
    config.trajectories = 1;
    const auto diag = cim::run_db_diagnostic(problem, params, config, stride);
    Output out(common.out);
    cim::write_db_csv(diag.last, out.stream());
    out.close();
    if (!xi_scan.empty()) {
      std::ofstream scan_file;
      std::ostream* scan = &std::cerr;
      if (!scan_out.empty()) {
        scan_file.open(scan_out, std::ios::binary);
        if (!scan_file) throw cim::IoError("cannot open '" + scan_out + "'");
        scan = &scan_file;
      }
      *scan << "xi,max_abs_gap\n";
      for (double x : xi_scan) {
        *scan << cim::format_shortest(x) << ',' << cim::format_shortest(cim::max_gap_at_xi(diag, problem, params, x))
              << '\n';
      }
      if (!*scan) throw cim::IoError("failed writing xi scan");
    }
    return kOk;
  }
  return kInvalidInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const cim::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const cim::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const cim::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const cim::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

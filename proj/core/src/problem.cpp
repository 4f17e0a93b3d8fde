#include "cim/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

#include "cim/format.hpp"
#include "cim/rng.hpp"

namespace cim {

IsingProblem::IsingProblem(Eigen::MatrixXd couplings, Eigen::VectorXd fields)
    : couplings_(std::move(couplings)), fields_(std::move(fields)) {
  const Eigen::Index n = fields_.size();
  if (n < 1) throw InvalidInput("problem must have at least one spin");
  if (couplings_.rows() != n || couplings_.cols() != n) {
    throw InvalidInput("coupling matrix is " + std::to_string(couplings_.rows()) + "x" +
                       std::to_string(couplings_.cols()) + " but there are " +
                       std::to_string(n) + " fields");
  }
  if (!couplings_.allFinite() || !fields_.allFinite()) {
    throw InvalidInput("couplings and fields must be finite");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (couplings_(j, j) != 0.0) {
      throw InvariantViolation("nonzero diagonal", "J(" + std::to_string(j + 1) + "," +
                                                       std::to_string(j + 1) + ") must be 0");
    }
    for (Eigen::Index l = j + 1; l < n; ++l) {
      if (couplings_(j, l) != couplings_(l, j)) {
        throw InvariantViolation("asymmetry", "J(" + std::to_string(j + 1) + "," +
                                                  std::to_string(l + 1) + ") != J(" +
                                                  std::to_string(l + 1) + "," +
                                                  std::to_string(j + 1) + ")");
      }
    }
  }

  const Eigen::VectorXd norms = couplings_.cwiseAbs().rowwise().sum();
  const double hi = norms.maxCoeff();
  const double lo = norms.minCoeff();
  row_norm_spread_ = hi > 0.0 ? (hi - lo) / hi : 0.0;
  row_norm_uniform_ = row_norm_spread_ <= kRowNormTolerance;

  if (n >= 2) {
    const double c = couplings_(0, 1);
    bool uniform = true;
    for (Eigen::Index j = 0; j < n && uniform; ++j) {
      for (Eigen::Index l = 0; l < n; ++l) {
        if (l != j && couplings_(j, l) != c) {
          uniform = false;
          break;
        }
      }
    }
    if (uniform) uniform_coupling_ = c;
  }
}

void IsingProblem::coupling_field(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  if (x.size() != fields_.size()) {
    throw InvalidInput("state has " + std::to_string(x.size()) + " entries, problem has " +
                       std::to_string(fields_.size()));
  }
  if (uniform_coupling_) {
    const double c = *uniform_coupling_;
    const double total = x.sum();
    out = c * (Eigen::VectorXd::Constant(x.size(), total) - x);
  } else {
    out.noalias() = couplings_ * x;
  }
}

double IsingProblem::ising_energy(std::span<const int> spins) const {
  if (spins.size() != size()) throw InvalidInput("spin vector has the wrong length");
  const auto n = static_cast<Eigen::Index>(size());
  double e = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = j + 1; l < n; ++l) {
      e -= couplings_(j, l) * spins[static_cast<std::size_t>(j)] * spins[static_cast<std::size_t>(l)];
    }
    e -= fields_(j) * spins[static_cast<std::size_t>(j)];
  }
  return e;
}

IsingProblem make_ferro(std::size_t n, double J) {
  if (n < 2) throw InvalidInput("ferromagnet needs n >= 2, got " + std::to_string(n));
  if (!(J > 0.0) || !std::isfinite(J)) throw InvalidInput("ferromagnet needs J > 0");
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd couplings = Eigen::MatrixXd::Constant(size, size, J / (2.0 * static_cast<double>(n)));
  couplings.diagonal().setZero();
  return IsingProblem(std::move(couplings), Eigen::VectorXd::Zero(size));
}

IsingProblem make_ferro_random_field(std::size_t n, double J, double h0, std::uint64_t seed) {
  if (!(h0 >= 0.0) || !std::isfinite(h0)) throw InvalidInput("random-field amplitude needs h0 >= 0");
  IsingProblem base = make_ferro(n, J);
  Eigen::VectorXd fields(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const bool negative = (counter_draw(seed, j) >> 63) != 0;
    fields(static_cast<Eigen::Index>(j)) = negative ? -h0 : h0;
  }
  return IsingProblem(base.couplings(), std::move(fields));
}

IsingProblem make_problem(const ProblemFamily& family, std::size_t n) {
  switch (family.tag) {
    case FamilyTag::FullyConnectedFerro:
      return make_ferro(n, family.J);
    case FamilyTag::FullyConnectedFerroRandomField:
      return make_ferro_random_field(n, family.J, family.h0, family.seed);
    case FamilyTag::FromFile:
      return load_problem(family.path);
  }
  throw InvalidInput("unknown problem family");
}

namespace {

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

long long parse_index(std::string_view tok, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(tok) + "'");
  }
  return v;
}

double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(line, "expected a finite number, got '" + std::string(tok) + "'");
  }
  return v;
}

struct Entry {
  double value;
  std::size_t line;
};

}  // namespace

IsingProblem parse_problem(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  long long n = -1;
  std::map<std::pair<long long, long long>, Entry> edges;
  std::map<long long, Entry> fields;

  auto check_site = [&](long long j, std::size_t line) {
    if (j < 1 || j > n) {
      throw ParseError(line, "site index " + std::to_string(j) + " outside 1.." + std::to_string(n));
    }
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_tokens(line);
    if (tokens.empty()) continue;

    if (n < 0) {
      if (tokens.size() != 1) throw ParseError(line_no, "first line must hold only N");
      n = parse_index(tokens[0], line_no);
      if (n < 1) throw ParseError(line_no, "N must be positive");
      continue;
    }
    if (tokens.size() == 3) {
      const long long j = parse_index(tokens[0], line_no);
      const long long l = parse_index(tokens[1], line_no);
      const double v = parse_real(tokens[2], line_no);
      check_site(j, line_no);
      check_site(l, line_no);
      if (j == l) throw ParseError(line_no, "self coupling " + std::to_string(j) + " is not allowed");
      auto [it, inserted] = edges.emplace(std::pair{j, l}, Entry{v, line_no});
      if (!inserted && it->second.value != v) {
        throw ParseError(line_no, "edge " + std::to_string(j) + " " + std::to_string(l) +
                                      " redefined with a different value");
      }
    } else if (tokens.size() == 2) {
      const long long j = parse_index(tokens[0], line_no);
      const double v = parse_real(tokens[1], line_no);
      check_site(j, line_no);
      auto [it, inserted] = fields.emplace(j, Entry{v, line_no});
      if (!inserted && it->second.value != v) {
        throw ParseError(line_no, "field " + std::to_string(j) + " redefined with a different value");
      }
    } else {
      throw ParseError(line_no, "expected 'j l J' or 'j h', got " + std::to_string(tokens.size()) +
                                    " tokens");
    }
  }
  if (n < 0) throw ParseError(std::max<std::size_t>(line_no, 1), "missing N");

  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd couplings = Eigen::MatrixXd::Zero(size, size);
  for (const auto& [key, entry] : edges) {
    const auto [j, l] = key;
    if (auto other = edges.find({l, j}); other != edges.end() && other->second.value != entry.value) {
      throw InvariantViolation("asymmetry", "J(" + std::to_string(j) + "," + std::to_string(l) +
                                                ") on line " + std::to_string(entry.line) +
                                                " differs from J(" + std::to_string(l) + "," +
                                                std::to_string(j) + ") on line " +
                                                std::to_string(other->second.line));
    }
    couplings(j - 1, l - 1) = entry.value;
    couplings(l - 1, j - 1) = entry.value;
  }
  Eigen::VectorXd h = Eigen::VectorXd::Zero(size);
  for (const auto& [j, entry] : fields) h(j - 1) = entry.value;

  IsingProblem problem(std::move(couplings), std::move(h));
  if (!problem.row_norm_uniform()) {
    throw InvariantViolation("nonuniform row norm",
                             "sum_l |J_jl| varies by a relative " +
                                 format_double(problem.row_norm_spread(), 6) + " across sites");
  }
  return problem;
}

IsingProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file " + path.string());
  return parse_problem(in);
}

void write_problem(const IsingProblem& problem, std::ostream& out) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  out << "# Ising problem: N, then 'j l J_jl' edges, then 'j h_j' fields\n";
  out << n << '\n';
  const auto& J = problem.couplings();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = j + 1; l < n; ++l) {
      if (J(j, l) != 0.0) out << (j + 1) << ' ' << (l + 1) << ' ' << format_double(J(j, l)) << '\n';
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    out << (j + 1) << ' ' << format_double(problem.fields()(j)) << '\n';
  }
}

void save_problem(const IsingProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write problem file " + path.string());
  write_problem(problem, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cim

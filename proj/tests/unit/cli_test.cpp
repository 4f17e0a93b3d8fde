#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const auto out_path = fs::temp_directory_path() / "cim_cli_stdout.txt";
  const std::string cmd = env + " " + CIM_STEADY_EXE + " " + args + " > " + out_path.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, SaddlePrintsRoots) {
  const auto r = run("saddle --p 1.2 --xiJ 0.2 --g 0.01");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("p,xiJ,g,h0_over_J,branch", 0), 0u);
  EXPECT_NE(r.out.find("m_finite"), std::string::npos);
}

TEST(Cli, ClosedForm) {
  const auto r = run("saddle --p 1.2 --xiJ 0.5 --closed-form");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("complex"), std::string::npos);
}

TEST(Cli, InvalidInputExitsOne) {
  EXPECT_EQ(run("sweep --axis1 q:0:1:3 --fixed xiJ=0 --fixed g=0.1").code, 1);
  EXPECT_EQ(run("saddle --p -1").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("saddle").code, 1);
}

TEST(Cli, FailedRowExitsTwo) {
  EXPECT_EQ(run("sweep --axis1 g:0:0.01:2 --fixed p=1.2 --fixed xiJ=0.2").code, 2);
}

TEST(Cli, UnwritableOutputExitsThree) {
  EXPECT_EQ(run("saddle --p 1.2 --xiJ 0.2 --out /nonexistent-dir/x.csv").code, 3);
}

TEST(Cli, SweepBytesIndependentOfThreads) {
  const auto dir = fs::temp_directory_path();
  const auto a = dir / "cim_cli_sweep_1.csv";
  const auto b = dir / "cim_cli_sweep_8.csv";
  const std::string common = "sweep --axis1 p:0:2:9 --axis2 xiJ:0:1:5 --fixed g=0.05 --seed 7 ";
  ASSERT_EQ(run(common + "--threads 1 --out " + a.string()).code, 0);
  ASSERT_EQ(run(common + "--out " + b.string(), "CIM_STEADY_THREADS=8").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = fs::temp_directory_path();
  const auto cfg = dir / "cim_cli.toml";
  {
    std::ofstream f(cfg);
    f << "[sweep]\naxis1 = \"p:0.5:2:2\"\nfixed = [\"xiJ=0\", \"g=0.01\"]\n";
  }
  const auto r = run("--config " + cfg.string() + " sweep");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\n2,0,0.01,"), std::string::npos);
  const auto o = run("--config " + cfg.string() + " sweep --axis1 p:0.5:1.5:2");
  EXPECT_NE(o.out.find("\n1.5,0,0.01,"), std::string::npos);
}

TEST(Cli, FieldCurveAndGnuplot) {
  const auto dir = fs::temp_directory_path();
  const auto csv = dir / "cim_cli_field.csv";
  const auto gp = dir / "cim_cli_field.gp";
  ASSERT_EQ(run("field-curve --p 1.1 --xi 0.2 --g 0.01 --h0 0:0.2:5 --plot-column m_sigma --out " + csv.string() +
                " --gnuplot " + gp.string())
                .code,
            0);
  EXPECT_NE(slurp(csv).find("h0_over_mJ"), std::string::npos);
  EXPECT_NE(slurp(gp).find("plot"), std::string::npos);
}

TEST(Cli, SimulateAndDbCheck) {
  const auto dir = fs::temp_directory_path();
  const auto traj = dir / "cim_cli_traj.csv";
  const auto sim = run("simulate --p 1.1 --xi 0.2 --g 0.1 --n 5 --steps 200 --burn-in 50 --trajectories 2 --stride 100 "
                       "--trajectory-out " + traj.string());
  EXPECT_EQ(sim.code, 0);
  EXPECT_EQ(sim.out.rfind("p,xiJ,g,N,m,q,m_sigma,se_m,se_q,se_msigma", 0), 0u);
  EXPECT_EQ(slurp(traj).rfind("tau,j,mu,nu", 0), 0u);
  const auto db = run("db-check --p 1.1 --xi 0.2 --g 0.1 --n 3 --steps 200 --burn-in 0 --stride 50");
  EXPECT_EQ(db.code, 0);
  EXPECT_EQ(db.out.rfind("j,l,lhs,rhs,gap", 0), 0u);
  EXPECT_NE(db.out.find("max_abs_gap,"), std::string::npos);
}

}  // namespace

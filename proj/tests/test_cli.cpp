#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PFRAC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pfrac_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run("run --nu 0.5"), 2);
  EXPECT_EQ(run("run --scenario moon"), 2);
  EXPECT_EQ(run("run --formulation q3"), 2);
  EXPECT_EQ(run("run --config /nonexistent/file.cfg"), 2);
  EXPECT_EQ(run("--bogus"), 2);
  const fs::path dir = fresh_dir("badcfg");
  std::ofstream(dir / "bad.cfg") << "colour = red\n";
  EXPECT_EQ(run("run --config " + (dir / "bad.cfg").string()), 2);
}

TEST(Cli, HelpSucceeds) { EXPECT_EQ(run("--help"), 0); }

TEST(Cli, ShortRunWritesOutputs) {
  const fs::path dir = fresh_dir("run");
  std::ofstream(dir / "small.cfg") << "base_subdivisions = 4\nrefinements = 0\ndt = 2e-3\nend_time = 4e-3\n";
  const fs::path out = dir / "out";
  ASSERT_EQ(run("run --config " + (dir / "small.cfg").string() + " --output-dir " + out.string() +
                " --snapshots 0.002"),
            0);
  const std::string csv = slurp(out / "shear_load_displacement.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,t,displacement_mm,Fx_kN,Fy_kN,Fx_deg_kN,Fy_deg_kN,newton_iters");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(out / "shear_newton.csv"));
  EXPECT_TRUE(fs::exists(out / "config.txt"));
  const nlohmann::json m = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(m["status"], "ok");
  EXPECT_TRUE(m["checksums"].contains("shear_load_displacement.csv"));
  bool vtk = false;
  for (const auto& e : fs::directory_iterator(out)) vtk = vtk || e.path().extension() == ".vtk";
  EXPECT_TRUE(vtk);
}

TEST(Cli, InfSupWritesTable) {
  const fs::path dir = fresh_dir("infsup");
  ASSERT_EQ(run("infsup --pairing both --sizes 2,4 --output-dir " + dir.string()), 0);
  const std::string csv = slurp(dir / "infsup.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

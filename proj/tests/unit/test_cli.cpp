#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/app.hpp"
#include "cli/manifest.hpp"
#include "test_support.hpp"

namespace aberray::cli {
namespace {

using testing::TempDir;

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "aberray");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Runs the installed binary with stderr captured to a file.
int run_binary(const std::string& args, const std::filesystem::path& err) {
  const std::string cmd = std::string(ABERRAY_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string lens_arg() { return testing::lens_path("lensnet_50mm_f2.8.lens").string(); }

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_args({}), 2);
  EXPECT_EQ(run_args({"frobnicate"}), 2);
  EXPECT_EQ(run_args({"trace", "--threads", "0"}), 2);
  EXPECT_EQ(run_args({"trace", "--spp", "many"}), 2);
  EXPECT_EQ(run_args({"repro", "fig12"}), 2);
}

TEST(Cli, HelpAndVersionExitWithZero) {
  EXPECT_EQ(run_args({"--help"}), 0);
  EXPECT_EQ(run_args({"--version"}), 0);
}

TEST(Cli, RuntimeErrorIsOneMachineReadableLine) {
  TempDir dir("cli_err");
  EXPECT_EQ(run_binary("trace --lens " + (dir / "nope.lens").string() + " --out " + dir.path().string(),
                       dir / "err.txt"),
            1);
  const std::string err = slurp(dir / "err.txt");
  EXPECT_EQ(err.rfind("error\truntime\t", 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);

  EXPECT_EQ(run_binary("psf --lens " + lens_arg() + " --point 9,0,1.0 --out " + dir.path().string(),
                       dir / "err2.txt"),
            1);
  EXPECT_EQ(slurp(dir / "err2.txt").rfind("error\tvalidation\t", 0), 0u);
}

TEST(Cli, NoArgumentsPrintsUsage) {
  TempDir dir("cli_usage");
  EXPECT_EQ(run_binary("", dir / "err.txt"), 2);
  EXPECT_NE(slurp(dir / "err.txt").find("Usage"), std::string::npos);
}

TEST(Cli, PsfWritesKernelSpotAndManifest) {
  TempDir dir("cli_psf");
  ASSERT_EQ(run_args({"psf", "--lens", lens_arg(), "--focus", "1.5", "--point", "0,0,1.5", "--spp", "2048",
                      "--out", dir.path().string()}),
            0);
  for (const char* f : {"psf.psfg", "psf.csv", "psf_spot.csv", "psf.manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const RunManifest m = read_manifest(dir / "psf.manifest.json");
  EXPECT_EQ(m.subcommand, "psf");
  EXPECT_EQ(m.tool_version, tool_version());
  ASSERT_FALSE(m.outputs.empty());
  for (const auto& [path, digest] : m.outputs) EXPECT_EQ(sha256_file(path), digest) << path;
  ASSERT_EQ(m.inputs.size(), 1u);
}

TEST(Cli, TraceIsIndependentOfThreadCount) {
  TempDir a("cli_t1"), b("cli_t4");
  const std::vector<std::string> base = {"trace", "--lens", lens_arg(), "--focus", "1.5", "--point", "0.2,0.1,1.2",
                                         "--spp", "512", "--seed", "3"};
  auto with = [&](const TempDir& d, const char* threads) {
    auto args = base;
    args.insert(args.end(), {"--threads", threads, "--out", d.path().string()});
    return run_args(args);
  };
  ASSERT_EQ(with(a, "1"), 0);
  ASSERT_EQ(with(b, "4"), 0);
  EXPECT_EQ(sha256_file(a / "spot.csv"), sha256_file(b / "spot.csv"));
}

TEST(Cli, SyntheticRenderChainRuns) {
  TempDir dir("cli_chain");
  const std::string out = dir.path().string();
  ASSERT_EQ(run_args({"render-stack", "--lens", lens_arg(), "--synthetic", "--width", "64", "--height", "48",
                      "--provider", "gaussian", "--stack-size", "4", "--out", out}),
            0);
  ASSERT_EQ(run_args({"estimate-depth", "--stack", (dir / "stack.json").string(), "--out", out}), 0);
  ASSERT_EQ(run_args({"eval", "--pred", (dir / "depth.pfm").string(), "--gt", (dir / "depth_gt.pfm").string(),
                      "--out", out}),
            0);
  ASSERT_EQ(run_args({"error-map", "--pred", (dir / "depth.pfm").string(), "--gt", (dir / "depth_gt.pfm").string(),
                      "--out", out}),
            0);
  for (const char* f : {"frame_00.png", "frame_03.png", "aif_gt.png", "depth.pfm", "aif.png", "eval.csv",
                        "error_map.pfm", "render-stack.manifest.json", "estimate-depth.manifest.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
}

TEST(Manifest, JsonRoundTripAndDigest) {
  TempDir dir("manifest");
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  RunManifest m;
  m.subcommand = "trace";
  m.seed = 77;
  m.tool_version = tool_version();
  m.config = {{"spp", 10}, {"focus_m", 1.5}};
  m.add_input(dir / "abc.txt");
  m.add_output(dir / "abc.txt");
  write_manifest(dir / "m.json", m);
  EXPECT_FALSE(std::filesystem::exists(dir / "m.json.tmp"));
  const RunManifest back = read_manifest(dir / "m.json");
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.outputs.front().second, sha256_file(dir / "abc.txt"));
}

}  // namespace
}  // namespace aberray::cli

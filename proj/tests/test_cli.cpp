#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "rainmamba/cli.hpp"
#include "rainmamba/frame_io.hpp"
#include "rainmamba/tensor_io.hpp"

using namespace rainmamba;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rainmamba");
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("rainmamba_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& leaf) const { return (path / leaf).string(); }
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("scan gen writes a csv and a manifest") {
  TempDir tmp("gen");
  const auto r = run({"scan", "gen", "--dims", "4,8,8", "--curve", "hilbert", "--direction", "time", "--out", tmp / "o.csv"});
  REQUIRE(r.code == 0);
  const auto csv = io::read_file(tmp / "o.csv");
  CHECK(csv.rfind("position,t,y,x\n", 0) == 0);
  CHECK(count_lines(csv) == 257);
  CHECK_FALSE(fs::exists(tmp / "o.csv.tmp"));
  const auto m = json::parse(io::read_file(tmp / "o.csv.manifest.json"));
  CHECK(m["schema_version"] == 1);
  CHECK(m["command"] == "scan gen");
  CHECK(m["outputs"][0]["checksum"] == cli::file_checksum(tmp / "o.csv"));
}

TEST_CASE("scan gen matches the golden orders") {
  TempDir tmp("golden");
  const fs::path golden = RAINMAMBA_GOLDEN_DIR;
  REQUIRE(run({"scan", "gen", "--dims", "2,4,4", "--out", tmp / "h.csv"}).code == 0);
  CHECK(io::read_file(tmp / "h.csv") == io::read_file(golden / "hilbert_2x4x4_time.csv"));
  REQUIRE(run({"scan", "gen", "--dims", "3,5,6", "--direction", "width", "--out", tmp / "h.rmpm"}).code == 0);
  CHECK(io::read_file(tmp / "h.rmpm") == io::read_file(golden / "hilbert_3x5x6_width.rmpm"));
  const auto perm = io::decode_rmpm(io::read_file(tmp / "h.rmpm"));
  CHECK(perm.dims == std::vector<std::uint32_t>{3, 5, 6});
  CHECK(perm.perm.size() == 90);
}

TEST_CASE("scan analyze reports both orders") {
  const auto r = run({"scan", "analyze", "--dims", "4,16,16"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["kind"] == "hilbert3d");
  CHECK(j["zigzag_reference"]["mean_index_gap_spatial"] == 8.5);
  CHECK(j["mean_index_gap_all"].get<double>() < j["zigzag_reference"]["mean_index_gap_all"].get<double>());
  CHECK(j["histogram"][0].size() == 3);
  CHECK(run({"scan", "analyze", "--dims", "8,64,160"}).code == 2);
  CHECK(run({"scan", "analyze", "--dims", "8,64,160", "--mode", "sampled", "--samples", "100"}).code == 0);
}

TEST_CASE("usage errors exit 1 with usage text") {
  auto r = run({"scan", "gen", "--dims", "2,2,2", "--out", "x.csv", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"scan", "gen", "--dims", "2,2,2", "--out", "x.csv", "--curve", "peano"}).code == 1);
  r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("derain") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
  TempDir tmp("data");
  CHECK(run({"scan", "gen", "--dims", "4,8", "--out", tmp / "o.csv"}).code == 2);
  const auto r = run({"derain", "--input", tmp / "missing", "--output", tmp / "out"});
  CHECK(r.code == 2);
  CHECK(r.err.find("error:") == 0);
}

TEST_CASE("ssm check json") {
  const auto r = run({"ssm", "check", "--json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["pass"] == true);
  CHECK(j["equivalence_max_rel_err"].get<double>() <= 1e-10);
  CHECK(j["gradient_max_rel_err"].get<double>() <= 1e-6);
  CHECK(run({"ssm", "check"}).out.find("overall: pass") != std::string::npos);
}

TEST_CASE("config files") {
  const auto kv = cli::parse_key_values("# model\nchannels = 8\n\nn2=0  # no coarse stage\ndirection=width\n",
                                        cli::kModelConfigKeys);
  const auto cfg = cli::model_config_from(kv);
  CHECK(cfg.channels == 8);
  CHECK(cfg.cfm.n2 == 0);
  CHECK(cfg.cfm.direction == sfc::Direction::WidthFirst);
  CHECK_THROWS_WITH_AS(cli::parse_key_values("chanels=8\n", cli::kModelConfigKeys), doctest::Contains("unknown key"), Error);
  CHECK_THROWS_AS(cli::parse_key_values("channels\n", cli::kModelConfigKeys), Error);
  CHECK_THROWS_AS(cli::parse_key_values("n1=1\nn1=2\n", cli::kModelConfigKeys), Error);
  CHECK_THROWS_AS(cli::model_config_from({{"n1", "two"}}), Error);
}

TEST_CASE("derain is reproducible and writes a manifest") {
  TempDir tmp("derain");
  REQUIRE(run({"synth", "--output", tmp / "clip", "--frames", "2", "--height", "32", "--width", "32", "--seed", "4"}).code == 0);
  io::write_file_atomic(tmp / "small.cfg", "channels=4\nn1=1\nn2=1\nn3=1\n");
  for (const char* out : {"a", "b"})
    REQUIRE(run({"derain", "--input", tmp / "clip/rainy", "--seed", "9", "--config", tmp / "small.cfg", "--output", tmp / out}).code == 0);
  for (const char* f : {"frame_00000.ppm", "frame_00001.ppm"})
    CHECK(io::read_file(tmp / (std::string("a/") + f)) == io::read_file(tmp / (std::string("b/") + f)));
  const auto m = json::parse(io::read_file(tmp / "a/manifest.json"));
  CHECK(m["seed"] == 9);
  CHECK(m["config"]["channels"] == "4");
  CHECK(m["outputs"].size() == 2);
  CHECK(m["inputs"].size() == 3);
  CHECK(io::read_frames(tmp / "a").same_shape(io::read_frames(tmp / "clip/rainy")));

  io::write_file_atomic(tmp / "bad.cfg", "channels=4\nlayers=3\n");
  CHECK(run({"derain", "--input", tmp / "clip/rainy", "--config", tmp / "bad.cfg", "--output", tmp / "c"}).code == 2);
}

TEST_CASE("metrics on identical inputs") {
  TempDir tmp("metrics");
  REQUIRE(run({"synth", "--output", tmp / "clip", "--frames", "2", "--height", "16", "--width", "16"}).code == 0);
  const auto r = run({"metrics", "--pred", tmp / "clip/clean", "--gt", tmp / "clip/clean", "--out", tmp / "m.json"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(io::read_file(tmp / "m.json"));
  CHECK(j["mean_psnr"] == "inf");
  CHECK(j["mean_ssim"] == 1.0);
  CHECK(j["frames"].size() == 2);
  CHECK(fs::exists(tmp / "m.json.manifest.json"));
  const auto luma = json::parse(run({"metrics", "--pred", tmp / "clip/rainy", "--gt", tmp / "clip/clean", "--luma"}).out);
  CHECK(luma["space"] == "luma");
  CHECK(luma["mean_psnr"].is_number());
}

TEST_CASE("contrastive trace and sample") {
  TempDir tmp("contrastive");
  REQUIRE(run({"contrastive", "trace", "--m", "10", "--out", tmp / "t.csv"}).code == 0);
  const auto csv = io::read_file(tmp / "t.csv");
  CHECK(count_lines(csv) == 12);
  CHECK(csv.rfind("e,d,p\n0,64,2\n", 0) == 0);
  CHECK(csv.find("\n10,32,8\n") != std::string::npos);
  CHECK(run({"contrastive", "trace", "--m", "2.5", "--out", tmp / "u.csv"}).code == 2);

  REQUIRE(run({"synth", "--output", tmp / "clip", "--frames", "3", "--height", "64", "--width", "64", "--seed", "2"}).code == 0);
  const std::vector<std::string> args{"contrastive", "sample", "--rainy", tmp / "clip/rainy", "--clean", tmp / "clip/clean",
                                      "--seed", "5", "--step", "1000"};
  const auto a = run(args), b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = json::parse(a.out);
  CHECK(j["d"] == 32.0);
  CHECK(j["triplets"].size() > 0);
  CHECK(j["triplets"][0]["negative"].contains("augmentations"));
}

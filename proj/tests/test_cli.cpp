#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "test_util.hpp"
#include "thlnet/checkpoint.hpp"
#include "thlnet/model.hpp"
#include "thlnet/wav.hpp"

using namespace thl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(THLNET_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("thlnet_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

void write_tiny_config(const std::string& path, const std::string& training = "{}") {
  std::ofstream(path) << R"({"model": )" << model_config_to_json(tiny_model_config()) << R"(, "training": )"
                      << training << "}";
}

}  // namespace

TEST_CASE("train with zero epochs writes the initialization") {
  Workspace ws("train0");
  write_tiny_config(ws / "tiny.json");
  const Run r = run("train --config " + ws / "tiny.json" + " --epochs 0 --seed 3 --out " + ws / "out");
  INFO(r.output);
  REQUIRE(r.code == 0);
  const Thlnet init(tiny_model_config(), 3);
  CHECK(encode_checkpoint(load_checkpoint(ws / "out/model.thln")) == encode_checkpoint(make_checkpoint(init)));
  CHECK(slurp(ws / "out/loss.csv") == "step,epoch,lr,l_c,l_f,l_total\n");
}

TEST_CASE("two identical training runs write identical logs") {
  Workspace ws("train2");
  write_tiny_config(ws / "tiny.json");
  const std::string args = "train --config " + ws / "tiny.json" + " --epochs 1 --items 2 --duration 0.25 --out ";
  const Run a = run(args + ws / "a"), b = run(args + ws / "b");
  INFO(a.output);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const std::string csv = slurp(ws / "a/loss.csv");
  CHECK(csv == slurp(ws / "b/loss.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(slurp(ws / "a/model.thln") == slurp(ws / "b/model.thln"));
}

TEST_CASE("invalid training config exits with the config code and names the field") {
  Workspace ws("badcfg");
  write_tiny_config(ws / "bad.json", R"({"clip_norm": -1})");
  const Run r = run("train --config " + ws / "bad.json" + " --out " + ws / "out");
  CHECK(r.code == 11);
  CHECK(r.output.find("training.clip_norm") != std::string::npos);
}

TEST_CASE("enhance: offline keeps the length, stream agrees with offline") {
  Workspace ws("enhance");
  const Thlnet model(tiny_model_config(), 4);
  save_checkpoint(ws / "m.thln", model);
  Waveform w;
  w.samples = test::random_tensor({16000}, 5, -0.5, 0.5).storage();
  write_wav(ws / "in.wav", w);

  const Run off = run("enhance --input " + ws / "in.wav" + " --output " + ws / "off.wav" + " --checkpoint " +
                      ws / "m.thln");
  INFO(off.output);
  REQUIRE(off.code == 0);
  const Run on = run("enhance --mode stream --input " + ws / "in.wav" + " --output " + ws / "on.wav" +
                     " --checkpoint " + ws / "m.thln" + " --reference " + ws / "in.wav");
  REQUIRE(on.code == 0);
  CHECK(on.output.find("si-sdr") != std::string::npos);
  const Waveform a = read_wav(ws / "off.wav"), b = read_wav(ws / "on.wav");
  CHECK(a.size() == w.size());
  REQUIRE(b.size() == a.size());
  CHECK(test::max_abs_diff(a.samples, b.samples) <= 1e-4);
}

TEST_CASE("enhance with a missing checkpoint names the path") {
  Workspace ws("nockpt");
  Waveform w;
  w.samples.assign(1000, 0.0f);
  write_wav(ws / "in.wav", w);
  const Run r = run("enhance --input " + ws / "in.wav" + " --output " + ws / "o.wav" + " --checkpoint " +
                    ws / "missing.thln");
  CHECK(r.code == 13);
  CHECK(r.output.find("missing.thln") != std::string::npos);
}

TEST_CASE("profile presets") {
  const Run ref = run("profile");
  REQUIRE(ref.code == 0);
  CHECK(ref.output.find("coarse.enc0") != std::string::npos);
  CHECK(ref.output.find("fine.") != std::string::npos);
  const Run coarse = run("profile --preset coarse");
  REQUIRE(coarse.code == 0);
  CHECK(coarse.output.find("fine.") == std::string::npos);
  const Run empty = run("profile --preset empty --json");
  REQUIRE(empty.code == 0);
  CHECK(empty.output.find("\"total_params\": 0") != std::string::npos);
}

TEST_CASE("gradcheck passes, and a corrupted op is reported") {
  const Run ok = run("gradcheck");
  INFO(ok.output);
  CHECK(ok.code == 0);
  const Run bad = run("gradcheck --corrupt-op gru");
  CHECK(bad.code == 1);
  CHECK(bad.output.find("failed: gru") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("profile --no-such-flag").code == 2);
  CHECK(run("enhance --input /nonexistent.wav --output x.wav --checkpoint y").code == 2);
}

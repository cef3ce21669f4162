#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "agewave/image_io.hpp"
#include "agewave/networks.hpp"
#include "agewave/run_config.hpp"
#include "support.hpp"

using namespace agewave;
using agewave::testing::ScratchDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int exit_code = -1;
  std::string output;
};

Run run_cli(const std::string& args) {
  const std::string cmd = std::string(AGEWAVE_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::size_t count_files(const fs::path& dir, const std::string& extension) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == extension) ++n;
  return n;
}

fs::path only_subdir(const fs::path& root, const std::string& prefix) {
  fs::path found;
  for (const auto& e : fs::directory_iterator(root))
    if (e.path().filename().string().rfind(prefix, 0) == 0) {
      REQUIRE(found.empty());
      found = e.path();
    }
  REQUIRE_FALSE(found.empty());
  return found;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("run config: defaults, overrides and unknown keys") {
  RunConfig c;
  CHECK(c.get("train.batch_size") == "16");
  CHECK(c.get_double("train.lr") == 1e-4);
  CHECK(c.get("train.pixel_critic_period") == "5");
  CHECK(c.get("loss.identity_seed") == "7");
  CHECK(c.get("wpt.family") == "haar");
  c.apply("train.batch_size = 8");
  CHECK(c.get_u64("train.batch_size") == 8);
  CHECK_THROWS_WITH(c.apply("train.bogus=1"), doctest::Contains("unknown config key"));
  CHECK_THROWS(c.apply("no equals sign"));
  CHECK_THROWS_WITH(c.get("data.dir"), doctest::Contains("required"));
  CHECK_THROWS_WITH(c.get("synth.resolution"), doctest::Contains("required"));
}

TEST_CASE("run config: echo reloads to the same hash") {
  ScratchDir dir("run-config");
  RunConfig c;
  c.set("seed", "9");
  c.set("data.dir", "/tmp/x");
  c.set("model.wpt_levels", "1,3");
  {
    std::ofstream out(dir.path() / "echo.cfg");
    out << "# comment\n\n" << c.echo();
  }
  RunConfig back;
  back.load_file(dir.path() / "echo.cfg");
  CHECK(back.hash() == c.hash());
  CHECK(back.values() == c.values());
  RunConfig other = back;
  other.set("seed", "10");
  CHECK(other.hash() != c.hash());

  {
    std::ofstream out(dir.path() / "bad.cfg");
    out << "seed=1\nmodel.nope=3\n";
  }
  RunConfig bad;
  CHECK_THROWS_WITH(bad.load_file(dir.path() / "bad.cfg"), doctest::Contains("bad.cfg:2"));
}

TEST_CASE("run config: TrainConfig and SyntheticAgingSpec from keys") {
  RunConfig c;
  c.set("synth.resolution", "32");
  c.set("synth.stripe_amplitudes", "0,0.1,0.2,0.3");
  auto spec = c.synthetic_spec();
  CHECK(spec.resolution == 32);
  CHECK(spec.stripe_amplitude[3] == 0.3);
  c.set("synth.stripe_amplitudes", "0,0.1");
  CHECK_THROWS(c.synthetic_spec());

  c.set("train.pixel_critic_mode", "separate_step");
  c.set("model.use_fae", "false");
  auto t = c.train_config();
  CHECK(t.pixel_critic_mode == PixelCriticMode::SeparateStep);
  CHECK_FALSE(t.use_fae);
  CHECK_FALSE(t.pairing_policy().match_attributes);
}

TEST_CASE("run config: help lists every key with default and owner") {
  const auto help = config_help();
  for (const auto& k : config_keys()) {
    INFO(k.key);
    const std::string line =
        k.key + " = " + (k.required ? "(required)" : k.default_value) + "  [" + k.owner + "]";
    CHECK(help.find(line) != std::string::npos);
  }
  for (const char* owner : {"cli", "dataset-io", "trainer", "aging-networks", "objectives",
                            "evaluation-harness", "tensor-autodiff-core", "wavelet-packet"})
    CHECK(help.find(std::string("[") + owner + "]") != std::string::npos);
}

TEST_CASE("cli: help mentions every key") {
  auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("train.pixel_critic_period") != std::string::npos);
  CHECK(r.output.find("gradcheck.tolerance") != std::string::npos);
}

TEST_CASE("cli: wpt writes 4 + 16 + 64 subband images for k = 3") {
  ScratchDir dir("cli-wpt");
  Image8 img{64, 64, 3, {}};
  for (std::size_t i = 0; i < 64 * 64 * 3; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 7));
  write_ppm(dir.path() / "in.ppm", img);
  auto r = run_cli("wpt --input " + (dir.path() / "in.ppm").string() + " --set wpt.levels=3 --out " +
                   dir.path().string());
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto out = only_subdir(dir.path(), "wpt-");
  CHECK(count_files(out / "level1", ".ppm") == 4);
  CHECK(count_files(out / "level2", ".ppm") == 16);
  CHECK(count_files(out / "level3", ".ppm") == 64);
  CHECK(count_files(out, ".agwt") == 3);
  CHECK(fs::exists(out / "config.cfg"));
  CHECK(fs::exists(out / "level1" / "HH.ppm"));
}

TEST_CASE("cli: gradcheck exit code follows the tolerance") {
  auto ok = run_cli("gradcheck --set gradcheck.seeds=1");
  CHECK_MESSAGE(ok.exit_code == 0, ok.output);
  CHECK(ok.output.find("all passed") != std::string::npos);
  auto strict = run_cli("gradcheck --set gradcheck.seeds=1 --set gradcheck.tolerance=0");
  CHECK(strict.exit_code != 0);
  CHECK(strict.output.find("FAIL") != std::string::npos);
}

TEST_CASE("cli: transform with an identity-initialised generator gives tanh(input)") {
  ScratchDir dir("cli-transform");
  GeneratorConfig gc;
  gc.input_resolution = 32;
  gc.base_channels = 4;
  gc.num_residual_blocks = 1;
  Generator<float> g(gc, 5);
  g.zero_output_layer();
  save_model(dir.path() / "g.agwc", g,
             {{"schema", "shape=circle|square;hue=A|B"}, {"target_group", "G51plus"}});

  Image8 img{32, 32, 3, {}};
  for (std::size_t i = 0; i < 32 * 32 * 3; ++i) img.pixels.push_back(static_cast<std::uint8_t>(i * 13));
  write_ppm(dir.path() / "face.ppm", img);
  auto r = run_cli("transform --checkpoint " + (dir.path() / "g.agwc").string() + " --input " +
                   (dir.path() / "face.ppm").string() + " --attributes circle,B --out " +
                   dir.path().string());
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  const auto out = read_image(only_subdir(dir.path(), "transform-") / "face_aged.ppm");
  REQUIRE(out.pixels.size() == img.pixels.size());
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    mismatches += out.pixels[i] != unit_to_byte(std::tanh(byte_to_unit(img.pixels[i])));
  CHECK(mismatches == 0);

  auto missing = run_cli("transform --checkpoint " + (dir.path() / "g.agwc").string() +
                         " --input " + (dir.path() / "face.ppm").string() + " --out " +
                         dir.path().string());
  CHECK(missing.exit_code != 0);
  CHECK(missing.output.find("--attributes") != std::string::npos);
}

TEST_CASE("cli: missing required keys fail with a one-line diagnostic") {
  ScratchDir dir("cli-errors");
  auto r = run_cli("synth --out " + dir.path().string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("synth.resolution") != std::string::npos);
  auto t = run_cli("train --out " + dir.path().string());
  CHECK(t.exit_code != 0);
  CHECK(t.output.find("data.dir") != std::string::npos);
  auto u = run_cli("train --set nope=1 --out " + dir.path().string());
  CHECK(u.exit_code != 0);
  CHECK(u.output.find("unknown config key") != std::string::npos);
  auto c = run_cli("eval --checkpoint /nonexistent.agwc --set data.dir=/nonexistent --out " +
                   dir.path().string());
  CHECK(c.exit_code != 0);
}

TEST_CASE("cli: synth, train, eval end to end; echoed config reproduces outputs") {
  ScratchDir dir("cli-e2e");
  const auto root = dir.path().string();
  auto s = run_cli("synth --set synth.resolution=32 --set synth.n_per_cell=2 --seed 4 --out " + root);
  REQUIRE_MESSAGE(s.exit_code == 0, s.output);
  const auto data = only_subdir(dir.path(), "synth-");
  CHECK(count_files(data, ".ppm") == 32);

  const std::string train_args =
      " --set data.dir=" + data.string() +
      " --set train.iterations=3 --set train.batch_size=2 --set model.base_channels=4"
      " --set model.residual_blocks=1 --set model.pathway_channels=4 --set loss.auto_scale=false";
  auto t = run_cli("train" + train_args + " --out " + root);
  REQUIRE_MESSAGE(t.exit_code == 0, t.output);
  const auto run = only_subdir(dir.path(), "train-");
  CHECK(fs::exists(run / "losses.csv"));
  CHECK(fs::exists(run / "generator.agwc"));

  // Re-run from the echoed config into a fresh root.
  const auto again_root = dir.path() / "again";
  auto t2 = run_cli("train --config " + (run / "config.cfg").string() + " --out " +
                    again_root.string());
  REQUIRE_MESSAGE(t2.exit_code == 0, t2.output);
  const auto run2 = only_subdir(again_root, "train-");
  CHECK(run2.filename() == run.filename());
  CHECK(slurp(run2 / "generator.agwc") == slurp(run / "generator.agwc"));
  CHECK(slurp(run2 / "losses.csv") == slurp(run / "losses.csv"));

  auto e = run_cli("eval --checkpoint " + (run / "generator.agwc").string() +
                   " --set data.dir=" + data.string() + " --out " + root);
  REQUIRE_MESSAGE(e.exit_code == 0, e.output);
  const auto ev = only_subdir(dir.path(), "eval-");
  CHECK(fs::exists(ev / "eval.csv"));
  CHECK(fs::exists(ev / "eval.txt"));
  CHECK(fs::exists(ev / "grid.ppm"));
  CHECK(e.output.find("proxy metrics") != std::string::npos);
}

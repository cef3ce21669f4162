// agewave: synth, train, transform, wpt, gradcheck, eval and ablate.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "agewave/checkpoint.hpp"
#include "agewave/dataset.hpp"
#include "agewave/evaluation.hpp"
#include "agewave/gradcheck.hpp"
#include "agewave/image_io.hpp"
#include "agewave/networks.hpp"
#include "agewave/run_config.hpp"
#include "agewave/synthetic.hpp"
#include "agewave/tensor_io.hpp"
#include "agewave/trainer.hpp"
#include "agewave/wavelet.hpp"

namespace fs = std::filesystem;
using namespace agewave;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--set", o.overrides, "override one key, key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "shorthand for --set seed=N");
  cmd->add_option("--out", o.out, "root output directory")->capture_default_str();
}

RunConfig resolve(const CommonOptions& o) {
  RunConfig config;
  if (!o.config_path.empty()) config.load_file(o.config_path);
  for (const auto& assignment : o.overrides) config.apply(assignment);
  if (o.seed) config.set("seed", std::to_string(*o.seed));
  return config;
}

Dataset load_eval_set(const RunConfig& config) {
  return load_dataset(config.is_set("data.eval_dir") ? config.get("data.eval_dir")
                                                      : config.get("data.dir"));
}

int cmd_synth(const CommonOptions& o) {
  const RunConfig config = resolve(o);
  const auto spec = config.synthetic_spec();
  const auto dir = prepare_run_directory(o.out, "synth", config);
  const Dataset ds =
      generate_synthetic(spec, config.get_u64("synth.n_per_cell"), config.get_u64("seed"));
  write_dataset(dir, ds);
  std::cout << "wrote " << ds.samples.size() << " samples to " << dir.string() << '\n';
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& resume) {
  const RunConfig config = resolve(o);
  const TrainConfig train_config = config.train_config();
  const Dataset ds = load_dataset(config.get("data.dir"));
  const auto dir = prepare_run_directory(o.out, "train", config);
  std::optional<fs::path> from;
  if (!resume.empty()) from = resume;
  const auto result = train(train_config, ds, dir, from);
  std::cout << "trained to iteration " << train_config.iterations << "; generator "
            << result.generator_path.string() << ", losses " << result.loss_csv_path.string()
            << '\n';
  return 0;
}

int cmd_transform(const CommonOptions& o, const std::string& checkpoint,
                  const std::vector<std::string>& inputs, const std::string& labels,
                  const std::string& format) {
  const RunConfig config = resolve(o);
  const Checkpoint cp = load_checkpoint(checkpoint);
  if (cp.kind != CheckpointKind::Generator)
    throw std::invalid_argument(checkpoint + " does not hold a generator");
  const Generator<float> generator = load_generator(checkpoint);
  const std::size_t res = generator.config().input_resolution;
  const std::size_t p = generator.config().attribute_dim;

  std::vector<float> code(p, 0.0f);
  if (generator.config().use_attribute_embedding) {
    if (labels.empty())
      throw std::invalid_argument("--attributes is required for a generator with attribute "
                                  "embedding (labels in schema order, comma-separated)");
    auto it = cp.config.find("schema");
    if (it == cp.config.end())
      throw std::invalid_argument(checkpoint + " lacks the attribute schema");
    const auto schema = AttributeSchema::parse(it->second);
    std::vector<std::string> parts;
    std::string part;
    for (char ch : labels + ",") {
      if (ch == ',') {
        parts.push_back(part);
        part.clear();
      } else {
        part += ch;
      }
    }
    code = AttributeVector::encode(schema, parts).values;
  }

  KeyValues run = config.values();
  run["transform.checkpoint"] = fs::absolute(checkpoint).string();
  run["transform.attributes"] = labels;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    run["transform.input" + std::to_string(i)] = fs::absolute(inputs[i]).string();
  const fs::path dir = fs::path(o.out) / ("transform-" + config_hash(run));
  fs::create_directories(dir);
  write_file_atomically(dir / "config.cfg", [&](std::ostream& out) {
    for (const auto& [k, v] : run) out << k << '=' << v << '\n';
  });

  for (const auto& input : inputs) {
    const Tensorf image =
        image_to_tensor(resize_bilinear(read_image(input), res, res)).reshape({1, 3, res, res});
    Tensorf out;
    {
      NoGradGuard guard;
      out = generator.forward(image, Tensorf(Shape{1, p}, code));
    }
    const fs::path target = dir / (fs::path(input).stem().string() + "_aged." + format);
    write_image(target, tensor_to_image(out));
    std::cout << target.string() << '\n';
  }
  return 0;
}

Image8 subband_image(const Tensorf& band) {
  // band [1,3,h,w]; each subband is min-max stretched for viewing.
  const auto data = band.data();
  const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
  const float span = *hi - *lo;
  const std::size_t h = band.dim(2), w = band.dim(3), plane = h * w;
  Image8 img{w, h, 3, std::vector<std::uint8_t>(plane * 3)};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      const float v = span > 0 ? (data[c * plane + i] - *lo) / span : 0.5f;
      img.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  return img;
}

int cmd_wpt(const CommonOptions& o, const std::string& input) {
  const RunConfig config = resolve(o);
  const std::size_t levels = config.get_u64("wpt.levels");
  const auto family = parse_wavelet_family(config.get("wpt.family"));
  KeyValues run = config.values();
  run["wpt.input"] = fs::absolute(input).string();
  const fs::path dir = fs::path(o.out) / ("wpt-" + config_hash(run));
  fs::create_directories(dir);
  write_file_atomically(dir / "config.cfg", [&](std::ostream& out) {
    for (const auto& [k, v] : run) out << k << '=' << v << '\n';
  });

  const Image8 raw = read_image(input);
  const Tensorf image = image_to_tensor(raw).reshape({1, 3, raw.height, raw.width});
  const auto packets = wpt_forward(image, levels, WaveletFilterPair::of(family));
  std::size_t written = 0;
  for (const auto& packet : packets) {
    const fs::path level_dir = dir / ("level" + std::to_string(packet.level));
    fs::create_directories(level_dir);
    for (std::size_t s = 0; s < packet.subbands.size(); ++s) {
      write_ppm(level_dir / (subband_name(packet.level, s) + ".ppm"),
                subband_image(packet.subbands[s]));
      ++written;
    }
    save_tensor(dir / ("level" + std::to_string(packet.level) + ".agwt"), packet.flatten());
  }
  std::cout << "wrote " << written << " subband images to " << dir.string() << '\n';
  return 0;
}

int cmd_gradcheck(const CommonOptions& o) {
  const RunConfig config = resolve(o);
  const std::size_t seeds = config.get_u64("gradcheck.seeds");
  const double tolerance = config.get_double("gradcheck.tolerance");
  const auto reports = run_gradcheck_suite(seeds, tolerance);
  bool ok = true;
  std::printf("%-34s %12s %6s %s\n", "op", "worst error", "seeds", "result");
  for (const auto& r : reports) {
    std::printf("%-34s %12.3e %6zu %s\n", r.name.c_str(), r.worst_error, r.seeds,
                r.passed ? "pass" : "FAIL");
    ok = ok && r.passed;
  }
  std::printf("%zu checks, tolerance %.1e: %s\n", reports.size(), tolerance,
              ok ? "all passed" : "FAILED");
  return ok ? 0 : 1;
}

int cmd_eval(const CommonOptions& o, const std::vector<std::string>& checkpoints) {
  const RunConfig config = resolve(o);
  const Dataset eval_set = load_eval_set(config);
  KeyValues run = config.values();
  for (std::size_t i = 0; i < checkpoints.size(); ++i)
    run["eval.checkpoint" + std::to_string(i)] = fs::absolute(checkpoints[i]).string();
  const fs::path dir = fs::path(o.out) / ("eval-" + config_hash(run));
  fs::create_directories(dir);
  write_file_atomically(dir / "config.cfg", [&](std::ostream& out) {
    for (const auto& [k, v] : run) out << k << '=' << v << '\n';
  });

  const RandomConvEncoder<float> encoder(config.get_u64("loss.identity_seed"));
  std::vector<EvalReport> reports;
  std::vector<std::vector<Tensorf>> grid_outputs;
  std::vector<TrainingSample> grid_inputs;
  const std::size_t rows = config.get_u64("eval.grid_rows");
  for (auto i : eval_set.indices_of(AgeGroup::Under30)) {
    if (grid_inputs.size() >= rows) break;
    grid_inputs.push_back(eval_set.samples[i]);
  }
  for (const auto& path : checkpoints) {
    const Checkpoint cp = load_checkpoint(path);
    const Generator<float> generator = load_generator(path);
    auto it = cp.config.find("target_group");
    if (it == cp.config.end()) throw std::invalid_argument(path + " lacks its target group");
    EvalOptions options;
    options.cell = fs::path(path).parent_path().filename().string();
    options.seed = config.get_u64("seed");
    options.config_hash = config_hash(cp.config);
    options.max_samples = config.get_u64("eval.max_samples");
    reports.push_back(evaluate(generator_map(generator), eval_set, parse_age_group(it->second),
                               encoder, options));
    if (!grid_inputs.empty()) grid_outputs.push_back(apply_map(generator_map(generator), grid_inputs));
  }
  write_reports_csv(dir / "eval.csv", reports);
  const std::string table = format_report_table(reports);
  write_file_atomically(dir / "eval.txt", [&](std::ostream& out) { out << table; });
  if (!grid_inputs.empty()) {
    std::vector<Tensorf> inputs;
    for (const auto& s : grid_inputs) inputs.push_back(s.image);
    write_image_grid(dir / "grid.ppm", inputs, grid_outputs);
  }
  std::cout << table << "reports in " << dir.string() << '\n';
  return 0;
}

int cmd_ablate(const CommonOptions& o) {
  const RunConfig config = resolve(o);
  const TrainConfig base = config.train_config();
  const Dataset train_set = load_dataset(config.get("data.dir"));
  const Dataset eval_set = load_eval_set(config);
  const auto dir = prepare_run_directory(o.out, "ablate", config);
  const auto result =
      run_ablation_grid(train_set, eval_set, base, dir, config.get_u64("eval.max_samples"));
  std::cout << format_report_table(result.reports) << "reports in " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agewave: attribute-aware face aging with wavelet-packet discrimination"};
  app.footer(config_help());
  app.require_subcommand(1);

  CommonOptions synth_o, train_o, transform_o, wpt_o, grad_o, eval_o, ablate_o;
  std::string resume, checkpoint, labels, format = "ppm", wpt_input;
  std::vector<std::string> inputs, checkpoints;

  auto* synth = app.add_subcommand("synth", "generate the synthetic aging dataset");
  add_common(synth, synth_o);
  auto* train_cmd = app.add_subcommand("train", "train one Under30 -> target-group mapping");
  add_common(train_cmd, train_o);
  train_cmd->add_option("--resume", resume, "training-state checkpoint to continue from");
  auto* transform = app.add_subcommand("transform", "age images with a trained generator");
  add_common(transform, transform_o);
  transform->add_option("--checkpoint", checkpoint, "generator checkpoint")->required();
  transform->add_option("--input", inputs, "input image (repeatable)")->required();
  transform->add_option("--attributes", labels, "attribute labels in schema order, e.g. circle,A");
  transform->add_option("--format", format, "ppm or png")
      ->check(CLI::IsMember({"ppm", "png"}))
      ->capture_default_str();
  auto* wpt = app.add_subcommand("wpt", "write wavelet-packet subbands of an image");
  add_common(wpt, wpt_o);
  wpt->add_option("--input", wpt_input, "image to decompose")->required();
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every op and loss");
  add_common(grad, grad_o);
  auto* eval = app.add_subcommand("eval", "evaluate generator checkpoints");
  add_common(eval, eval_o);
  eval->add_option("--checkpoint", checkpoints, "generator checkpoint (repeatable)")->required();
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the four ablation cells");
  add_common(ablate, ablate_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) return cmd_synth(synth_o);
    if (*train_cmd) return cmd_train(train_o, resume);
    if (*transform) return cmd_transform(transform_o, checkpoint, inputs, labels, format);
    if (*wpt) return cmd_wpt(wpt_o, wpt_input);
    if (*grad) return cmd_gradcheck(grad_o);
    if (*eval) return cmd_eval(eval_o, checkpoints);
    if (*ablate) return cmd_ablate(ablate_o);
  } catch (const std::exception& e) {
    std::cerr << "agewave: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

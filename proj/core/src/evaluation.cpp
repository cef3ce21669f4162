#include "agewave/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "agewave/image_io.hpp"
#include "agewave/ops.hpp"
#include "agewave/tensor_io.hpp"
#include "agewave/wavelet.hpp"

namespace agewave {

namespace {

Shape image_shape(const Tensorf& image, const char* who) {
  Shape s = image.shape();
  if (s.size() == 4 && s[0] == 1) s.erase(s.begin());
  if (s.size() != 3 || s[0] != 3)
    throw ShapeError(std::string(who) + ": expected a [3,H,W] image, got " +
                     shape_string(image.shape()));
  return s;
}

Tensorf stack(const std::vector<TrainingSample>& samples, std::size_t begin, std::size_t end,
              bool images) {
  if (images) {
    const Shape s = samples[begin].image.shape();
    std::vector<float> values;
    for (std::size_t i = begin; i < end; ++i)
      values.insert(values.end(), samples[i].image.data().begin(),
                    samples[i].image.data().end());
    return Tensorf(Shape{end - begin, s[0], s[1], s[2]}, std::move(values));
  }
  std::vector<AttributeVector> codes;
  for (std::size_t i = begin; i < end; ++i) codes.push_back(samples[i].attributes);
  return attributes_to_tensor<float>(codes);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

double texture_energy(const Tensorf& image) {
  const Shape s = image_shape(image, "texture_energy");
  NoGradGuard guard;
  const auto packets =
      wpt_forward(image.detach().reshape({1, s[0], s[1], s[2]}), 1, WaveletFilterPair::haar());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t band = 1; band < 4; ++band) {
    for (float c : packets[0].subbands[band].data()) sum += static_cast<double>(c) * c;
    count += packets[0].subbands[band].numel();
  }
  return sum / static_cast<double>(count);
}

StatSummary summarize(const std::vector<double>& values) {
  StatSummary out;
  out.count = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

StatSummary texture_statistics(const std::vector<Tensorf>& images) {
  std::vector<double> values;
  values.reserve(images.size());
  for (const auto& img : images) values.push_back(texture_energy(img));
  return summarize(values);
}

ImageMap generator_map(const Generator<float>& generator) {
  return [&generator](const Tensorf& images, const Tensorf& attributes) {
    NoGradGuard guard;
    return generator.forward(images, attributes);
  };
}

std::vector<Tensorf> apply_map(const ImageMap& map, const std::vector<TrainingSample>& samples,
                               std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("apply_map: batch size must be >= 1");
  std::vector<Tensorf> out;
  out.reserve(samples.size());
  for (std::size_t b = 0; b < samples.size(); b += batch_size) {
    const std::size_t e = std::min(samples.size(), b + batch_size);
    const Tensorf result = map(stack(samples, b, e, true), stack(samples, b, e, false));
    const Shape s = samples[b].image.shape();
    if (result.shape() != Shape{e - b, s[0], s[1], s[2]})
      throw ShapeError("apply_map: map returned " + shape_string(result.shape()));
    const std::size_t per = samples[b].image.numel();
    for (std::size_t i = 0; i < e - b; ++i) {
      const auto first = result.data().begin() + static_cast<std::ptrdiff_t>(i * per);
      out.emplace_back(s, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(per)));
    }
  }
  return out;
}

AttributeRates attribute_preservation(const std::vector<Tensorf>& outputs,
                                      const std::vector<TrainingSample>& inputs,
                                      const AttributeOracle& oracle) {
  if (outputs.size() != inputs.size() || inputs.empty())
    throw std::invalid_argument("attribute_preservation: need one output per input");
  const AttributeSchema schema = SyntheticAgingSpec::schema();
  const std::size_t groups = schema.groups().size();
  std::size_t all = 0;
  std::vector<std::size_t> hits(groups, 0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto predicted = oracle.classify_code(outputs[i]).categories(schema);
    const auto expected = inputs[i].attributes.categories(schema);
    bool every = true;
    for (std::size_t g = 0; g < groups; ++g) {
      if (predicted[g] == expected[g]) {
        ++hits[g];
      } else {
        every = false;
      }
    }
    if (every) ++all;
  }
  const double n = static_cast<double>(inputs.size());
  AttributeRates rates;
  rates.overall = 100.0 * static_cast<double>(all) / n;
  for (auto h : hits) rates.per_group.push_back(100.0 * static_cast<double>(h) / n);
  return rates;
}

DistanceStats identity_distance(const std::vector<Tensorf>& outputs,
                                const std::vector<TrainingSample>& inputs,
                                const IdentityEncoder<float>& encoder) {
  if (outputs.size() != inputs.size() || inputs.empty())
    throw std::invalid_argument("identity_distance: need one output per input");
  NoGradGuard guard;
  std::vector<double> distances;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Shape s = image_shape(inputs[i].image, "identity_distance");
    const Shape batched{1, s[0], s[1], s[2]};
    const Tensorf a = encoder.features(outputs[i].reshape(batched));
    const Tensorf b = encoder.features(inputs[i].image.reshape(batched));
    double sq = 0.0;
    for (std::size_t k = 0; k < a.numel(); ++k) {
      const double d = static_cast<double>(a.data()[k]) - b.data()[k];
      sq += d * d;
    }
    distances.push_back(std::sqrt(sq));
  }
  const auto summary = summarize(distances);
  return {summary.mean, summary.stddev, *std::min_element(distances.begin(), distances.end()),
          *std::max_element(distances.begin(), distances.end())};
}

EvalReport evaluate(const ImageMap& map, const Dataset& dataset, AgeGroup target_group,
                    const IdentityEncoder<float>& encoder, const EvalOptions& options) {
  EvalReport report;
  report.cell = options.cell;
  report.target_group = target_group;
  report.seed = options.seed;
  report.config_hash = options.config_hash;

  std::vector<TrainingSample> inputs;
  for (auto i : dataset.indices_of(AgeGroup::Under30)) {
    if (options.max_samples != 0 && inputs.size() >= options.max_samples) break;
    inputs.push_back(dataset.samples[i]);
  }
  if (inputs.empty()) throw std::invalid_argument("evaluation set has no Under30 samples");

  const AttributeOracle oracle;
  report.oracle_gate = oracle.accuracy(dataset.samples);
  if (report.oracle_gate < 100.0)
    throw std::runtime_error("attribute oracle gate failed: " + fixed(report.oracle_gate, 2) +
                             "% on clean evaluation data (need 100%)");

  for (AgeGroup g : kAllAgeGroups) {
    std::vector<Tensorf> images;
    for (auto i : dataset.indices_of(g)) images.push_back(dataset.samples[i].image);
    report.generic_texture[static_cast<std::size_t>(g)] = texture_statistics(images);
  }
  std::vector<Tensorf> input_images;
  for (const auto& s : inputs) input_images.push_back(s.image);
  const auto outputs = apply_map(map, inputs, options.batch_size);
  report.input_texture = texture_statistics(input_images);
  report.generated_texture = texture_statistics(outputs);
  report.preservation = attribute_preservation(outputs, inputs, oracle);
  report.identity = identity_distance(outputs, inputs, encoder);
  report.samples = inputs.size();
  return report;
}

std::string report_csv_header() {
  std::string h = "cell,target_group,seed,config_hash,samples,oracle_gate";
  for (AgeGroup g : kAllAgeGroups)
    h += ",generic_" + to_string(g) + "_mean,generic_" + to_string(g) + "_std";
  h += ",input_texture_mean,input_texture_std,generated_texture_mean,generated_texture_std,"
       "attr_all,attr_shape,attr_hue,identity_mean,identity_std,identity_min,identity_max";
  return h;
}

std::string report_csv_row(const EvalReport& r) {
  std::ostringstream out;
  out << r.cell << ',' << to_string(r.target_group) << ',' << r.seed << ',' << r.config_hash
      << ',' << r.samples << ',' << sci(r.oracle_gate);
  for (const auto& g : r.generic_texture) out << ',' << sci(g.mean) << ',' << sci(g.stddev);
  out << ',' << sci(r.input_texture.mean) << ',' << sci(r.input_texture.stddev) << ','
      << sci(r.generated_texture.mean) << ',' << sci(r.generated_texture.stddev) << ','
      << sci(r.preservation.overall);
  for (std::size_t g = 0; g < 2; ++g)
    out << ',' << (g < r.preservation.per_group.size() ? sci(r.preservation.per_group[g]) : "");
  out << ',' << sci(r.identity.mean) << ',' << sci(r.identity.stddev) << ','
      << sci(r.identity.min) << ',' << sci(r.identity.max);
  return out.str();
}

void write_reports_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  write_file_atomically(path, [&](std::ostream& out) {
    out << report_csv_header() << '\n';
    for (const auto& r : reports) out << report_csv_row(r) << '\n';
  });
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-8s %6s %18s %18s %8s %8s %8s %16s\n", "cell",
                "target", "seed", "texture in", "texture out", "attr%", "shape%", "hue%",
                "identity dist");
  out << line;
  for (const auto& r : reports) {
    const std::string tin = sci(r.input_texture.mean) + "+-" + sci(r.input_texture.stddev);
    const std::string tout =
        sci(r.generated_texture.mean) + "+-" + sci(r.generated_texture.stddev);
    const double shape = r.preservation.per_group.size() > 0 ? r.preservation.per_group[0] : 0;
    const double hue = r.preservation.per_group.size() > 1 ? r.preservation.per_group[1] : 0;
    std::snprintf(line, sizeof line, "%-12s %-8s %6llu %18s %18s %8.2f %8.2f %8.2f %16s\n",
                  r.cell.c_str(), to_string(r.target_group).c_str(),
                  static_cast<unsigned long long>(r.seed), tin.c_str(), tout.c_str(),
                  r.preservation.overall, shape, hue,
                  (sci(r.identity.mean) + "+-" + sci(r.identity.stddev)).c_str());
    out << line;
  }
  if (!reports.empty()) {
    out << "generic texture by group:";
    for (std::size_t g = 0; g < kAgeGroupCount; ++g)
      out << ' ' << to_string(kAllAgeGroups[g]) << '=' << sci(reports[0].generic_texture[g].mean);
    out << '\n';
  }
  out << kProxyNote << '\n';
  return out.str();
}

void write_image_grid(const std::filesystem::path& path, const std::vector<Tensorf>& inputs,
                      const std::vector<std::vector<Tensorf>>& outputs) {
  if (inputs.empty()) throw std::invalid_argument("image grid needs at least one input");
  for (const auto& col : outputs)
    if (col.size() != inputs.size())
      throw std::invalid_argument("image grid: every output column needs one image per input");
  const Shape s = image_shape(inputs[0], "write_image_grid");
  const std::size_t h = s[1], w = s[2], cols = 1 + outputs.size();
  Image8 grid{cols * w, inputs.size() * h, 3, {}};
  grid.pixels.resize(grid.width * grid.height * 3);
  auto blit = [&](const Tensorf& img, std::size_t row, std::size_t col) {
    if (image_shape(img, "write_image_grid") != s)
      throw ShapeError("image grid: inconsistent image shapes");
    const Image8 tile = tensor_to_image(img);
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(tile.pixels.begin() + static_cast<std::ptrdiff_t>(y * w * 3), w * 3,
                  grid.pixels.begin() +
                      static_cast<std::ptrdiff_t>(((row * h + y) * grid.width + col * w) * 3));
  };
  for (std::size_t r = 0; r < inputs.size(); ++r) {
    blit(inputs[r], r, 0);
    for (std::size_t c = 0; c < outputs.size(); ++c) blit(outputs[c][r], r, c + 1);
  }
  write_image(path, grid);
}

std::vector<AblationCell> ablation_cells() {
  return {{"woFAE/woWPT", false, false},
          {"woFAE/wWPT", false, true},
          {"wFAE/woWPT", true, false},
          {"wFAE/wWPT", true, true}};
}

AblationResult run_ablation_grid(const Dataset& train_set, const Dataset& eval_set,
                                 const TrainConfig& base, const std::filesystem::path& out_dir,
                                 std::size_t max_eval_samples) {
  AblationResult result;
  std::filesystem::create_directories(out_dir);
  for (const auto& cell : ablation_cells()) {
    TrainConfig config = base;
    config.use_fae = cell.use_fae;
    config.use_wpt = cell.use_wpt;
    std::string dir = cell.name;
    std::replace(dir.begin(), dir.end(), '/', '_');
    const auto trained = train(config, train_set, out_dir / dir);
    const Generator<float> generator = load_generator(trained.generator_path);
    const RandomConvEncoder<float> encoder(config.identity_seed);
    EvalOptions options;
    options.cell = cell.name;
    options.seed = config.seed;
    options.config_hash = config_hash(config.to_key_values());
    options.max_samples = max_eval_samples;
    result.reports.push_back(
        evaluate(generator_map(generator), eval_set, config.target_group, encoder, options));
    result.configs.push_back(config);
  }
  write_reports_csv(out_dir / "ablation.csv", result.reports);
  write_file_atomically(out_dir / "ablation.txt", [&](std::ostream& out) {
    out << format_report_table(result.reports);
  });
  return result;
}

}  // namespace agewave

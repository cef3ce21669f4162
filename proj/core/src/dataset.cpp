#include "agewave/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "agewave/checkpoint.hpp"
#include "agewave/image_io.hpp"
#include "agewave/tensor_io.hpp"

namespace agewave {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

struct ManifestRow {
  std::size_t line = 0;
  std::string filename;
  int age = 0;
  std::vector<std::string> labels;
};

int parse_age(const std::string& text, std::size_t line) {
  std::size_t used = 0;
  int age = 0;
  try {
    age = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size())
    throw std::invalid_argument("manifest line " + std::to_string(line) + ": bad age '" + text +
                                "'");
  return age;
}

}  // namespace

AgeGroup age_to_group(int age) {
  if (age < 0 || age > kMaxAge)
    throw std::out_of_range("age " + std::to_string(age) + " outside the valid range 0-" +
                            std::to_string(kMaxAge));
  if (age <= 30) return AgeGroup::Under30;
  if (age <= 40) return AgeGroup::G31_40;
  if (age <= 50) return AgeGroup::G41_50;
  return AgeGroup::G51plus;
}

int representative_age(AgeGroup group) {
  switch (group) {
    case AgeGroup::Under30: return 25;
    case AgeGroup::G31_40: return 35;
    case AgeGroup::G41_50: return 45;
    case AgeGroup::G51plus: return 60;
  }
  throw std::invalid_argument("unknown age group");
}

std::string to_string(AgeGroup group) {
  switch (group) {
    case AgeGroup::Under30: return "Under30";
    case AgeGroup::G31_40: return "G31_40";
    case AgeGroup::G41_50: return "G41_50";
    case AgeGroup::G51plus: return "G51plus";
  }
  throw std::invalid_argument("unknown age group");
}

AgeGroup parse_age_group(const std::string& text) {
  if (text == "Under30" || text == "30-") return AgeGroup::Under30;
  if (text == "G31_40" || text == "31-40") return AgeGroup::G31_40;
  if (text == "G41_50" || text == "41-50") return AgeGroup::G41_50;
  if (text == "G51plus" || text == "51+") return AgeGroup::G51plus;
  throw std::invalid_argument("unknown age group '" + text +
                              "' (expected Under30, G31_40, G41_50 or G51plus)");
}

void DatasetConfig::validate() const {
  if (resolution == 0) throw std::invalid_argument("dataset config: resolution is required");
  if ((resolution & (resolution - 1)) != 0 || resolution < 8)
    throw std::invalid_argument("dataset config: resolution must be a power of two >= 8, got " +
                                std::to_string(resolution));
  if (schema.dim() == 0) throw std::invalid_argument("dataset config: attributes are required");
}

DatasetConfig read_dataset_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open dataset config " + path.string());
  DatasetConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "resolution") {
      config.resolution = parse_u64(value, "resolution");
    } else if (key == "attributes") {
      config.schema = AttributeSchema::parse(value);
    } else if (key == "manifest") {
      config.manifest = value;
    } else if (key == "image_dir") {
      config.image_dir = value;
    } else {
      throw FormatError(path.string() + ":" + std::to_string(number) + ": unknown key '" + key +
                        "'");
    }
  }
  config.validate();
  return config;
}

void write_dataset_config(const std::filesystem::path& path, const DatasetConfig& config) {
  config.validate();
  write_file_atomically(path, [&](std::ostream& out) {
    out << "resolution=" << config.resolution << '\n'
        << "attributes=" << config.schema.to_string() << '\n'
        << "manifest=" << config.manifest << '\n'
        << "image_dir=" << config.image_dir << '\n';
  });
}

std::vector<std::size_t> Dataset::indices_of(AgeGroup group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].age_group == group) out.push_back(i);
  return out;
}

std::size_t data_threads() {
  if (const char* env = std::getenv("AGEWAVE_THREADS"); env != nullptr && *env != '\0') {
    const auto n = parse_u64(env, "AGEWAVE_THREADS");
    if (n == 0) throw std::invalid_argument("AGEWAVE_THREADS must be >= 1");
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrainingSample> load_manifest(const std::filesystem::path& image_dir,
                                          const std::filesystem::path& manifest_path,
                                          const AttributeSchema& schema,
                                          std::size_t resolution, std::size_t threads) {
  if (resolution == 0) throw std::invalid_argument("load_manifest: resolution is required");
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open manifest " + manifest_path.string());

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) return {};
  const auto header = split_csv_line(trim(line));
  std::vector<std::string> expected{"filename", "age"};
  for (const auto& g : schema.groups()) expected.push_back(g.name);
  if (header != expected) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : ",") + e;
    throw FormatError(manifest_path.string() + ": header must be '" + want + "'");
  }

  std::vector<ManifestRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(trim(line));
    if (fields.size() != expected.size())
      throw FormatError(manifest_path.string() + ":" + std::to_string(number) + ": expected " +
                        std::to_string(expected.size()) + " fields");
    ManifestRow row;
    row.line = number;
    row.filename = fields[0];
    row.age = parse_age(fields[1], number);
    if (row.age < 0 || row.age > kMaxAge)
      throw std::out_of_range(manifest_path.string() + ":" + std::to_string(number) + ": age " +
                              std::to_string(row.age) + " outside 0-" + std::to_string(kMaxAge));
    row.labels.assign(fields.begin() + 2, fields.end());
    rows.push_back(std::move(row));
  }

  std::vector<std::string> missing;
  for (const auto& row : rows)
    if (!std::filesystem::exists(image_dir / row.filename)) missing.push_back(row.filename);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw FormatError("missing image files in " + image_dir.string() + ": " + list);
  }

  std::vector<TrainingSample> samples(rows.size());
  std::vector<std::exception_ptr> errors(rows.size());
  auto load_row = [&](std::size_t i) {
    try {
      const auto& row = rows[i];
      TrainingSample s;
      s.id = row.filename;
      s.age_group = age_to_group(row.age);
      try {
        s.attributes = AttributeVector::encode(schema, row.labels);
      } catch (const std::exception& e) {
        throw std::invalid_argument(manifest_path.string() + ":" + std::to_string(row.line) +
                                    ": " + e.what());
      }
      auto image = read_image(image_dir / row.filename);
      s.image = image_to_tensor(resize_bilinear(image, resolution, resolution));
      samples[i] = std::move(s);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers =
      std::min(rows.size(), threads == 0 ? data_threads() : threads);
  if (workers <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) load_row(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < rows.size(); i += workers) load_row(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return samples;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.config = read_dataset_config(dir / "dataset.cfg");
  ds.samples = load_manifest(dir / ds.config.image_dir, dir / ds.config.manifest,
                             ds.config.schema, ds.config.resolution);
  return ds;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  dataset.config.validate();
  std::filesystem::create_directories(dir / dataset.config.image_dir);
  std::ostringstream manifest;
  manifest << "filename,age";
  for (const auto& g : dataset.config.schema.groups()) manifest << ',' << g.name;
  manifest << '\n';
  for (const auto& s : dataset.samples) {
    write_ppm(dir / dataset.config.image_dir / s.id, tensor_to_image(s.image));
    manifest << s.id << ',' << representative_age(s.age_group);
    for (const auto& label : s.attributes.decode(dataset.config.schema)) manifest << ',' << label;
    manifest << '\n';
  }
  write_file_atomically(dir / dataset.config.manifest,
                        [&](std::ostream& out) { out << manifest.str(); });
  write_dataset_config(dir / "dataset.cfg", dataset.config);
}

void PairingPolicy::validate() const {
  if (source_group != AgeGroup::Under30)
    throw std::invalid_argument("pairing policy: the source group is fixed to Under30");
  if (target_group == AgeGroup::Under30)
    throw std::invalid_argument("pairing policy: the target group must be an older group");
}

BatchStream::BatchStream(const Dataset& dataset, const PairingPolicy& policy,
                         std::size_t batch_size, std::uint64_t seed)
    : dataset_(&dataset), policy_(policy), batch_size_(batch_size), seed_(seed) {
  policy_.validate();
  if (batch_size_ == 0) throw std::invalid_argument("batch size must be >= 1");
  young_ = dataset.indices_of(policy_.source_group);
  old_ = dataset.indices_of(policy_.target_group);
  if (young_.empty())
    throw std::invalid_argument("age group " + to_string(policy_.source_group) +
                                " is empty after filtering");
  if (old_.empty())
    throw std::invalid_argument("age group " + to_string(policy_.target_group) +
                                " is empty after filtering");
  for (auto i : old_) old_by_cell_[dataset.samples[i].attributes.values].push_back(i);
  if (policy_.match_attributes) {
    for (auto i : young_) {
      const auto& code = dataset.samples[i].attributes;
      if (!old_by_cell_.contains(code.values))
        throw std::invalid_argument("attribute cell " + code.cell_name(dataset.config.schema) +
                                    " has no " + to_string(policy_.target_group) +
                                    " sample to pair with");
    }
  }
}

std::vector<std::size_t> BatchStream::epoch_order(std::uint64_t epoch,
                                                  std::uint64_t stream) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(young_);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Batch BatchStream::batch(std::uint64_t index) const {
  Batch b;
  b.index = index;
  const std::uint64_t first = index * batch_size_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::size_t>> cache;
  auto pick = [&](std::uint64_t position, std::uint64_t stream) {
    const std::uint64_t n = young_.size();
    const auto key = std::make_pair(position / n, stream);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, epoch_order(key.first, stream)).first;
    return it->second[position % n];
  };
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    2u};
  std::mt19937_64 rng(seq);
  for (std::size_t j = 0; j < batch_size_; ++j) {
    const std::size_t y = pick(first + j, 0);
    b.young_ids.push_back(y);
    b.negative_ids.push_back(pick(first + j, 1));
    const auto& pool = policy_.match_attributes
                           ? old_by_cell_.at(dataset_->samples[y].attributes.values)
                           : old_;
    std::uniform_int_distribution<std::size_t> draw(0, pool.size() - 1);
    b.old_ids.push_back(pool[draw(rng)]);
  }
  b.young = stack_images(b.young_ids);
  b.young_attributes = stack_attributes(b.young_ids);
  b.old = stack_images(b.old_ids);
  b.old_attributes = stack_attributes(b.old_ids);
  b.negative = stack_images(b.negative_ids);
  b.negative_attributes = stack_attributes(b.negative_ids);
  return b;
}

Batch BatchStream::next() { return batch(cursor_++); }

Tensorf BatchStream::stack_images(const std::vector<std::size_t>& ids) const {
  const auto& first = dataset_->samples[ids.front()].image;
  const std::size_t per = first.numel();
  std::vector<float> values;
  values.reserve(per * ids.size());
  for (auto i : ids) {
    const auto& img = dataset_->samples[i].image;
    values.insert(values.end(), img.data().begin(), img.data().end());
  }
  Shape shape{ids.size()};
  shape.insert(shape.end(), first.shape().begin(), first.shape().end());
  return Tensorf(shape, std::move(values));
}

Tensorf BatchStream::stack_attributes(const std::vector<std::size_t>& ids) const {
  std::vector<AttributeVector> codes;
  codes.reserve(ids.size());
  for (auto i : ids) codes.push_back(dataset_->samples[i].attributes);
  return attributes_to_tensor<float>(codes);
}

}  // namespace agewave

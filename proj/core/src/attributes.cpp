#include "agewave/attributes.hpp"

#include <sstream>
#include <stdexcept>

namespace agewave {

namespace {
std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  return parts;
}
}  // namespace

AttributeSchema::AttributeSchema(std::vector<AttributeGroup> groups) : groups_(std::move(groups)) {
  for (const auto& g : groups_) {
    if (g.name.empty()) throw std::invalid_argument("attribute group with empty name");
    if (g.values.size() < 2)
      throw std::invalid_argument("attribute group '" + g.name + "' needs at least two values");
    offsets_.push_back(dim_);
    dim_ += g.values.size();
  }
}

const AttributeGroup& AttributeSchema::group(const std::string& name) const {
  return groups_[group_index(name)];
}

std::size_t AttributeSchema::group_index(const std::string& name) const {
  for (std::size_t i = 0; i < groups_.size(); ++i)
    if (groups_[i].name == name) return i;
  throw std::invalid_argument("unknown attribute '" + name + "'");
}

AttributeSchema AttributeSchema::parse(const std::string& text) {
  std::vector<AttributeGroup> groups;
  for (const auto& part : split(text, ';')) {
    if (part.empty()) continue;
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("attribute declaration '" + part + "' lacks '='");
    groups.push_back({part.substr(0, eq), split(part.substr(eq + 1), '|')});
  }
  return AttributeSchema(std::move(groups));
}

std::string AttributeSchema::to_string() const {
  std::string out;
  for (const auto& g : groups_) {
    if (!out.empty()) out += ';';
    out += g.name + '=';
    for (std::size_t i = 0; i < g.values.size(); ++i) out += (i ? "|" : "") + g.values[i];
  }
  return out;
}

AttributeVector AttributeVector::encode(const AttributeSchema& schema,
                                        const std::vector<std::string>& labels) {
  if (labels.size() != schema.groups().size())
    throw std::invalid_argument("expected " + std::to_string(schema.groups().size()) +
                                " attribute labels, got " + std::to_string(labels.size()));
  AttributeVector code;
  code.values.assign(schema.dim(), 0.0f);
  for (std::size_t g = 0; g < labels.size(); ++g) {
    const auto& values = schema.groups()[g].values;
    std::size_t k = 0;
    while (k < values.size() && values[k] != labels[g]) ++k;
    if (k == values.size())
      throw std::invalid_argument("unknown value '" + labels[g] + "' for attribute '" +
                                  schema.groups()[g].name + "'");
    code.values[schema.offset(g) + k] = 1.0f;
  }
  return code;
}

std::vector<std::size_t> AttributeVector::categories(const AttributeSchema& schema) const {
  validate(schema);
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < schema.groups().size(); ++g) {
    const std::size_t base = schema.offset(g);
    for (std::size_t k = 0; k < schema.groups()[g].values.size(); ++k)
      if (values[base + k] == 1.0f) out.push_back(k);
  }
  return out;
}

std::vector<std::string> AttributeVector::decode(const AttributeSchema& schema) const {
  const auto cats = categories(schema);
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < cats.size(); ++g) labels.push_back(schema.groups()[g].values[cats[g]]);
  return labels;
}

void AttributeVector::validate(const AttributeSchema& schema) const {
  if (values.size() != schema.dim())
    throw std::invalid_argument("attribute vector has length " + std::to_string(values.size()) +
                                ", schema needs " + std::to_string(schema.dim()));
  for (std::size_t g = 0; g < schema.groups().size(); ++g) {
    int ones = 0;
    for (std::size_t k = 0; k < schema.groups()[g].values.size(); ++k) {
      const float v = values[schema.offset(g) + k];
      if (v != 0.0f && v != 1.0f)
        throw std::invalid_argument("attribute vector entries must be 0 or 1");
      ones += v == 1.0f;
    }
    if (ones != 1)
      throw std::invalid_argument("attribute group '" + schema.groups()[g].name +
                                  "' must have exactly one active value");
  }
}

std::string AttributeVector::cell_name(const AttributeSchema& schema) const {
  std::string out;
  for (const auto& label : decode(schema)) out += (out.empty() ? "" : "/") + label;
  return out;
}

template <typename T>
Tensor<T> attributes_to_tensor(const std::vector<AttributeVector>& codes) {
  if (codes.empty()) throw ShapeError("attributes_to_tensor: empty batch");
  const std::size_t p = codes.front().values.size();
  if (p == 0) throw ShapeError("attributes_to_tensor: zero-length attribute vector");
  std::vector<T> values;
  values.reserve(codes.size() * p);
  for (const auto& c : codes) {
    if (c.values.size() != p) throw ShapeError("attributes_to_tensor: ragged attribute batch");
    values.insert(values.end(), c.values.begin(), c.values.end());
  }
  return Tensor<T>(Shape{codes.size(), p}, std::move(values));
}

template Tensor<float> attributes_to_tensor(const std::vector<AttributeVector>&);
template Tensor<double> attributes_to_tensor(const std::vector<AttributeVector>&);

}  // namespace agewave

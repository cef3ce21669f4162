#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

/// One categorical attribute and its ordered vocabulary.
struct AttributeGroup {
  std::string name;
  std::vector<std::string> values;
};

/// Declared attribute layout; the code is the concatenation of one one-hot
/// block per group, in declaration order.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<AttributeGroup> groups);

  const std::vector<AttributeGroup>& groups() const { return groups_; }
  std::size_t dim() const { return dim_; }
  std::size_t offset(std::size_t group) const { return offsets_.at(group); }
  const AttributeGroup& group(const std::string& name) const;
  std::size_t group_index(const std::string& name) const;

  /// Parses "shape=circle|square;hue=A|B".
  static AttributeSchema parse(const std::string& text);
  std::string to_string() const;

 private:
  std::vector<AttributeGroup> groups_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

/// p-dimensional 0/1 code, exactly one 1 per categorical group.
struct AttributeVector {
  std::vector<float> values;

  bool operator==(const AttributeVector&) const = default;

  /// One label per group, in schema order.
  static AttributeVector encode(const AttributeSchema& schema,
                                const std::vector<std::string>& labels);
  std::vector<std::string> decode(const AttributeSchema& schema) const;
  /// Index of the active value within each group.
  std::vector<std::size_t> categories(const AttributeSchema& schema) const;
  void validate(const AttributeSchema& schema) const;
  /// Compact key such as "circle/A", used to name attribute cells.
  std::string cell_name(const AttributeSchema& schema) const;
};

/// Stacks codes into an [N, p] tensor.
template <typename T>
Tensor<T> attributes_to_tensor(const std::vector<AttributeVector>& codes);

}  // namespace agewave

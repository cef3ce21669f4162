#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "agewave/tensor.hpp"

namespace agewave {

using ScalarFunction = std::function<Tensord(const std::vector<Tensord>&)>;

/// Largest norm-wise relative error, over all inputs that require grad,
/// between backward() and central differences with step `step`:
/// ||analytic - numeric|| / max(||analytic||, ||numeric||).
double gradcheck(const ScalarFunction& fn, const std::vector<Tensord>& inputs,
                 double step = 1e-5);

struct GradcheckCase {
  ScalarFunction fn;
  std::vector<Tensord> inputs;
};

/// A named, seedable gradient check.
struct GradcheckEntry {
  std::string name;
  std::function<GradcheckCase(std::uint64_t seed)> make;
};

/// Every differentiable op, every loss term and both networks.
const std::vector<GradcheckEntry>& gradcheck_registry();

struct GradcheckReport {
  std::string name;
  double worst_error = 0.0;
  std::size_t seeds = 0;
  bool passed = false;
};

/// Runs every registry entry over seeds 1..seeds against `tolerance`.
std::vector<GradcheckReport> run_gradcheck_suite(std::size_t seeds, double tolerance);

}  // namespace agewave

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "agewave/objectives.hpp"
#include "agewave/ops.hpp"

namespace agewave::testing {

/// A finite toy support with three empirical populations given as per-point counts.
struct ToySupport {
  std::size_t points = 16;
  std::vector<std::size_t> old_counts, fake_counts, young_counts;

  std::vector<double> probabilities(const std::vector<std::size_t>& counts) const {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    std::vector<double> p(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) p[i] = static_cast<double>(counts[i]) / total;
    return p;
  }
};

inline ToySupport make_toy_support(std::uint64_t seed, std::size_t points = 16) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> count(0, 8);
  ToySupport s;
  s.points = points;
  for (std::size_t i = 0; i < points; ++i) {
    s.old_counts.push_back(count(rng));
    s.fake_counts.push_back(count(rng));
    s.young_counts.push_back(count(rng));
    // Every point carries some mass, so every table entry has a defined optimum.
    if (s.old_counts[i] + s.fake_counts[i] + s.young_counts[i] == 0) s.fake_counts[i] = 1;
  }
  for (auto* counts : {&s.old_counts, &s.fake_counts, &s.young_counts})
    if (std::all_of(counts->begin(), counts->end(), [](std::size_t c) { return c == 0; }))
      (*counts)[0] = 1;
  return s;
}

/// Ternary search of the pointwise objective p_o (d-1)^2 + (p_f + p_y) d^2 over [-1, 2].
inline std::vector<double> pointwise_minimizer(const ToySupport& s) {
  const auto po = s.probabilities(s.old_counts), pf = s.probabilities(s.fake_counts),
             py = s.probabilities(s.young_counts);
  std::vector<double> d(s.points);
  for (std::size_t i = 0; i < s.points; ++i) {
    auto f = [&](double v) { return po[i] * (v - 1) * (v - 1) + (pf[i] + py[i]) * v * v; };
    double lo = -1.0, hi = 2.0;
    for (int it = 0; it < 200; ++it) {
      const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (f(m1) < f(m2))
        hi = m2;
      else
        lo = m1;
    }
    d[i] = 0.5 * (lo + hi);
  }
  return d;
}

inline std::vector<double> closed_form_optimum(const ToySupport& s) {
  const auto po = s.probabilities(s.old_counts), pf = s.probabilities(s.fake_counts),
             py = s.probabilities(s.young_counts);
  std::vector<double> d(s.points);
  for (std::size_t i = 0; i < s.points; ++i) d[i] = po[i] / (po[i] + pf[i] + py[i]);
  return d;
}

inline std::vector<std::size_t> expand(const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < counts.size(); ++i) idx.insert(idx.end(), counts[i], i);
  return idx;
}

/// Gradient descent on the three-term least-squares discriminator loss over a
/// lookup-table D. Each population is listed in full, so the batch means are
/// the exact expectations.
inline std::vector<double> train_tabular_discriminator(const ToySupport& s,
                                                       std::size_t iterations = 2000,
                                                       double lr = 0.0) {
  const auto old_idx = expand(s.old_counts), fake_idx = expand(s.fake_counts),
             young_idx = expand(s.young_counts);
  if (lr == 0.0) {
    // Largest per-entry curvature of the objective bounds a stable step.
    const auto po = s.probabilities(s.old_counts), pf = s.probabilities(s.fake_counts),
               py = s.probabilities(s.young_counts);
    double curvature = 0.0;
    for (std::size_t i = 0; i < s.points; ++i)
      curvature = std::max(curvature, 2.0 * (po[i] + pf[i] + py[i]));
    lr = 1.0 / curvature;
  }
  Tensord table(Shape{s.points}, 0.5, true);
  auto empty_or = [&](const std::vector<std::size_t>& idx) {
    return idx.empty() ? Tensord(Shape{1}, 0.0) : gather(table, idx);
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    table.zero_grad();
    auto loss = loss_gan_d(empty_or(old_idx), empty_or(fake_idx), empty_or(young_idx));
    loss.backward();
    auto v = table.mutable_data();
    for (std::size_t i = 0; i < s.points; ++i) v[i] -= lr * table.grad()[i];
  }
  return {table.data().begin(), table.data().end()};
}

inline double sup_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace agewave::testing

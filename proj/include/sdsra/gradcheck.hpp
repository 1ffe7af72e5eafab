#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sdsra {

/// Central differences of `loss` with respect to every entry of `params`,
/// which is perturbed in place and restored.
std::vector<double> finite_difference(const std::function<double()>& loss, std::span<double> params, double step);

struct GradcheckCategory {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double worst_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCategory> categories;
  double step = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool passed() const;
  void print(std::ostream& out) const;
};

/// Compares analytic gradients with central differences on seeded random
/// instances of every differentiable loss in the library.
GradcheckReport run_gradcheck(std::uint64_t seed = 1, std::size_t cases = 100, double step = 1e-5,
                              double tolerance = 1e-4);

}  // namespace sdsra

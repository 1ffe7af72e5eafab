#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdsra::tabular {

struct VerifyRow {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  std::vector<std::string> observations;
  double seconds = 0.0;

  bool passed() const;
  void print(std::ostream& out) const;
};

struct VerifyTolerances {
  double contraction_slack = 1e-9;
  double monotone_slack = 1e-8;
  double residual = 1e-8;
  double dominance_slack = 1e-8;
  double anchor = 1e-9;
  double jensen_slack = 1e-12;
  double evaluation_tol = 1e-10;
};

/// Runs the soft-Bellman property suite on `cases` seeded random MDPs with
/// at most 6 states and 6 actions, plus the closed-form anchors and the
/// mixture-entropy checks.
VerifyReport run_tabular_verify(std::uint64_t seed = 1, std::size_t cases = 100,
                                std::size_t mixture_instances = 10'000, const VerifyTolerances& tol = {});

}  // namespace sdsra::tabular

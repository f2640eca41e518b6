#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace bsf::lab {

struct LabConfig {
  std::size_t rows = 8;
  std::size_t features = 6;
  double lambda = 0.0;
  std::size_t draws = 200000;
  std::uint64_t seed = 0;
};

// One random instance with random w ~ N(0,1) and p ~ U(0,1), evaluated three ways.
struct LabRecord {
  LabConfig config;
  std::vector<double> w;
  std::vector<double> p;
  double analytic = 0.0;
  // Absent when features exceed the enumeration limit.
  std::optional<double> brute_force;
  double monte_carlo = 0.0;
  double standard_error = 0.0;
  // |analytic − brute_force| (or |analytic − monte_carlo| without enumeration).
  double max_discrepancy = 0.0;
  // |analytic − monte_carlo| / standard_error.
  double monte_carlo_z = 0.0;
};

LabRecord run_lab(const LabConfig& config);

}  // namespace bsf::lab

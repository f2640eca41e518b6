#include "bsf/lab/lab_run.hpp"

#include <cmath>

#include "bsf/core/error.hpp"
#include "bsf/lab/regression_lab.hpp"

namespace bsf::lab {

LabRecord run_lab(const LabConfig& config) {
  if (config.rows == 0 || config.features == 0) throw InputError("lab instance needs positive dimensions");
  RngStream rng(config.seed, 0x1AB);
  const auto inst = ObjectiveInstance::random(config.rows, config.features, rng);
  LabRecord rec;
  rec.config = config;
  for (std::size_t j = 0; j < config.features; ++j) rec.w.push_back(rng.normal());
  for (std::size_t j = 0; j < config.features; ++j) rec.p.push_back(rng.uniform());
  rec.analytic = analytic_objective(inst, rec.w, rec.p, config.lambda);
  if (config.features <= kMaxEnumeratedFeatures)
    rec.brute_force = brute_force_objective(inst, rec.w, rec.p, config.lambda);
  RngStream mc_rng = rng.split(1);
  const auto mc = monte_carlo_objective(inst, rec.w, rec.p, config.lambda, config.draws, mc_rng);
  rec.monte_carlo = mc.estimate;
  rec.standard_error = mc.standard_error;
  const double mc_gap = std::abs(rec.analytic - rec.monte_carlo);
  rec.max_discrepancy = rec.brute_force ? std::abs(rec.analytic - *rec.brute_force) : mc_gap;
  rec.monte_carlo_z = mc.standard_error > 0.0 ? mc_gap / mc.standard_error : 0.0;
  return rec;
}

}  // namespace bsf::lab

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stablab/coeff.hpp"
#include "stablab/config.hpp"
#include "stablab/fem.hpp"
#include "stablab/mesh.hpp"
#include "stablab/solver.hpp"

namespace stablab {

// Fully resolved run description. `resolved` echoes every effective setting
// (defaults included) so run.report is self-describing.
struct ScenarioConfig {
  std::string scenario;  // neumann-rigidity | dumbbell | robin-certificate
                         // | identity-suite | manufactured
  DomainSpec domain;
  CoefficientFamily family;
  std::string nonlinearity;  // zero | linear | bistable | polynomial
  ScalarFn f;
  ScalarFn f_prime;
  std::optional<double> robin_alpha;
  std::vector<double> sweep_alphas;  // certificate sweep
  int sweep_pairs = 5;               // eigenpairs per alpha
  int mesh_levels = 3;               // level k runs at h / 2^k
  std::vector<std::string> seeds;    // seed descriptors
  std::uint64_t rng_seed = 1;
  std::string output_dir;
  NewtonOptions newton;
  double slack_constant = 2.0;  // Poincare tolerance C, recorded per scenario
  int phi_count = 20;           // random smooth test functions
  double delta_const = 2e-4;    // nonconstancy threshold
  double eps_grad = 1e-10;      // degenerate-gradient cut
  std::map<std::string, std::string> resolved;
};

// Validates and resolves a parsed config; rejects unknown scenarios, missing
// scenario-specific fields and unknown keys, naming file lines throughout.
ScenarioConfig resolve_scenario(const Config& cfg);

// Seed descriptors: constant:<v>, ramp:<amp> (amp x1),
// cosine:<amp>:<kx>:<ky> (amp cos(kx x1) cos(ky x2)), random:<amp>
// (nodal uniform draws from rng), blend:<amp> (amp tanh(x1/sqrt 2)).
Field seed_field(const Mesh& mesh, const std::string& descriptor,
                 std::mt19937_64& rng);

struct ScenarioResult {
  bool pass = true;
  std::vector<std::string> failures;  // one line per failed assertion
};

// Runs the configured scenario, writing run.report, per-level CSVs, field
// dumps and the MANIFEST into cfg.output_dir.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

}  // namespace stablab

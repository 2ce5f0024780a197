// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.
// Desk scale throughout: unit disk / rounded square, h in {0.08, 0.04, 0.02}.
// Every tolerance is pinned here; measured values the pins were calibrated
// against are noted inline.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "stablab/certify.hpp"
#include "stablab/levelset.hpp"
#include "stablab/scenario.hpp"

namespace {

using namespace stablab;

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Mesh disk(double h) {
  DomainSpec spec;
  spec.h = h;
  return generate(spec);
}

NonlinearProblem bistable_problem() {
  return neumann_problem(
      laplacian_family(), [](double u) { return u - u * u * u; },
      [](double u) { return 1.0 - 3.0 * u * u; });
}

// --- criterion 1: eigenvalues of matrix_A are {lambda1(|xi|), a(|xi|)} ------

Outcome c1_operator_spectrum() {
  const CoefficientFamily fams[] = {laplacian_family(), p_laplacian_family(3.0),
                                    mean_curvature_family()};
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> comp(-1.0, 1.0), expo(-2.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector2d xi(comp(rng), comp(rng));
    while (xi.norm() < 1e-3) xi = Eigen::Vector2d(comp(rng), comp(rng));
    xi *= std::pow(10.0, expo(rng));  // |xi| spans ~[1e-2, 10]
    const double t = xi.norm();
    for (const auto& fam : fams) {
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(matrix_A(fam, xi));
      Eigen::Vector2d want(eval_a(fam, t), eval_lambda1(fam, t));
      if (want(0) > want(1)) std::swap(want(0), want(1));
      for (int k = 0; k < 2; ++k)
        worst = std::max(worst,
                         std::abs(es.eigenvalues()(k) - want(k)) / std::abs(want(k)));
    }
  }
  // measured worst 2.7e-14 over 1000 draws x 3 families
  return {worst <= 1e-12, fmt("worst relative error %.2e (bound 1e-12)", worst)};
}

// --- criterion 2: curvature identity residual on the annulus ----------------

Outcome c2_curvature_identity() {
  std::vector<double> res;
  for (const double h : {0.08, 0.04, 0.02}) {
    DomainSpec spec;
    spec.kind = DomainSpec::Kind::Annulus;
    spec.h = h;
    spec.radius = 1.0;
    spec.inner_radius = 0.5;
    const Mesh mesh = generate(spec);
    const Field u = recover_derivatives(make_field(
        mesh, [](const Eigen::Vector2d& p) { return 0.5 * p.squaredNorm(); }));
    res.push_back(curvature_identity_residual(u).cwiseAbs().maxCoeff());
  }
  // measured 1.86e-2 / 8.25e-3 / 3.69e-3: ratios 0.443, 0.448
  bool ok = res[2] < 0.05;
  for (int i = 1; i < 3; ++i) {
    const double ratio = res[i] / res[i - 1];
    ok = ok && ratio >= 0.35 && ratio <= 0.65;  // halves within +-30%
  }
  return {ok, fmt("residuals %.3e / %.3e / %.3e", res[0], res[1], res[2])};
}

// --- criterion 3: constant-solution stability oracle lambda_min = -f'(c) ----

Outcome c3_constant_stability() {
  const Mesh mesh = disk(0.04);
  const NonlinearProblem pb = bistable_problem();
  const StabilityReport one = classify(pb, make_field(mesh, 1.0));
  const StabilityReport zero = classify(pb, make_field(mesh, 0.0));
  const bool ok =
      std::abs(one.lambda_min - 2.0) <= 1e-3 && std::abs(zero.lambda_min + 1.0) <= 1e-3;
  return {ok, fmt("u=1: %.6f (want 2), u=0: %.6f (want -1)", one.lambda_min,
                  zero.lambda_min)};
}

// --- criterion 4: rounded-square Neumann spectrum vs pi^2 -------------------

Outcome c4_neumann_spectrum() {
  std::vector<double> err;
  double finest = 0.0;
  for (const double h : {0.08, 0.04, 0.02}) {
    DomainSpec spec;
    spec.kind = DomainSpec::Kind::Rectangle;
    spec.h = h;
    spec.width = 1.0;
    spec.height = 1.0;
    spec.rounding = 0.05;
    const Mesh mesh = generate(spec);
    const auto pairs =
        smallest_eigenpairs(stiffness_matrix(mesh), mass_matrix(mesh), 2);
    finest = pairs[1].value;
    err.push_back(std::abs(pairs[1].value - M_PI * M_PI) / (M_PI * M_PI));
  }
  // measured relative errors 8.8e-3 / 5.8e-3 / 4.9e-3 (rounding 0.05 floor)
  const bool ok = err[2] < 0.02 && err[1] < err[0] && err[2] < err[1];
  return {ok, fmt("lambda2 = %.5f at h = 0.02, relative errors %.2e -> %.2e",
                  finest, err[0], err[2])};
}

// --- shared scenario runs for criteria 5 and 10 ------------------------------

struct ScenarioRun {
  std::string name;
  bool pass = false;
  std::size_t failures = 0;
  std::map<std::string, std::string> report;
  std::filesystem::path dir;
};

std::map<std::string, std::string> load_report(const std::filesystem::path& path) {
  std::map<std::string, std::string> kv;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto sep = line.find(" = ");
    if (sep != std::string::npos) kv[line.substr(0, sep)] = line.substr(sep + 3);
  }
  return kv;
}

const std::vector<ScenarioRun>& scenario_runs() {
  static const std::vector<ScenarioRun> runs = [] {
    const std::filesystem::path base = "acceptance_work";
    std::filesystem::remove_all(base);
    const std::pair<const char*, const char*> specs[] = {
        {"identity-suite", ""},
        {"neumann-rigidity", ""},
        {"dumbbell", ""},
        {"robin-certificate",
         "robin_alpha = -0.5\nsweep.alphas = -0.5, -0.25, 0.25, 0.5\n"},
        {"manufactured", ""}};
    std::vector<ScenarioRun> out;
    for (const auto& [name, extra] : specs) {
      ScenarioRun run;
      run.name = name;
      run.dir = base / name;
      std::ostringstream cfg;
      cfg << "scenario = " << name << "\noutput_dir = " << run.dir.string() << "\n"
          << extra;
      const ScenarioResult res =
          run_scenario(resolve_scenario(parse_config_text(cfg.str(), "acceptance.cfg")));
      run.pass = res.pass;
      run.failures = res.failures.size();
      run.report = load_report(run.dir / "run.report");
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

// --- criterion 5: Poincare slack for every stable solution -------------------

Outcome c5_poincare_slack() {
  bool ok = true;
  double worst_margin = 1e300;  // min of (slack + C h) over all recorded sweeps
  std::string cs;
  std::size_t sweeps = 0;
  for (const auto& run : scenario_runs()) {
    ok = ok && run.pass;
    const double C = std::stod(run.report.at("config.poincare.slack_constant"));
    const double h0 = std::stod(run.report.at("config.domain.h"));
    cs += (cs.empty() ? "" : ", ") + run.name + " C=" + run.report.at(
        "config.poincare.slack_constant");
    std::size_t here = 0;
    for (const auto& [key, value] : run.report) {
      if (key.rfind("assert.", 0) == 0 && key.find(".poincare.") != std::string::npos)
        ok = ok && value == "pass";
      const auto pos = key.find(".poincare.level");
      if (pos == std::string::npos || key.find(".worst_slack") == std::string::npos)
        continue;
      const int level = std::atoi(key.c_str() + pos + 15);
      const double h = h0 / double(1 << level);
      worst_margin = std::min(worst_margin, std::stod(value) + C * h);
      ++here;
    }
    // scenarios that solve (rigidity, dumbbell, manufactured) must sweep phi
    if (run.name != "identity-suite" && run.name != "robin-certificate")
      ok = ok && here > 0;
    sweeps += here;
  }
  ok = ok && sweeps > 0 && worst_margin >= 0.0;
  return {ok, fmt("%g stable-solution sweeps, min(slack + C h) = %.3e; ",
                  double(sweeps), worst_margin) + cs};
}

// --- criterion 6: rigidity on the disk, ten nonconstant seeds ---------------

Outcome c6_rigidity() {
  const Mesh mesh = disk(0.04);
  std::mt19937_64 rng(20260815);
  std::vector<Field> seeds;
  for (const char* d :
       {"ramp:0.5", "ramp:-1", "ramp:2", "cosine:0.8:1:0", "cosine:0.8:0:1",
        "cosine:0.5:1:1", "cosine:1:2:1", "random:0.3", "random:1", "blend:1"})
    seeds.push_back(seed_field(mesh, d, rng));
  const RigidityReport rep = rigidity_experiment(bistable_problem(), mesh, seeds);
  int converged = 0, violations = 0;
  for (const auto& row : rep.rows) {
    if (!row.converged) continue;
    ++converged;
    if (!(row.nonconstancy < 1e-4 || row.lambda_min < -1e-6)) ++violations;
  }
  // measured: all 10 converge to constants, nonconstancy <= 5.5e-11
  const bool ok = rep.convex && !rep.any_violation && violations == 0 && converged >= 7;
  return {ok, fmt("%g/10 converged, %g violations", double(converged),
                  double(violations))};
}

// --- criterion 7: dumbbell pattern vs refined-mesh fixture ------------------

Outcome c7_dumbbell() {
  const auto fixture = load_report(std::filesystem::path(FIXTURE_DIR) /
                                   "dumbbell_fixture.txt");
  const double ref_lmin = std::stod(fixture.at("lambda_min"));
  const double ref_nonconst = std::stod(fixture.at("nonconstancy"));
  DomainSpec spec;
  spec.kind = DomainSpec::Kind::Dumbbell;
  spec.h = 0.06;
  spec.neck_width = 0.1;
  const Mesh mesh = generate(spec);
  std::mt19937_64 rng(1);
  const NonlinearProblem pb = bistable_problem();
  const auto [u, rep] = solve(pb, seed_field(mesh, "blend:1", rng));
  const double nonconst = (u.values.array() - u.values.mean()).abs().maxCoeff();
  const StabilityReport st = classify(pb, u);
  // measured h = 0.06: lambda_min 1.6638 vs fixture 1.6666 (0.17% apart)
  const bool ok = rep.converged && nonconst > 0.5 && st.lambda_min > 0.0 &&
                  std::abs(st.lambda_min - ref_lmin) <= 0.05 * ref_lmin &&
                  std::abs(nonconst - ref_nonconst) <= 0.05 * ref_nonconst;
  return {ok, fmt("lambda_min %.4f (fixture %.4f), nonconstancy %.4f",
                  st.lambda_min, ref_lmin, nonconst)};
}

// --- criterion 8: convex boundary sign <= C h on disk Neumann solutions -----

Outcome c8_convex_sign() {
  // Newton-converged constant: the quantity vanishes identically.
  const Mesh coarse = disk(0.08);
  const NonlinearProblem pb = bistable_problem();
  const auto [uc, repc] = solve(pb, make_field(coarse, 0.9));
  bool ok = repc.converged &&
            convex_boundary_sign(pb, recover_derivatives(uc)).max_value <= 1e-12;

  // Exact nonconstant Neumann solution: second eigenfunction J1(j r) cos(th)
  // of the disk, f(u) = mu u with mu = j^2, j the first zero of J1'.
  const double j = 1.8411837813406593;
  const double mu = j * j;
  const NonlinearProblem eig = neumann_problem(
      laplacian_family(), [mu](double v) { return mu * v; },
      [mu](double) { return mu; });
  std::vector<double> maxes;
  for (const double h : {0.08, 0.04, 0.02}) {
    const Mesh mesh = disk(h);
    const Field u = recover_derivatives(
        make_field(mesh, [j](const Eigen::Vector2d& p) {
          const double r = p.norm();
          return r < 1e-14 ? 0.0 : std::cyl_bessel_j(1, j * r) * p.x() / r;
        }));
    const ConvexBoundarySign cb = convex_boundary_sign(eig, u);
    maxes.push_back(cb.max_value);
    ok = ok && cb.max_value <= 0.05 * h;  // measured <= 0.030 h
  }
  ok = ok && maxes[1] < maxes[0] && maxes[2] < maxes[1];
  return {ok, fmt("max/h = %.4f / %.4f / %.4f (bound 0.05)", maxes[0] / 0.08,
                  maxes[1] / 0.04, maxes[2] / 0.02)};
}

// --- criterion 9: Robin frame residuals decay over three levels -------------

Outcome c9_robin_frame() {
  std::vector<std::array<double, 3>> norms;
  for (const double h : {0.08, 0.04, 0.02}) {
    const Mesh mesh = disk(h);
    const SpMat Q = stiffness_matrix(mesh) - 0.5 * boundary_mass_matrix(mesh);
    const EigenPair g = smallest_eigenpair(Q, mass_matrix(mesh));
    Field u = make_field(mesh);
    u.values = g.vector;
    const double mu = g.value;
    const BoundaryFrameData fr = boundary_frame(
        recover_derivatives(std::move(u)), -0.5, [mu](double v) { return mu * v; });
    norms.push_back({fr.residual_robin.cwiseAbs().maxCoeff(),
                     fr.residual_metric.cwiseAbs().maxCoeff(),
                     fr.residual_expansion.cwiseAbs().maxCoeff()});
  }
  // measured per-step ratios <= 0.54, overall <= 0.21 for all three columns
  bool ok = true;
  std::string detail;
  const char* names[] = {"robin", "metric", "expansion"};
  for (int c = 0; c < 3; ++c) {
    ok = ok && norms[1][c] <= 0.75 * norms[0][c] && norms[2][c] <= 0.75 * norms[1][c] &&
         norms[2][c] <= 0.45 * norms[0][c];
    detail += std::string(names[c]) + fmt(" %.2e -> %.2e; ", norms[0][c], norms[2][c]);
  }
  return {ok, detail};
}

// --- criterion 10: certificate soundness across the sweep -------------------

Outcome c10_certificate() {
  const auto& runs = scenario_runs();
  const auto it = std::find_if(runs.begin(), runs.end(),
                               [](const ScenarioRun& r) { return r.name == "robin-certificate"; });
  const ScenarioRun& robin = *it;
  bool ok = robin.pass && robin.report.at("assert.certificate.soundness") == "pass";
  const std::string status = robin.report.at("certificate.status");

  // re-verify fires -> unstable straight from the finest sweep table
  const int last = std::stoi(robin.report.at("config.mesh_levels")) - 1;
  std::ifstream csv(robin.dir / ("sweep_level" + std::to_string(last) + ".csv"));
  std::string line;
  std::getline(csv, line);  // header
  int fired = 0, rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cols;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() != 7) continue;
    ++rows;
    if (cols[4] == "1") {
      ++fired;
      ok = ok && cols[6] == "unstable";
    }
  }
  ok = ok && rows > 0;
  // a vacuous sweep must say so explicitly; frame decay (criterion 9 keys)
  // still binds either way via the scenario asserts checked above
  if (fired == 0) ok = ok && status.find("vacuous") != std::string::npos;
  for (const auto& [key, value] : robin.report)
    if (key.rfind("assert.frame.", 0) == 0) ok = ok && value == "pass";
  return {ok, fmt("%g fired of %g rows, all unstable; status: ", double(fired),
                  double(rows)) + status};
}

// --- criterion 11: Newton quadratic convergence and conservation ------------

Outcome c11_solver() {
  const Mesh mesh = disk(0.04);
  const NonlinearProblem pb = bistable_problem();
  NewtonOptions opts;
  opts.residual_tolerance = 1e-12;
  const auto [u, rep] = solve(pb, make_field(mesh, 1.8), opts);
  if (!rep.converged) return {false, "Newton did not converge"};
  const std::vector<double>& r = rep.residual_history;
  const double r0 = r.front();
  // last two quadratic-window steps: r_{k+1} r_0 / r_k^2 bounded (the raw
  // ratio scales as 1/residual; r_0 fixes the scale). Window excludes the
  // pre-asymptotic head (r_k > 1e-2 r_0) and the round-off tail
  // (r_{k+1} < 1e-12 r_0). Measured ratios 2.85, 3.02.
  std::vector<double> ratios;
  for (std::size_t k = 0; k + 1 < r.size(); ++k)
    if (r[k] <= 1e-2 * r0 && r[k + 1] >= 1e-12 * r0)
      ratios.push_back(r[k + 1] * r0 / (r[k] * r[k]));
  bool ok = ratios.size() >= 2;
  for (std::size_t i = ratios.size() >= 2 ? ratios.size() - 2 : 0; i < ratios.size(); ++i)
    ok = ok && ratios[i] <= 10.0;
  const double conservation = std::abs(assemble_residual(pb, u).sum());
  ok = ok && conservation <= 1e-8 * mesh.area();  // measured 2.5e-14
  const double worst = ratios.empty() ? -1.0 : *std::max_element(ratios.end() - std::min<std::size_t>(2, ratios.size()), ratios.end());
  return {ok, fmt("quadratic ratio %.3f (bound 10), conservation %.2e", worst,
                  conservation)};
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* label;
    Outcome (*fn)();
  };
  const Entry table[] = {
      {1, "operator spectrum", c1_operator_spectrum},
      {2, "curvature identity on the annulus", c2_curvature_identity},
      {3, "constant-solution stability", c3_constant_stability},
      {4, "Neumann spectrum sanity", c4_neumann_spectrum},
      {5, "Poincare slack across scenarios", c5_poincare_slack},
      {6, "rigidity on the disk", c6_rigidity},
      {7, "dumbbell counterexample", c7_dumbbell},
      {8, "convex boundary sign", c8_convex_sign},
      {9, "Robin boundary frame decay", c9_robin_frame},
      {10, "certificate soundness", c10_certificate},
      {11, "solver quadratic convergence", c11_solver},
  };
  bool all = true;
  for (const Entry& e : table) {
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    std::printf("criterion %2d %s - %s (%s)\n", e.id, o.ok ? "PASS" : "FAIL",
                e.label, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.ok;
  }
  return all ? 0 : 1;
}

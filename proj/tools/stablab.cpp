#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "stablab/config.hpp"
#include "stablab/mesh.hpp"
#include "stablab/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"stability laboratory for quasilinear elliptic problems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string mesh_out;
  std::uint64_t seed = 0;
  int mesh_levels = 0;

  CLI::App* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", config_path, "scenario config file")->required();
  CLI::Option* opt_out =
      run->add_option("--output-dir", output_dir, "artifact directory");
  CLI::Option* opt_seed = run->add_option("--seed", seed, "RNG seed override");
  CLI::Option* opt_levels =
      run->add_option("--mesh-level", mesh_levels, "mesh level count override")
          ->check(CLI::Range(1, 6));

  CLI::App* validate =
      app.add_subcommand("validate", "resolve a config and print it");
  validate->add_option("config", config_path, "scenario config file")
      ->required();

  CLI::App* mesh_cmd =
      app.add_subcommand("mesh", "generate a mesh from a domain spec");
  mesh_cmd->add_option("domain-spec", config_path, "domain config file")
      ->required();
  mesh_cmd->add_option("-o,--output", mesh_out, "mesh output file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (run->parsed()) {
      const stablab::Config cfg = stablab::parse_config_file(config_path);
      stablab::ScenarioConfig sc = stablab::resolve_scenario(cfg);
      if (opt_out->count() > 0) {
        sc.output_dir = output_dir;
        sc.resolved["output_dir"] = output_dir;
      }
      if (opt_seed->count() > 0) {
        sc.rng_seed = seed;
        sc.resolved["seed"] = std::to_string(seed);
      }
      if (opt_levels->count() > 0) {
        sc.mesh_levels = mesh_levels;
        sc.resolved["mesh_levels"] = std::to_string(mesh_levels);
      }
      const stablab::ScenarioResult result = stablab::run_scenario(sc);
      if (!result.pass) {
        std::fprintf(stderr, "stablab: %zu assertion(s) failed:\n",
                     result.failures.size());
        for (const std::string& f : result.failures) {
          std::fprintf(stderr, "  %s\n", f.c_str());
        }
        std::fprintf(stderr, "report: %s/run.report\n", sc.output_dir.c_str());
        return 2;
      }
      std::printf("pass (report in %s)\n", sc.output_dir.c_str());
      return 0;
    }
    if (validate->parsed()) {
      const stablab::Config cfg = stablab::parse_config_file(config_path);
      const stablab::ScenarioConfig sc = stablab::resolve_scenario(cfg);
      for (const auto& [key, value] : sc.resolved) {
        std::printf("%s = %s\n", key.c_str(), value.c_str());
      }
      return 0;
    }
    if (mesh_cmd->parsed()) {
      stablab::Config cfg = stablab::parse_config_file(config_path);
      const stablab::DomainSpec spec = stablab::domain_from_config(cfg);
      cfg.require_all_used();
      const stablab::Mesh mesh = stablab::generate(spec);
      stablab::validate_mesh(mesh);
      stablab::save_mesh(mesh, mesh_out);
      std::printf("wrote %s (%d nodes, %d triangles)\n", mesh_out.c_str(),
                  mesh.node_count(), mesh.triangle_count());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stablab: error: %s\n", e.what());
    return 1;
  }
  return 1;
}

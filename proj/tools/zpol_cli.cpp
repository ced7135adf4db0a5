// zpol: command-line front end for the Zeeman polariton models.
//
//   zpol spectrum       --config run.yaml [--out DIR]
//   zpol sweep          --config run.yaml [--axis field|temperature] [--threads N]
//   zpol fit            --config run.yaml --data vrs.csv
//   zpol dicke-compare  --config run.yaml
//   zpol diagnostics    --config run.yaml

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "zpol/io/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Zeeman-split spin ensembles in a dielectric slab cavity"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  std::string axis = "field";
  std::optional<std::string> data_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (overrides ZPOL_OUTPUT_DIR and output.dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
  };
  CLI::App* spectrum = app.add_subcommand("spectrum", "transmission, reflection and mu_r on the frequency grid");
  CLI::App* sweep = app.add_subcommand("sweep", "transmission maps over field or temperature");
  CLI::App* fit = app.add_subcommand("fit", "fit g0 to a measured VRS(T) dataset");
  CLI::App* dicke = app.add_subcommand("dicke-compare", "finite-N Dicke splitting versus the Hopfield limit");
  CLI::App* diagnostics = app.add_subcommand("diagnostics", "cavity and coupling figures in closed form");
  for (CLI::App* sub : {spectrum, sweep, fit, dicke, diagnostics}) common(sub);
  sweep->add_option("--axis", axis, "sweep axis")->check(CLI::IsMember({"field", "temperature"}));
  fit->add_option("--data", data_path, "CSV with temperature_K,vrs_GHz[,vrs_err_GHz]")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : zpol::io::kExitConfig;
  }

  return zpol::io::run_command([&]() -> int {
    const zpol::io::RunConfig cfg = zpol::io::load_config(config_path);
    zpol::io::RunContext ctx;
    ctx.out_dir = zpol::io::resolve_output_dir(out_dir, cfg);
    ctx.threads = threads;
    ctx.axis = axis;
    ctx.data_path = data_path;
    if (*spectrum) return zpol::io::run_spectrum(cfg, ctx);
    if (*sweep) return zpol::io::run_sweep(cfg, ctx);
    if (*fit) return zpol::io::run_fit(cfg, ctx);
    if (*dicke) return zpol::io::run_dicke_compare(cfg, ctx);
    return zpol::io::run_diagnostics(cfg, ctx);
  });
}

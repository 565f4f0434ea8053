#include "drape/error.hpp"
#include "drape/io/commands.hpp"
#include "drape/io/config.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool deterministic = false;
};

drape::RunConfig resolve_config(const GlobalOptions& g) {
  drape::RunConfig c = g.config.empty() ? drape::RunConfig{} : drape::load_run_config(g.config);
  if (g.seed) {
    c.train.seed = *g.seed;
    c.train.sampler.seed = *g.seed;
    c.bench.seed = *g.seed;
  }
  if (g.threads) c.train.batch.threads = *g.threads;
  if (g.deterministic) c.train.batch.threads = 1;
  c.validate();
  return c;
}


}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural implicit cloth draping"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "Run configuration file (INI)");
  app.add_option("--seed", g.seed, "Override every random seed in the configuration");
  app.add_option("--out", g.out, "Output directory (train) or file (atlas, export, bench-encoding)");
  app.add_option("--threads", g.threads, "Worker threads for batch evaluation")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Force serial evaluation");

  auto* atlas = app.add_subcommand("atlas", "Rasterize the rest atlas of a garment OBJ");
  std::string garment;
  int atlas_res = 64;
  bool png = false;
  atlas->add_option("garment", garment, "Garment OBJ with texture coordinates")->required();
  atlas->add_option("--resolution", atlas_res, "Atlas resolution");
  atlas->add_flag("--png", png, "Also write a PNG preview");

  auto* train = app.add_subcommand("train", "Train a drape from a run configuration");
  std::string resume;
  train->add_option("--resume", resume, "Continue from a saved state.bin");

  auto* exporter = app.add_subcommand("export", "Write the draped surface as OBJ");
  std::string checkpoint;
  std::optional<std::string> mode;
  std::optional<int> export_res;
  exporter->add_option("checkpoint", checkpoint, "Model checkpoint")->required();
  exporter->add_option("--mode", mode, "vertices or grid")->check(CLI::IsMember({"vertices", "grid"}));
  exporter->add_option("--resolution", export_res, "Grid resolution for grid mode");

  auto* bench = app.add_subcommand("bench-encoding", "Compare input encodings on a supervised sine target");

  auto* eval = app.add_subcommand("eval", "Dense evaluation of a checkpoint");
  eval->add_option("checkpoint", checkpoint, "Model checkpoint")->required();

  for (auto* sub : {atlas, train, exporter, bench, eval}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (atlas->parsed()) {
      drape::cmd_atlas(garment, atlas_res, g.out.empty() ? "atlas.bin" : g.out, png, std::cout);
      return 0;
    }
    drape::RunConfig config;
    try {
      config = resolve_config(g);
    } catch (const drape::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
    if (train->parsed()) {
      if (!g.out.empty()) config.train.output_dir = g.out;
      drape::cmd_train(config, std::cout, resume);
    } else if (exporter->parsed()) {
      if (mode) config.exporter.mode = drape::parse_export_mode(*mode);
      if (export_res) config.exporter.resolution = *export_res;
      drape::cmd_export(checkpoint, config, g.out.empty() ? "drape.obj" : g.out, std::cout);
    } else if (bench->parsed()) {
      drape::cmd_bench_encoding(config, g.out.empty() ? "bench_encoding.csv" : g.out, std::cout);
    } else if (eval->parsed()) {
      drape::cmd_eval(checkpoint, config, std::cout);
    }
    return 0;
  } catch (const drape::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == drape::ErrorCode::ConfigError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

#pragma once

#include "drape/io/config.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace drape {

struct AtlasSummary {
  int resolution = 0;
  double valid_fraction = 0.0;
};

/// Reads a garment OBJ, rasterizes its rest atlas and writes it to `out`
/// (plus a PNG preview when `png` is set).
AtlasSummary cmd_atlas(const std::string& garment_obj, int resolution, const std::string& out, bool png,
                       std::ostream& report);

struct TrainSummary {
  int epochs = 0;
  int converged_at = -1;
  DenseReport final_eval;
  std::size_t parameters = 0;
  double seconds = 0.0;
  std::string checkpoint;
};

/// Trains per the config, writing model.ckpt, loss_log.csv, state.bin and
/// summary.json into config.train.output_dir. `resume_state`, if set,
/// continues a previous run.
TrainSummary cmd_train(const RunConfig& config, std::ostream& report, const std::string& resume_state = {});

struct ExportedMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec2> uvs;
  std::vector<Triangle> triangles;
};

/// Vertices mode keeps the garment connectivity; grid mode resamples the
/// valid part of an R x R UV lattice.
ExportedMesh export_surface(const SurfaceModel<float>& model, const RestMapping& rest, ExportMode mode, int resolution);

ExportedMesh cmd_export(const std::string& checkpoint, const RunConfig& config, const std::string& out_obj,
                        std::ostream& report);

std::vector<BenchEntry> cmd_bench_encoding(const RunConfig& config, const std::string& out_csv, std::ostream& report);

/// Prints key=value lines for the dense evaluation of a checkpoint.
DenseReport cmd_eval(const std::string& checkpoint, const RunConfig& config, std::ostream& report);

void print_dense_report(const DenseReport& r, std::ostream& os);

}  // namespace drape

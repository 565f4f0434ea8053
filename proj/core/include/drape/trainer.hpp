#pragma once

#include "drape/losses.hpp"
#include "drape/neural_surface.hpp"
#include "drape/objective.hpp"
#include "drape/optimizer.hpp"
#include "drape/sampler.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace drape {

class ColliderMesh;
class RestMapping;
struct MeshTopology;

enum class SamplingMode { adaptive, uniform, mesh_connectivity };

std::string to_string(SamplingMode m);
SamplingMode parse_sampling_mode(const std::string& s);

struct ConvergenceConfig {
  int window = 200;
  double tolerance = 1e-4;
  /// Stop training once converged instead of running every epoch.
  bool stop_early = false;
};

struct TrainConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  LossConfig loss;
  SamplerConfig sampler;
  SamplingMode sampling_mode = SamplingMode::adaptive;
  int epochs = 1000;
  std::uint64_t seed = 0;
  ConvergenceConfig convergence;
  BatchOptions batch;
  /// Redraws allowed for a point whose structure is invalid before it is
  /// dropped from the batch.
  int max_resample = 10;
  /// Periodic checkpoint interval in epochs; 0 keeps only the final one.
  int checkpoint_every = 0;
  /// Directory for the CSV log and checkpoints; empty writes nothing.
  std::string output_dir;

  /// Every violated constraint, one message each.
  std::vector<std::string> problems() const;
  /// Throws ConfigError listing all problems.
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;
  double min_spacing = 0.0;
  double epoch_ms = 0.0;
  int structures = 0;
  int dropped = 0;
};

/// Random streams used by one training run. Keeping them apart means the
/// pdf probes never shift the point or rotation draws.
struct TrainRngs {
  Rng probe;
  Rng points;
  Rng theta;

  explicit TrainRngs(std::uint64_t seed = 0);
};

struct TrainState {
  int epoch = 0;
  SurfaceModel<float> model;
  DiscretePdf pdf;
  Optimizer optimizer;
  std::vector<EpochRecord> history;
  TrainRngs rngs;
  std::shared_ptr<const MeshTopology> topology;

  static TrainState initial(const TrainConfig& config);
};

/// Binary snapshot of a TrainState (model, pdf, optimizer moments, random
/// streams, history) for bit-identical resumption.
void save_train_state(const TrainState& state, const std::string& path);
TrainState load_train_state(const std::string& path);

/// One round of the sampler/optimizer game. Throws AllPointsInvalid when no
/// structure in the batch is valid and NonFiniteLoss on a non-finite loss
/// or gradient.
void train_epoch(TrainState& state, const TrainConfig& config, const RestMapping& rest, const ColliderMesh* collider);

struct TrainResult {
  SurfaceModel<float> model;
  std::vector<EpochRecord> history;
  std::vector<std::string> checkpoints;
  /// Number of completed epochs at which convergence was first detected,
  /// or -1.
  int converged_at = -1;
};

using EpochCallback = std::function<void(const TrainState&)>;

/// Runs `config.epochs` epochs (fewer if converged with stop_early),
/// writing the CSV log and checkpoints when an output directory is set.
/// `resume`, when given, continues from that state.
TrainResult train(const TrainConfig& config, const RestMapping& rest, const ColliderMesh* collider,
                  TrainState* resume = nullptr, const EpochCallback& on_epoch = {});

/// True when the mean total of the last `window` entries improved on the
/// mean of the window before it by less than `tol` (relative).
bool detect_convergence(std::span<const double> totals, int window, double tol);

/// Smallest history length at which detect_convergence first holds, or -1.
int convergence_epoch(std::span<const double> totals, int window, double tol);

std::vector<double> history_totals(const std::vector<EpochRecord>& history);

struct DenseReport {
  LossBreakdown loss;  // mean over valid cells
  int samples = 0;
  double mean_abs_strain = 0.0;
  double penetration_fraction = 0.0;
};

/// Structure losses at every valid cell center of a resolution x resolution
/// grid, theta drawn per cell (row-major) from a generator seeded by `seed`.
template <class Real>
DenseReport evaluate_dense(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                           int resolution, const LossConfig& config, std::uint64_t seed,
                           const BatchOptions& options = {});

inline constexpr const char* kLossLogHeader = "epoch,strain,bend,gravity,collision,total,min_spacing,epoch_ms";

}  // namespace drape

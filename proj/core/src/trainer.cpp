#include "drape/trainer.hpp"

#include "drape/collider.hpp"
#include "drape/error.hpp"
#include "drape/mesh_baseline.hpp"
#include "drape/rest_atlas.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace drape {

std::string to_string(SamplingMode m) {
  switch (m) {
    case SamplingMode::adaptive: return "adaptive";
    case SamplingMode::uniform: return "uniform";
    case SamplingMode::mesh_connectivity: return "mesh_connectivity";
  }
  return "adaptive";
}

SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "adaptive") return SamplingMode::adaptive;
  if (s == "uniform") return SamplingMode::uniform;
  if (s == "mesh_connectivity") return SamplingMode::mesh_connectivity;
  throw Error(ErrorCode::ParseError, "unknown sampling mode '" + s + "'");
}

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  try {
    model.validate();
  } catch (const Error& e) {
    out.push_back(std::string("model: ") + e.what());
  }
  check(optimizer.learning_rate > 0.0 && std::isfinite(optimizer.learning_rate), "train.learning_rate must be > 0");
  check(optimizer.clip_factor >= 0.0 && std::isfinite(optimizer.clip_factor), "train.gradient_clip must be >= 0");
  check(optimizer.decay > 0.0 && optimizer.decay <= 1.0, "train.lr_decay must be in (0, 1]");
  check(epochs >= 1, "train.epochs must be >= 1");
  check(loss.side > 0.0 && std::isfinite(loss.side), "train.structure_side must be > 0");
  for (auto [v, name] : {std::pair{loss.weights.strain, "weights.strain"}, {loss.weights.bend, "weights.bend"},
                         {loss.weights.gravity, "weights.gravity"}, {loss.weights.collision, "weights.collision"}})
    check(std::isfinite(v) && v >= 0.0, std::string(name) + " must be finite and >= 0");
  check(std::isfinite(loss.consts.mass) && loss.consts.mass >= 0.0, "physics.mass must be >= 0");
  check(std::isfinite(loss.consts.gravity) && loss.consts.gravity >= 0.0, "physics.gravity must be >= 0");
  check(std::abs(loss.consts.gravity_axis.norm() - 1.0) <= 1e-9, "physics.gravity_axis must be unit length");
  check(std::isfinite(loss.consts.collision_epsilon) && loss.consts.collision_epsilon >= 0.0,
        "physics.collision_epsilon must be >= 0");
  check(sampler.mu >= 0.0 && sampler.mu <= 1.0, "sampler.mu must lie in [0,1]");
  check(sampler.gamma >= 0.0 && sampler.gamma <= 1.0, "sampler.gamma must lie in [0,1]");
  check(sampler.pdf_rows >= 1 && sampler.pdf_cols >= 1, "sampler.pdf_rows and sampler.pdf_cols must be >= 1");
  check(sampler.n_points >= 1, "sampler.n_points must be >= 1");
  check(sampler.lloyd_iterations >= 0, "sampler.lloyd_iterations must be >= 0");
  check(sampler.min_spacing >= 0.0, "sampler.min_spacing must be >= 0");
  check(convergence.window >= 1, "convergence.window must be >= 1");
  check(convergence.tolerance >= 0.0, "convergence.tolerance must be >= 0");
  check(batch.chunk_size >= 1, "train.chunk_size must be >= 1");
  check(batch.threads >= 1, "train.threads must be >= 1");
  check(max_resample >= 0, "train.max_resample must be >= 0");
  check(checkpoint_every >= 0, "train.checkpoint_every must be >= 0");
  return out;
}

void TrainConfig::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& s : p) msg += "\n  " + s;
  throw Error(ErrorCode::ConfigError, msg);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

TrainRngs::TrainRngs(std::uint64_t seed)
    : probe(splitmix64(seed * 3 + 1)), points(splitmix64(seed * 3 + 2)), theta(splitmix64(seed * 3 + 3)) {}

TrainState TrainState::initial(const TrainConfig& config) {
  TrainState s;
  s.model = init_model<float>(config.model, config.seed);
  s.pdf = DiscretePdf::uniform(config.sampler.pdf_rows, config.sampler.pdf_cols);
  s.optimizer = Optimizer(config.optimizer, s.model.size());
  s.rngs = TrainRngs(config.seed ^ splitmix64(config.sampler.seed));
  return s;
}

namespace {

bool structure_ok(const RestMapping& rest, const Vec2& p, double theta, double side) {
  return rest.is_valid(p) && structure_is_valid(rest, build_structure_2d(p, side, theta));
}

void check_finite(const LossBreakdown& l, const GradientBuffer<float>& g, const TrainState& state,
                  const TrainConfig& config) {
  const bool ok = std::isfinite(l.weighted_total) && g.all_finite();
  if (ok) return;
  std::ostringstream msg;
  msg << "epoch " << state.epoch << ": strain=" << l.strain << " bend=" << l.bend << " gravity=" << l.gravity
      << " collision=" << l.collision << " total=" << l.weighted_total;
  if (!config.output_dir.empty()) {
    const std::string dump = (std::filesystem::path(config.output_dir) / "nonfinite_model.ckpt").string();
    try {
      save_checkpoint(state.model, dump);
      msg << "; model dumped to " << dump;
    } catch (const Error&) {
    }
  }
  throw Error(ErrorCode::NonFiniteLoss, msg.str());
}

}  // namespace

void train_epoch(TrainState& state, const TrainConfig& config, const RestMapping& rest, const ColliderMesh* collider) {
  const auto start = std::chrono::steady_clock::now();
  GradientBuffer<float> grad(state.model);
  EpochRecord rec;
  rec.epoch = state.epoch;

  if (config.sampling_mode == SamplingMode::mesh_connectivity) {
    if (!state.topology) state.topology = std::make_shared<const MeshTopology>(MeshTopology::build(rest.mesh()));
    rec.loss = neural_mesh_objective(state.model, rest.mesh(), *state.topology, collider, config.loss, &grad);
    rec.structures = static_cast<int>(rest.mesh().vertices.size());
    rec.min_spacing = std::numeric_limits<double>::quiet_NaN();
  } else {
    SamplerConfig sampler = config.sampler;
    if (config.sampling_mode == SamplingMode::uniform) {
      sampler.mu = 0.0;
      sampler.lloyd_iterations = 0;
    }
    const int n_adaptive = static_cast<int>(std::floor(sampler.mu * sampler.n_points));
    if (n_adaptive > 0) {
      const DiscretePdf estimate = estimate_cell_losses(state.model, rest, collider, sampler.pdf_rows, sampler.pdf_cols,
                                                        config.loss, sampler.mask, state.rngs.probe, config.batch);
      state.pdf = update_pdf(state.pdf, estimate, sampler.gamma);
    }
    std::vector<Vec2> points = sample_batch(state.pdf, sampler, state.rngs.points);
    points = lloyd_relax(std::move(points), sampler.lloyd_iterations);
    rec.min_spacing = min_spacing_report(points, sampler.min_spacing).min_distance;

    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi / 3.0);
    std::vector<StructureSample> samples;
    samples.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
      Vec2 p = points[k];
      double theta = angle(state.rngs.theta);
      bool ok = structure_ok(rest, p, theta, config.loss.side);
      for (int attempt = 0; !ok && attempt < config.max_resample; ++attempt) {
        p = static_cast<int>(k) < n_adaptive ? draw_adaptive(state.pdf, state.rngs.points)
                                             : draw_uniform(state.rngs.points);
        theta = angle(state.rngs.theta);
        ok = structure_ok(rest, p, theta, config.loss.side);
      }
      if (ok)
        samples.push_back({p, theta});
      else
        ++rec.dropped;
    }
    if (samples.empty()) throw Error(ErrorCode::AllPointsInvalid, "no valid structure in this epoch's batch");
    const BatchResult batch = evaluate_batch(state.model, rest, collider, samples, config.loss, config.batch, &grad);
    rec.loss = batch.loss;
    rec.structures = batch.structures;
  }

  check_finite(rec.loss, grad, state, config);
  state.optimizer.step<float>(state.model.parameters(), grad.values());
  rec.epoch_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  state.history.push_back(rec);
  ++state.epoch;
}

std::vector<double> history_totals(const std::vector<EpochRecord>& history) {
  std::vector<double> out;
  out.reserve(history.size());
  for (const auto& r : history) out.push_back(r.loss.weighted_total);
  return out;
}

bool detect_convergence(std::span<const double> totals, int window, double tol) {
  const std::size_t w = static_cast<std::size_t>(window);
  if (window < 1 || totals.size() < 2 * w) return false;
  const auto end = totals.end();
  const double cur = std::accumulate(end - w, end, 0.0) / w;
  const double prev = std::accumulate(end - 2 * w, end - w, 0.0) / w;
  const double denom = std::abs(prev);
  const double decrease = denom > 0.0 ? (prev - cur) / denom : (prev - cur);
  return decrease < tol;
}

int convergence_epoch(std::span<const double> totals, int window, double tol) {
  for (std::size_t n = 2 * static_cast<std::size_t>(std::max(window, 1)); n <= totals.size(); ++n)
    if (detect_convergence(totals.first(n), window, tol)) return static_cast<int>(n);
  return -1;
}

namespace {

void write_log_row(std::ostream& os, const EpochRecord& r) {
  os << r.epoch << ',' << r.loss.strain << ',' << r.loss.bend << ',' << r.loss.gravity << ',' << r.loss.collision << ','
     << r.loss.weighted_total << ',' << r.min_spacing << ',' << r.epoch_ms << '\n';
  os.flush();
}

std::string checkpoint_name(const std::string& dir, int epoch) {
  std::ostringstream name;
  name << "checkpoint_" << std::setw(6) << std::setfill('0') << epoch << ".ckpt";
  return (std::filesystem::path(dir) / name.str()).string();
}

}  // namespace

TrainResult train(const TrainConfig& config, const RestMapping& rest, const ColliderMesh* collider,
                  TrainState* resume, const EpochCallback& on_epoch) {
  config.validate();
  TrainState local;
  if (!resume) local = TrainState::initial(config);
  TrainState& state = resume ? *resume : local;

  std::ofstream log;
  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    const auto path = std::filesystem::path(config.output_dir) / "loss_log.csv";
    const bool append = resume && state.epoch > 0 && std::filesystem::exists(path);
    log.open(path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    log.precision(10);
    if (!append) log << kLossLogHeader << '\n';
  }

  TrainResult result;
  const double tol = config.convergence.tolerance;
  std::vector<double> totals = history_totals(state.history);
  while (state.epoch < config.epochs) {
    train_epoch(state, config, rest, collider);
    totals.push_back(state.history.back().loss.weighted_total);
    if (log.is_open()) write_log_row(log, state.history.back());
    if (on_epoch) on_epoch(state);
    if (!config.output_dir.empty() && config.checkpoint_every > 0 && state.epoch % config.checkpoint_every == 0 &&
        state.epoch < config.epochs) {
      result.checkpoints.push_back(checkpoint_name(config.output_dir, state.epoch));
      save_checkpoint(state.model, result.checkpoints.back());
    }
    if (result.converged_at < 0 && detect_convergence(totals, config.convergence.window, tol)) {
      result.converged_at = state.epoch;
      if (config.convergence.stop_early) break;
    }
  }
  if (!config.output_dir.empty()) {
    result.checkpoints.push_back((std::filesystem::path(config.output_dir) / "model.ckpt").string());
    save_checkpoint(state.model, result.checkpoints.back());
  }
  result.model = state.model;
  result.history = state.history;
  return result;
}

template <class Real>
DenseReport evaluate_dense(const SurfaceModel<Real>& model, const RestMapping& rest, const ColliderMesh* collider,
                           int resolution, const LossConfig& config, std::uint64_t seed, const BatchOptions& options) {
  if (resolution < 2) throw Error(ErrorCode::ConfigError, "dense evaluation resolution must be >= 2");
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi / 3.0);
  std::vector<StructureSample> samples;
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j) {
      const Vec2 c((j + 0.5) / resolution, (i + 0.5) / resolution);
      const double theta = angle(rng);
      if (structure_ok(rest, c, theta, config.side)) samples.push_back({c, theta});
    }
  DenseReport report;
  report.samples = static_cast<int>(samples.size());
  if (samples.empty()) return report;

  BatchOptions mean_options = options;
  mean_options.reduction = Reduction::mean;
  report.loss = evaluate_batch<Real>(model, rest, collider, std::span<const StructureSample>(samples), config, mean_options, static_cast<GradientBuffer<Real>*>(nullptr)).loss;

  // Strain ratios and penetration need the lifted positions themselves.
  const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.chunk_size));
  double strain_sum = 0.0;
  int penetrating = 0;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t end = std::min(samples.size(), begin + chunk);
    std::vector<Vec2> uv;
    std::vector<Vec3> base;
    for (std::size_t s = begin; s < end; ++s) {
      const LocalStructure2D s2d = build_structure_2d(samples[s].center, config.side, samples[s].theta);
      for (const Vec2& v : s2d.vertices) uv.push_back(v);
      uv.push_back(samples[s].center);
    }
    for (const Vec2& p : uv) base.push_back(rest.rest_position(p));
    const ForwardTape<Real> tape = forward(model, std::span<const Vec2>(uv));
    for (std::size_t s = 0; s < end - begin; ++s) {
      std::array<Vec3, 7> x;
      for (int k = 0; k < 7; ++k) x[k] = base[s * 7 + k] + tape.output().col(s * 7 + k).template cast<double>();
      double ratio = 0.0;
      for (const auto& e : LocalStructure2D::edges) {
        const double r = (base[s * 7 + e[0]] - base[s * 7 + e[1]]).norm();
        ratio += std::abs((x[e[0]] - x[e[1]]).norm() - r) / r;
      }
      strain_sum += ratio / 9.0;
      if (collider) {
        const NearestResult nn = collider->nearest_vertex(x[6]);
        if ((x[6] - collider->vertices()[nn.id]).dot(collider->normals()[nn.id]) < 0.0) ++penetrating;
      }
    }
  }
  report.mean_abs_strain = strain_sum / samples.size();
  report.penetration_fraction = static_cast<double>(penetrating) / samples.size();
  return report;
}

template DenseReport evaluate_dense<float>(const SurfaceModel<float>&, const RestMapping&, const ColliderMesh*, int,
                                           const LossConfig&, std::uint64_t, const BatchOptions&);
template DenseReport evaluate_dense<double>(const SurfaceModel<double>&, const RestMapping&, const ColliderMesh*, int,
                                            const LossConfig&, std::uint64_t, const BatchOptions&);

// ---- state snapshot -------------------------------------------------------

namespace {

constexpr const char* kStateMagic = "NDSTATE1";

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCode::IoFailure, "training state truncated");
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw Error(ErrorCode::FormatVersionMismatch, "training state string too long");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw Error(ErrorCode::IoFailure, "training state truncated");
  return s;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1ULL << 32)) throw Error(ErrorCode::FormatVersionMismatch, "training state vector too long");
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw Error(ErrorCode::IoFailure, "training state truncated");
  return v;
}

std::string rng_text(const Rng& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

Rng rng_from(const std::string& s) {
  Rng r;
  std::istringstream is(s);
  is >> r;
  if (!is) throw Error(ErrorCode::FormatVersionMismatch, "bad random stream state");
  return r;
}

}  // namespace

void save_train_state(const TrainState& state, const std::string& path) {
  const std::string model_path = path + ".model.tmp";
  save_checkpoint(state.model, model_path);
  std::string model_bytes;
  {
    std::ifstream is(model_path, std::ios::binary);
    model_bytes.assign(std::istreambuf_iterator<char>(is), {});
  }
  std::filesystem::remove(model_path);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  os.write(kStateMagic, 8);
  put<std::int32_t>(os, state.epoch);
  put_string(os, model_bytes);
  put<std::int32_t>(os, state.pdf.rows);
  put<std::int32_t>(os, state.pdf.cols);
  put_doubles(os, state.pdf.probs);
  const auto& oc = state.optimizer.config();
  put<std::int32_t>(os, static_cast<std::int32_t>(oc.kind));
  put(os, oc.learning_rate);
  put(os, oc.beta1);
  put(os, oc.beta2);
  put(os, oc.epsilon);
  put(os, oc.clip_factor);
  put(os, oc.decay);
  put<std::uint64_t>(os, oc.decay_start);
  put<std::uint64_t>(os, state.optimizer.steps());
  put(os, state.optimizer.norm_average());
  put_doubles(os, state.optimizer.first_moment());
  put_doubles(os, state.optimizer.second_moment());
  put_string(os, rng_text(state.rngs.probe));
  put_string(os, rng_text(state.rngs.points));
  put_string(os, rng_text(state.rngs.theta));
  put<std::uint64_t>(os, state.history.size());
  for (const auto& r : state.history) {
    put<std::int32_t>(os, r.epoch);
    for (double v : {r.loss.strain, r.loss.bend, r.loss.gravity, r.loss.collision, r.loss.weighted_total,
                     r.min_spacing, r.epoch_ms})
      put(os, v);
    put<std::int32_t>(os, r.structures);
    put<std::int32_t>(os, r.dropped);
  }
  if (!os) throw Error(ErrorCode::IoFailure, "failed writing " + path);
}

TrainState load_train_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != kStateMagic)
    throw Error(ErrorCode::FormatVersionMismatch, path + " is not a training state");
  TrainState s;
  s.epoch = get<std::int32_t>(is);
  {
    const std::string bytes = get_string(is);
    const std::string tmp = path + ".model.tmp";
    {
      std::ofstream os(tmp, std::ios::binary);
      os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    s.model = load_checkpoint(tmp);
    std::filesystem::remove(tmp);
  }
  s.pdf.rows = get<std::int32_t>(is);
  s.pdf.cols = get<std::int32_t>(is);
  s.pdf.probs = get_doubles(is);
  if (s.pdf.probs.size() != static_cast<std::size_t>(s.pdf.rows) * s.pdf.cols)
    throw Error(ErrorCode::ShapeMismatch, "stored pdf has the wrong size");
  OptimizerConfig oc;
  oc.kind = static_cast<OptimizerKind>(get<std::int32_t>(is));
  oc.learning_rate = get<double>(is);
  oc.beta1 = get<double>(is);
  oc.beta2 = get<double>(is);
  oc.epsilon = get<double>(is);
  oc.clip_factor = get<double>(is);
  oc.decay = get<double>(is);
  oc.decay_start = get<std::uint64_t>(is);
  s.optimizer = Optimizer(oc, s.model.size());
  s.optimizer.set_steps(get<std::uint64_t>(is));
  s.optimizer.set_norm_average(get<double>(is));
  s.optimizer.first_moment() = get_doubles(is);
  s.optimizer.second_moment() = get_doubles(is);
  s.rngs.probe = rng_from(get_string(is));
  s.rngs.points = rng_from(get_string(is));
  s.rngs.theta = rng_from(get_string(is));
  const auto n = get<std::uint64_t>(is);
  for (std::uint64_t k = 0; k < n; ++k) {
    EpochRecord r;
    r.epoch = get<std::int32_t>(is);
    r.loss.strain = get<double>(is);
    r.loss.bend = get<double>(is);
    r.loss.gravity = get<double>(is);
    r.loss.collision = get<double>(is);
    r.loss.weighted_total = get<double>(is);
    r.min_spacing = get<double>(is);
    r.epoch_ms = get<double>(is);
    r.structures = get<std::int32_t>(is);
    r.dropped = get<std::int32_t>(is);
    s.history.push_back(r);
  }
  return s;
}

}  // namespace drape

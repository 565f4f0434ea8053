#include "../common/fixtures.hpp"
#include "../common/oracles.hpp"

#include "drape/collider.hpp"
#include "drape/encoding_bench.hpp"
#include "drape/mesh_baseline.hpp"
#include "drape/objective.hpp"
#include "drape/sampler.hpp"
#include "drape/trainer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>

namespace drape {
namespace {

// Tolerances.
constexpr double kGradStep = 1e-5;
constexpr double kGradRelative = 1e-4;
constexpr double kGradFloor = 1e-8;
constexpr int kSamplerDraws = 100000;
constexpr double kSamplerTv = 0.02;
constexpr double kLloydSlack = 1e-9;
constexpr double kEncodingGap = 10.0;
constexpr int kDrapeEmaSpan = 100;
constexpr int kDrapeSettleEpoch = 200;
constexpr double kDrapeEmaSlack = 0.01;
constexpr double kDrapePenetration = 0.01;
constexpr double kDrapeStrain = 0.05;
constexpr double kSmallSphereRadius = 0.12;
constexpr int kSamplingEpochs = 1000;
constexpr int kSamplingMajority = 2;

// ---------------------------------------------------------------------------

TEST(ParameterParity, DefaultMultigrid) {
  const ModelConfig c;
  EXPECT_EQ(param_count(c.encoder, c.mlp.dims), 47369u);
  EXPECT_EQ(init_model<float>(c, 0).size(), 47369u);
}

TEST(ParameterParity, BaselineMlp) {
  const auto v = default_bench_variants();
  EXPECT_EQ(v[0].name, "baseline_mlp");
  EXPECT_EQ(init_model<float>(v[0].model, 0).size(), 47427u);
}

TEST(ParameterParity, PositionalEncoding) {
  const auto v = default_bench_variants();
  EXPECT_EQ(v[1].name, "positional");
  EXPECT_EQ(init_model<float>(v[1].model, 0).size(), 47363u);
}

// ---------------------------------------------------------------------------

struct GradientCase {
  Activation activation;
  int term;  // 0..3 a single loss, 4 the weighted sum
};

std::string case_name(const ::testing::TestParamInfo<GradientCase>& info) {
  static const char* terms[] = {"strain", "bend", "gravity", "collision", "weighted_sum"};
  return std::string(info.param.activation == Activation::relu ? "relu_" : "tanh_") + terms[info.param.term];
}

class GradientCorrectness : public ::testing::TestWithParam<GradientCase> {};

TEST_P(GradientCorrectness, ReverseModeMatchesCentralDifferences) {
  const auto [activation, term] = GetParam();
  const RestMapping rest(test::curved_mesh(7, 2));
  ModelConfig mc = test::small_model_config(activation);
  ASSERT_EQ(mc.encoder.layer_resolutions, (std::vector<int>{5, 3}));
  ASSERT_EQ(mc.mlp.dims, (std::vector<int>{6, 8, 8, 8, 3}));
  SurfaceModel<double> model = test::random_model<double>(mc, 13, 0.4);
  // Sphere swallowing the middle of the deformed surface.
  const ColliderMesh sphere = make_icosphere(surface_position(model, rest, Vec2(0.5, 0.5)) - Vec3(0, 0, 0.3), 0.4, 3);

  LossConfig cfg;
  cfg.side = 0.02;
  cfg.consts.collision_epsilon = 0.01;
  if (term < 4) {
    cfg.weights = {0, 0, 0, 0};
    double* w[] = {&cfg.weights.strain, &cfg.weights.bend, &cfg.weights.gravity, &cfg.weights.collision};
    *w[term] = 1.0;
  } else {
    cfg.weights = {0.005, 0.0005, 2.0, 1e7};
  }

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.15, 0.85), a(0.0, 2 * kPi / 3);
  std::vector<StructureSample> samples(24);
  for (auto& s : samples) s = {Vec2(u(rng), u(rng)), a(rng)};

  GradientBuffer<double> grad(model);
  const BatchResult r = evaluate_batch<double>(model, rest, &sphere, samples, cfg, {}, &grad);
  if (term == 3) ASSERT_GT(r.loss.collision, 0.0) << "no structure reaches the collider";
  // Differences are taken per term and then weighted: a single difference of
  // the weighted total loses the small terms to round-off of the large one.
  const auto term_value = [&](int t) {
    return [&, t](const SurfaceModel<double>& m) {
      const LossBreakdown l = evaluate_batch<double>(m, rest, &sphere, samples, cfg, {}, nullptr).loss;
      const double v[] = {l.strain, l.bend, l.gravity, l.collision};
      return v[t];
    };
  };
  const double weight[] = {cfg.weights.strain, cfg.weights.bend, cfg.weights.gravity, cfg.weights.collision};
  std::vector<double> numeric(model.size(), 0.0);
  for (int t = 0; t < 4; ++t) {
    if (weight[t] == 0.0) continue;
    for (std::size_t k = 0; k < model.size(); ++k)
      numeric[k] += weight[t] * test::central_difference(model, k, kGradStep, term_value(t));
  }
  const auto check = test::compare_gradient(grad.values(), numeric, kGradRelative, kGradFloor);
  EXPECT_EQ(check.checked, model.size());
  EXPECT_EQ(check.failures, 0u) << "worst relative error " << check.worst_relative;
}

std::vector<GradientCase> gradient_cases() {
  std::vector<GradientCase> out;
  for (auto act : {Activation::tanh, Activation::relu})
    for (int term = 0; term < 5; ++term) out.push_back({act, term});
  return out;
}

INSTANTIATE_TEST_SUITE_P(SmallModel, GradientCorrectness, ::testing::ValuesIn(gradient_cases()), case_name);

// ---------------------------------------------------------------------------

DiscretePdf fixed_pdf() {
  DiscretePdf pdf{8, 8, std::vector<double>(64)};
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) pdf.at(i, j) = 1.0 + (i * 5 + j * 3) % 7 + (i == 2 && j == 5 ? 20.0 : 0.0);
  pdf.at(6, 1) = 0.0;
  pdf.normalize();
  return pdf;
}

TEST(SamplerFidelity, EmpiricalDistributionAndRowMarginals) {
  const DiscretePdf pdf = fixed_pdf();
  Rng rng(2024);
  std::vector<double> counts(64, 0.0);
  for (int n = 0; n < kSamplerDraws; ++n) {
    const Vec2 p = draw_adaptive(pdf, rng);
    ASSERT_TRUE(p.x() >= 0 && p.x() < 1 && p.y() >= 0 && p.y() < 1);
    const int row = std::min(7, static_cast<int>(p.y() * 8)), col = std::min(7, static_cast<int>(p.x() * 8));
    counts[row * 8 + col] += 1.0;
  }
  double tv = 0.0, row_tv = 0.0;
  for (int i = 0; i < 8; ++i) {
    double emp_row = 0.0, row = 0.0;
    for (int j = 0; j < 8; ++j) {
      const double emp = counts[i * 8 + j] / kSamplerDraws;
      tv += std::abs(emp - pdf.at(i, j));
      emp_row += emp;
      row += pdf.at(i, j);
    }
    row_tv += std::abs(emp_row - row);
  }
  tv *= 0.5;
  row_tv *= 0.5;
  std::printf("  total variation %.5f, row marginal distance %.5f\n", tv, row_tv);
  EXPECT_LT(tv, kSamplerTv);
  EXPECT_LT(row_tv, kSamplerTv);
  EXPECT_EQ(counts[6 * 8 + 1], 0.0);
}

// ---------------------------------------------------------------------------

TEST(LloydRelaxation, EnergyNonIncreasingAndPointsInside) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec2> pts(100);
  for (auto& p : pts) p = Vec2(u(rng), u(rng));
  double energy = cvt_energy(pts);
  for (int it = 1; it <= 10; ++it) {
    pts = lloyd_relax(std::move(pts), 1);
    const double next = cvt_energy(pts);
    EXPECT_LE(next, energy + kLloydSlack) << "iteration " << it;
    energy = next;
    for (const auto& p : pts) {
      EXPECT_GE(p.x(), 0.0);
      EXPECT_LE(p.x(), 1.0);
      EXPECT_GE(p.y(), 0.0);
      EXPECT_LE(p.y(), 1.0);
    }
  }
}

// ---------------------------------------------------------------------------

TEST(EncodingOrdering, MultigridBeatsPositionalBeatsBaseline) {
  const BenchConfig cfg;
  const auto entries = supervised_bench(default_bench_variants(), cfg);
  ASSERT_EQ(entries.size(), 3u);
  // A variant that never reaches the threshold is counted at the budget.
  auto epochs = [&](const BenchEntry& e) { return e.converged() ? e.epochs_to_threshold : cfg.max_epochs; };
  for (const auto& e : entries)
    std::printf("  %-13s %6zu params  %s epochs  mse %.3g  %.1f s\n", e.name.c_str(), e.parameters,
                e.converged() ? std::to_string(e.epochs_to_threshold).c_str() : "not converged", e.final_mse,
                e.seconds);
  const BenchEntry &mlp = entries[0], &pos = entries[1], &grid = entries[2];
  ASSERT_TRUE(grid.converged());
  EXPECT_LT(epochs(grid), epochs(pos));
  EXPECT_TRUE(!mlp.converged() || epochs(pos) < epochs(mlp));
  EXPECT_GE(static_cast<double>(epochs(mlp)), kEncodingGap * epochs(grid));
}

// ---------------------------------------------------------------------------

/// Square cloth one unit above the ground falling onto a centered sphere.
struct DrapeScene {
  RestMapping rest{make_square_cloth(64, 1.0, 1.0)};
  ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), 0.25, 5);
};

TrainConfig drape_config(std::uint64_t seed) {
  TrainConfig c;
  c.epochs = 3000;
  c.seed = seed;
  c.sampler.seed = seed + 1;
  c.sampler.n_points = 1024;
  c.optimizer.kind = OptimizerKind::adam;
  c.optimizer.clip_factor = 5.0;
  c.optimizer.decay = 0.98;
  c.optimizer.decay_start = 100;
  c.loss.consts.mass = 1e-4;
  return c;
}

std::vector<double> ema(const std::vector<double>& x, int span) {
  const double a = 2.0 / (span + 1);
  std::vector<double> out;
  double e = x.empty() ? 0.0 : x.front();
  for (double v : x) out.push_back(e = a * v + (1 - a) * e);
  return out;
}

TEST(SphereDrape, SettlesWithoutPenetrationOrOverstretch) {
  const DrapeScene scene;
  const TrainConfig cfg = drape_config(0);
  const TrainResult r = train(cfg, scene.rest, &scene.sphere);
  ASSERT_EQ(r.history.size(), 3000u);

  const auto smooth = ema(history_totals(r.history), kDrapeEmaSpan);
  int rises = 0;
  for (std::size_t k = kDrapeSettleEpoch + 1; k < smooth.size(); ++k)
    if (smooth[k] > smooth[k - 1] * (1.0 + kDrapeEmaSlack)) {
      if (++rises <= 5) ADD_FAILURE() << "smoothed loss rises at epoch " << k << ": " << smooth[k - 1] << " -> " << smooth[k];
    }
  EXPECT_EQ(rises, 0);

  const DenseReport d = evaluate_dense(r.model, scene.rest, &scene.sphere, 64, cfg.loss, 7);
  std::printf("  smoothed total %.6g at epoch %d, %.6g at the end\n", smooth[kDrapeSettleEpoch], kDrapeSettleEpoch,
              smooth.back());
  std::printf("  penetration fraction %.5f, mean |strain| %.5f, mean height %.4f\n", d.penetration_fraction,
              d.mean_abs_strain, d.loss.gravity / (cfg.loss.consts.mass * cfg.loss.consts.gravity));
  EXPECT_LT(d.penetration_fraction, kDrapePenetration);
  EXPECT_LT(d.mean_abs_strain, kDrapeStrain);
}

// ---------------------------------------------------------------------------

/// Small sphere under the cloth: most of the sheet falls freely and the
/// contact region is a small fraction of UV space.
struct SmallSphereScene {
  RestMapping rest{make_square_cloth(64, 1.0, 1.0)};
  ColliderMesh sphere = make_icosphere(Vec3(0.5, 0.5, 0.5), kSmallSphereRadius, 5);
};

TrainConfig sampling_config(std::uint64_t seed, SamplingMode mode) {
  TrainConfig c;
  c.epochs = kSamplingEpochs;
  c.seed = seed;
  c.sampler.seed = seed;
  c.sampler.n_points = 1024;
  c.sampler.mask.gravity = false;
  c.sampling_mode = mode;
  c.optimizer.kind = OptimizerKind::adam;
  c.optimizer.clip_factor = 5.0;
  c.optimizer.decay = 0.98;
  c.optimizer.decay_start = 100;
  c.loss.consts.mass = 1e-4;
  return c;
}

TEST(AdaptiveVersusUniform, LowerDenseLossAndEarlierConvergence) {
  const SmallSphereScene scene;
  int lower_loss = 0, earlier = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    double dense[2];
    int epoch[2];
    for (int m = 0; m < 2; ++m) {
      const TrainConfig cfg = sampling_config(seed, m == 0 ? SamplingMode::adaptive : SamplingMode::uniform);
      const TrainResult r = train(cfg, scene.rest, &scene.sphere);
      ASSERT_EQ(r.history.size(), static_cast<std::size_t>(kSamplingEpochs));
      dense[m] = evaluate_dense(r.model, scene.rest, &scene.sphere, 64, cfg.loss, 7).loss.weighted_total;
      const int c = convergence_epoch(history_totals(r.history), cfg.convergence.window, cfg.convergence.tolerance);
      epoch[m] = c < 0 ? kSamplingEpochs : c;
    }
    std::printf("  seed %llu: dense total adaptive %.6g uniform %.6g, converged adaptive %d uniform %d\n",
                static_cast<unsigned long long>(seed), dense[0], dense[1], epoch[0], epoch[1]);
    lower_loss += dense[0] <= dense[1];
    earlier += epoch[0] <= epoch[1];
  }
  EXPECT_GE(lower_loss, kSamplingMajority);
  EXPECT_GE(earlier, kSamplingMajority);
}

// ---------------------------------------------------------------------------

TEST(FreeVariableContrast, VertexBaselineVersusNeuralModel) {
  MeshBaselineConfig cfg;
  cfg.epochs = 1;
  const MeshBaselineResult r = mesh_connectivity_baseline(make_square_cloth(128, 1.0, 1.0), nullptr, cfg);
  EXPECT_EQ(r.vertex_free_variables, 49152u);
  EXPECT_EQ(r.model_parameters, 47369u);
}

}  // namespace
}  // namespace drape

#include "drape/io/commands.hpp"

#include "drape/error.hpp"
#include "drape/io/image.hpp"
#include "drape/io/obj.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace drape {

AtlasSummary cmd_atlas(const std::string& garment_obj, int resolution, const std::string& out, bool png,
                       std::ostream& report) {
  if (resolution < 2) throw Error(ErrorCode::ConfigError, "atlas resolution must be >= 2");
  const RestMapping rest(read_garment_obj(garment_obj));
  const RestAtlas atlas = build_atlas(rest, resolution);
  save_atlas(atlas, out);
  if (png) save_atlas_png(atlas, out + ".png");
  AtlasSummary s{resolution, atlas.valid_fraction()};
  report << "resolution=" << s.resolution << "\nvalid_fraction=" << s.valid_fraction << '\n';
  return s;
}

namespace {

void dump_pdf(const DiscretePdf& pdf, const std::string& dir, int epoch) {
  std::filesystem::create_directories(dir);
  std::ostringstream stem;
  stem << "pdf_" << std::setw(6) << std::setfill('0') << epoch;
  const auto base = (std::filesystem::path(dir) / stem.str()).string();
  std::vector<float> flt(pdf.probs.begin(), pdf.probs.end());
  write_pfm(base + ".pfm", pdf.cols, pdf.rows, flt);
  write_heatmap_png(base + ".png", pdf.cols, pdf.rows, pdf.probs);
}

nlohmann::json to_json(const LossBreakdown& l) {
  return {{"strain", l.strain},
          {"bend", l.bend},
          {"gravity", l.gravity},
          {"collision", l.collision},
          {"weighted_total", l.weighted_total}};
}

}  // namespace

TrainSummary cmd_train(const RunConfig& config, std::ostream& report, const std::string& resume_state) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const RestMapping rest(make_garment(config.garment));
  const std::optional<ColliderMesh> collider = make_collider(config.collider);
  const ColliderMesh* col = collider ? &*collider : nullptr;

  TrainConfig tc = config.train;
  if (tc.output_dir.empty()) tc.output_dir = "run";
  std::filesystem::create_directories(tc.output_dir);

  TrainState state = resume_state.empty() ? TrainState::initial(tc) : load_train_state(resume_state);

  const int dump_every = config.pdf_dump_every;
  const std::string pdf_dir = (std::filesystem::path(tc.output_dir) / "pdf").string();
  const int total = tc.epochs;
  const EpochCallback progress = [&](const TrainState& s) {
    if (dump_every > 0 && s.epoch % dump_every == 0) dump_pdf(s.pdf, pdf_dir, s.epoch);
    if (s.epoch % 100 == 0 || s.epoch == total)
      report << "epoch " << s.epoch << "/" << total << " total=" << s.history.back().loss.weighted_total << '\n';
  };
  TrainResult result = train(tc, rest, col, &state, progress);
  save_train_state(state, (std::filesystem::path(tc.output_dir) / "state.bin").string());

  TrainSummary summary;
  summary.epochs = static_cast<int>(result.history.size());
  summary.converged_at = result.converged_at;
  summary.parameters = result.model.size();
  summary.checkpoint = result.checkpoints.empty() ? std::string() : result.checkpoints.back();
  summary.final_eval =
      evaluate_dense(result.model, rest, col, config.eval.resolution, tc.loss, config.eval.seed, tc.batch);

  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json j;
  j["epochs"] = summary.epochs;
  j["converged_at"] = summary.converged_at;
  j["parameters"] = summary.parameters;
  j["seconds"] = summary.seconds;
  j["checkpoint"] = summary.checkpoint;
  j["sampling_mode"] = to_string(tc.sampling_mode);
  j["final"] = to_json(summary.final_eval.loss);
  j["mean_abs_strain"] = summary.final_eval.mean_abs_strain;
  j["penetration_fraction"] = summary.final_eval.penetration_fraction;
  j["dense_samples"] = summary.final_eval.samples;
  std::ofstream js(std::filesystem::path(tc.output_dir) / "summary.json");
  js << j.dump(2) << '\n';
  report << "final weighted_total=" << summary.final_eval.loss.weighted_total
         << " penetration_fraction=" << summary.final_eval.penetration_fraction << '\n';
  return summary;
}

ExportedMesh export_surface(const SurfaceModel<float>& model, const RestMapping& rest, ExportMode mode,
                            int resolution) {
  ExportedMesh out;
  std::vector<Vec3> base;
  if (mode == ExportMode::vertices) {
    out.uvs = rest.mesh().uvs;
    out.triangles = rest.mesh().triangles;
    base = rest.mesh().vertices;
  } else {
    if (resolution < 2) throw Error(ErrorCode::ConfigError, "export grid resolution must be >= 2");
    std::vector<int> id(static_cast<std::size_t>(resolution) * resolution, -1);
    for (int i = 0; i < resolution; ++i)
      for (int j = 0; j < resolution; ++j) {
        const Vec2 p(static_cast<double>(j) / (resolution - 1), static_cast<double>(i) / (resolution - 1));
        const auto x = rest.try_rest_position(p);
        if (!x) continue;
        id[i * resolution + j] = static_cast<int>(out.uvs.size());
        out.uvs.push_back(p);
        base.push_back(*x);
      }
    auto at = [&](int i, int j) { return id[i * resolution + j]; };
    for (int i = 0; i + 1 < resolution; ++i)
      for (int j = 0; j + 1 < resolution; ++j) {
        const int a = at(i, j), b = at(i, j + 1), c = at(i + 1, j + 1), d = at(i + 1, j);
        if (a >= 0 && b >= 0 && c >= 0) out.triangles.push_back({a, b, c});
        if (a >= 0 && c >= 0 && d >= 0) out.triangles.push_back({a, c, d});
      }
  }
  out.vertices = base;
  if (!out.uvs.empty()) {
    const auto tape = forward(model, std::span<const Vec2>(out.uvs));
    for (std::size_t k = 0; k < out.vertices.size(); ++k) out.vertices[k] += tape.output().col(k).cast<double>();
  }
  return out;
}

ExportedMesh cmd_export(const std::string& checkpoint, const RunConfig& config, const std::string& out_obj,
                        std::ostream& report) {
  const SurfaceModel<float> model = load_checkpoint(checkpoint);
  const RestMapping rest(make_garment(config.garment));
  ExportedMesh mesh = export_surface(model, rest, config.exporter.mode, config.exporter.resolution);
  write_obj(out_obj, mesh.vertices, mesh.uvs, mesh.triangles);
  report << "vertices=" << mesh.vertices.size() << "\ntriangles=" << mesh.triangles.size() << '\n';
  return mesh;
}

std::vector<BenchEntry> cmd_bench_encoding(const RunConfig& config, const std::string& out_csv, std::ostream& report) {
  const auto entries = supervised_bench(default_bench_variants(), config.bench);
  std::ofstream csv(out_csv);
  if (!csv) throw Error(ErrorCode::IoFailure, "cannot open " + out_csv);
  csv << "variant,parameters,epochs_to_threshold,final_mse,seconds\n";
  report << std::left << std::setw(14) << "variant" << std::setw(12) << "parameters" << std::setw(16) << "epochs"
         << "seconds\n";
  for (const auto& e : entries) {
    const std::string epochs = e.converged() ? std::to_string(e.epochs_to_threshold) : "not converged";
    csv << e.name << ',' << e.parameters << ',' << epochs << ',' << e.final_mse << ',' << e.seconds << '\n';
    report << std::setw(14) << e.name << std::setw(12) << e.parameters << std::setw(16) << epochs << e.seconds
           << '\n';
  }
  return entries;
}

void print_dense_report(const DenseReport& r, std::ostream& os) {
  os << std::setprecision(10) << "strain=" << r.loss.strain << "\nbend=" << r.loss.bend << "\ngravity=" << r.loss.gravity
     << "\ncollision=" << r.loss.collision << "\nweighted_total=" << r.loss.weighted_total
     << "\nmean_abs_strain=" << r.mean_abs_strain << "\npenetration_fraction=" << r.penetration_fraction
     << "\nsamples=" << r.samples << '\n';
}

DenseReport cmd_eval(const std::string& checkpoint, const RunConfig& config, std::ostream& report) {
  const SurfaceModel<float> model = load_checkpoint(checkpoint);
  const RestMapping rest(make_garment(config.garment));
  const std::optional<ColliderMesh> collider = make_collider(config.collider);
  const DenseReport r = evaluate_dense(model, rest, collider ? &*collider : nullptr, config.eval.resolution,
                                       config.train.loss, config.eval.seed, config.train.batch);
  print_dense_report(r, report);
  return r;
}

}  // namespace drape

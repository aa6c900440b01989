#include "ufno.h"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ufno/checkpoint.hpp"
#include "ufno/field_io.hpp"
#include "ufno/metrics.hpp"
#include "ufno/scene.hpp"
#include "ufno/solver.hpp"
#include "ufno/spline.hpp"
#include "ufno/trainer.hpp"
#include "ufno/vtk.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

thread_local std::string g_last_error;

ufno_status to_status(const ufno::Error& e) {
  switch (e.code()) {
    case ufno::ErrorCode::invalid_argument: return UFNO_ERR_INVALID;
    case ufno::ErrorCode::io: return UFNO_ERR_IO;
    case ufno::ErrorCode::format: return UFNO_ERR_FORMAT;
    case ufno::ErrorCode::numeric: return UFNO_ERR_NUMERIC;
  }
  return UFNO_ERR_INVALID;
}

template <typename F>
ufno_status guarded(F&& fn) {
  try {
    fn();
    return UFNO_OK;
  } catch (const ufno::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return UFNO_ERR_INVALID;
  }
}

std::string frame_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "field_%05zu.ufn", index);
  return buf;
}

void write_index(const fs::path& out_dir, const std::string& subcommand, json config,
                 std::vector<std::string> artifacts, std::uint32_t threads) {
  json idx;
  idx["subcommand"] = subcommand;
  idx["version"] = ufno_version();
  idx["threads"] = threads;
  idx["config"] = std::move(config);
  idx["artifacts"] = std::move(artifacts);
  std::ofstream os(out_dir / "index.json", std::ios::trunc);
  if (!os) ufno::fail(ufno::ErrorCode::io, "cannot write " + (out_dir / "index.json").string());
  os << idx.dump(2) << "\n";
}

ufno::SolverConfig solver_config_from(const ufno_solver_opts& o) {
  ufno::SolverConfig cfg;
  cfg.direction = ufno::direction_from_degrees(o.direction_degrees);
  cfg.reynolds = o.reynolds;
  cfg.prandtl = o.prandtl;
  cfg.grashof = o.grashof;
  cfg.smagorinsky_cs = o.smagorinsky_cs;
  cfg.courant = o.courant;
  cfg.u_ref = o.u_ref;
  cfg.z_ref = o.z_ref;
  cfg.alpha = o.alpha;
  cfg.thermal = o.thermal != 0;
  cfg.prandtl_turbulent = o.prandtl_turbulent;
  cfg.interpolation = o.linear_interpolation ? ufno::InterpOrder::linear
                                             : ufno::InterpOrder::cubic;
  cfg.poisson = o.use_sor ? ufno::PoissonMethod::sor : ufno::PoissonMethod::jacobi;
  cfg.projection_tol = o.projection_tol;
  cfg.max_projection_iters = o.max_projection_iters;
  cfg.validate();
  return cfg;
}

json solver_opts_json(const ufno_solver_opts& o) {
  return {{"n_steps", o.n_steps},
          {"output_stride", o.output_stride},
          {"direction_degrees", o.direction_degrees},
          {"reynolds", o.reynolds},
          {"prandtl", o.prandtl},
          {"grashof", o.grashof},
          {"smagorinsky_cs", o.smagorinsky_cs},
          {"courant", o.courant},
          {"u_ref", o.u_ref},
          {"z_ref", o.z_ref},
          {"alpha", o.alpha},
          {"thermal", o.thermal != 0},
          {"prandtl_turbulent", o.prandtl_turbulent},
          {"interpolation", o.linear_interpolation ? "linear" : "cubic"},
          {"poisson", o.use_sor ? "sor" : "jacobi"},
          {"projection_tol", o.projection_tol},
          {"max_projection_iters", o.max_projection_iters}};
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(dir))
    ufno::fail(ufno::ErrorCode::io, dir.string() + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("field_", 0) == 0 && name.ends_with(".ufn")) frames.push_back(entry.path());
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) ufno::fail(ufno::ErrorCode::io, "no field_*.ufn files in " + dir.string());
  return frames;
}

} // namespace

struct ufno_field {
  ufno::ScalarField field;
};
struct ufno_mask {
  ufno::BuildingMask mask;
};
struct ufno_checkpoint {
  ufno::Checkpoint ckpt;
};

extern "C" {

const char* ufno_last_error(void) { return g_last_error.c_str(); }

const char* ufno_version(void) { return "1.0.0"; }

ufno_status ufno_field_read(const char* path, ufno_field** out) {
  return guarded([&] {
    if (!path || !out) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    *out = new ufno_field{ufno::read_field(path)};
  });
}

ufno_status ufno_field_write(const ufno_field* field, const char* path) {
  return guarded([&] {
    if (!field || !path) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    ufno::write_field(field->field, path);
  });
}

ufno_status ufno_field_create(uint32_t nx, uint32_t ny, uint32_t nz, double dx, double dy,
                              double dz, const double origin[3], const double* values,
                              ufno_field** out) {
  return guarded([&] {
    if (!out) ufno::fail(ufno::ErrorCode::invalid_argument, "null output");
    ufno::Grid3 g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.dx = dx;
    g.dy = dy;
    g.dz = dz;
    if (origin) g.origin = {origin[0], origin[1], origin[2]};
    ufno::ScalarField f(g);
    if (values) std::copy(values, values + g.cell_count(), f.values.begin());
    *out = new ufno_field{std::move(f)};
  });
}

void ufno_field_free(ufno_field* field) { delete field; }

ufno_status ufno_field_dims(const ufno_field* field, uint32_t* nx, uint32_t* ny, uint32_t* nz) {
  return guarded([&] {
    if (!field) ufno::fail(ufno::ErrorCode::invalid_argument, "null field");
    if (nx) *nx = field->field.grid.nx;
    if (ny) *ny = field->field.grid.ny;
    if (nz) *nz = field->field.grid.nz;
  });
}

ufno_status ufno_field_spacing(const ufno_field* field, double* dx, double* dy, double* dz) {
  return guarded([&] {
    if (!field) ufno::fail(ufno::ErrorCode::invalid_argument, "null field");
    if (dx) *dx = field->field.grid.dx;
    if (dy) *dy = field->field.grid.dy;
    if (dz) *dz = field->field.grid.dz;
  });
}

const double* ufno_field_values(const ufno_field* field) {
  return field ? field->field.values.data() : nullptr;
}

double* ufno_field_values_mut(ufno_field* field) {
  return field ? field->field.values.data() : nullptr;
}

ufno_status ufno_field_export_vtk(const ufno_field* field, const char* path,
                                  const char* array_name) {
  return guarded([&] {
    if (!field || !path) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    ufno::write_vtk(field->field, path, array_name ? array_name : "velocity_magnitude");
  });
}

ufno_status ufno_mask_read(const char* path, ufno_mask** out) {
  return guarded([&] {
    if (!path || !out) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    *out = new ufno_mask{ufno::read_mask(path)};
  });
}

void ufno_mask_free(ufno_mask* mask) { delete mask; }

ufno_status ufno_mask_dims(const ufno_mask* mask, uint32_t* nx, uint32_t* ny, uint32_t* nz) {
  return guarded([&] {
    if (!mask) ufno::fail(ufno::ErrorCode::invalid_argument, "null mask");
    if (nx) *nx = mask->mask.grid.nx;
    if (ny) *ny = mask->mask.grid.ny;
    if (nz) *nz = mask->mask.grid.nz;
  });
}

const uint8_t* ufno_mask_solid(const ufno_mask* mask) {
  return mask ? mask->mask.solid.data() : nullptr;
}

ufno_status ufno_apply_mask(ufno_field* field, const ufno_mask* mask) {
  return guarded([&] {
    if (!field || !mask) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    field->field = ufno::apply_mask(field->field, mask->mask);
  });
}

ufno_status ufno_checkpoint_load(const char* path, ufno_checkpoint** out) {
  return guarded([&] {
    if (!path || !out) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    *out = new ufno_checkpoint{ufno::load_checkpoint(path)};
  });
}

void ufno_checkpoint_free(ufno_checkpoint* ckpt) { delete ckpt; }

ufno_status ufno_checkpoint_info(const ufno_checkpoint* ckpt, uint32_t* epoch,
                                 uint64_t* trainable_parameters, uint32_t* modes,
                                 uint32_t* width, uint32_t* layers) {
  return guarded([&] {
    if (!ckpt) ufno::fail(ufno::ErrorCode::invalid_argument, "null checkpoint");
    const auto& cfg = ckpt->ckpt.params.config;
    if (epoch) *epoch = ckpt->ckpt.epoch;
    if (trainable_parameters) *trainable_parameters = ufno::param_count(cfg);
    if (modes) *modes = cfg.modes;
    if (width) *width = cfg.width;
    if (layers) *layers = cfg.layers;
  });
}

ufno_status ufno_checkpoint_forward(const ufno_checkpoint* ckpt, const ufno_field* const* inputs,
                                    size_t n_inputs, double norm_mean, double norm_std,
                                    ufno_field** out) {
  return guarded([&] {
    if (!ckpt || !inputs || !out) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    const auto& cfg = ckpt->ckpt.params.config;
    if (n_inputs != cfg.in_channels)
      ufno::fail(ufno::ErrorCode::invalid_argument,
                 "forward: expected " + std::to_string(cfg.in_channels) + " inputs, got " +
                     std::to_string(n_inputs));
    if (!(norm_std > 0.0))
      ufno::fail(ufno::ErrorCode::invalid_argument, "forward: norm std must be positive");
    const ufno::Grid3& g = inputs[0]->field.grid;
    for (size_t s = 1; s < n_inputs; ++s)
      if (!(inputs[s]->field.grid == g))
        ufno::fail(ufno::ErrorCode::invalid_argument, "forward: input grids differ");
    cfg.check_grid(g.nx, g.ny, g.nz);

    ufno::Tensor<float> input(n_inputs, g.nx, g.ny, g.nz);
    const float mean = float(norm_mean), inv_std = float(1.0 / norm_std);
    for (size_t s = 0; s < n_inputs; ++s) {
      float* dst = input.channel(s);
      const auto& vals = inputs[s]->field.values;
      for (std::size_t c = 0; c < vals.size(); ++c) dst[c] = (float(vals[c]) - mean) * inv_std;
    }
    ufno::FnoWorkspace<float> ws(cfg, g.nx, g.ny, g.nz);
    auto pred = fno_forward(input, ckpt->ckpt.params, ws);
    ufno::ScalarField f(g);
    const float* src = pred.channel(0);
    for (std::size_t c = 0; c < f.values.size(); ++c) f.values[c] = double(src[c]);
    *out = new ufno_field{std::move(f)};
  });
}

void ufno_solver_opts_init(ufno_solver_opts* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  ufno::SolverConfig cfg;
  o->n_steps = 400;
  o->output_stride = 1;
  o->direction_degrees = 0;
  o->reynolds = cfg.reynolds;
  o->prandtl = cfg.prandtl;
  o->grashof = cfg.grashof;
  o->smagorinsky_cs = cfg.smagorinsky_cs;
  o->courant = cfg.courant;
  o->u_ref = cfg.u_ref;
  o->z_ref = cfg.z_ref;
  o->alpha = cfg.alpha;
  o->thermal = 0;
  o->prandtl_turbulent = cfg.prandtl_turbulent;
  o->linear_interpolation = 0;
  o->use_sor = 0;
  o->projection_tol = cfg.projection_tol;
  o->max_projection_iters = cfg.max_projection_iters;
  o->threads = 1;
}

ufno_status ufno_generate(const char* scene_path, const ufno_solver_opts* opts,
                          const char* out_dir) {
  return guarded([&] {
    if (!scene_path || !opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    if (opts->n_steps < 1) ufno::fail(ufno::ErrorCode::invalid_argument, "n_steps must be >= 1");
    const auto scene = ufno::read_scene(scene_path);
    const auto cfg = solver_config_from(*opts);
    fs::create_directories(out_dir);

    auto result = ufno::run_simulation(scene, cfg, opts->n_steps, opts->output_stride);

    std::vector<std::string> artifacts;
    ufno::write_mask(result.mask, (fs::path(out_dir) / "mask.umsk").string());
    artifacts.push_back("mask.umsk");
    for (std::size_t t = 0; t < result.sequence.fields.size(); ++t) {
      const auto name = frame_name(t);
      ufno::write_field(result.sequence.fields[t], (fs::path(out_dir) / name).string());
      artifacts.push_back(name);
    }

    json summary;
    summary["dt"] = result.dt;
    summary["output_dt"] = result.sequence.dt;
    summary["frames"] = result.sequence.fields.size();
    summary["config"] = solver_opts_json(*opts);
    summary["threads"] = opts->threads;
    json steps = json::array();
    for (const auto& st : result.steps)
      steps.push_back({{"projection_iters", st.projection_iters},
                       {"divergence", st.divergence},
                       {"wall_ms", st.wall_ms}});
    summary["steps"] = std::move(steps);
    {
      std::ofstream os(fs::path(out_dir) / "summary.json", std::ios::trunc);
      if (!os) ufno::fail(ufno::ErrorCode::io, "cannot write summary.json");
      os << summary.dump(2) << "\n";
    }
    artifacts.push_back("summary.json");
    write_index(out_dir, "generate", solver_opts_json(*opts), std::move(artifacts),
                opts->threads);
  });
}

void ufno_prepare_opts_init(ufno_prepare_opts* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->window = 6;
  o->stride = 2;
  o->n_train = 0; // required
  o->seed = 1;
  o->dt = 0.0;
}

ufno_status ufno_prepare(const char* fields_dir, const ufno_prepare_opts* opts,
                         const char* out_dir) {
  return guarded([&] {
    if (!fields_dir || !opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    const auto frames = list_frames(fields_dir);
    fs::create_directories(out_dir);

    // Time spacing: explicit option or the generate summary.
    double dt = opts->dt;
    if (dt <= 0.0) {
      const auto summary_path = fs::path(fields_dir) / "summary.json";
      if (fs::exists(summary_path)) {
        std::ifstream is(summary_path);
        json j;
        is >> j;
        dt = j.value("output_dt", 0.0);
      }
    }
    if (dt <= 0.0)
      ufno::fail(ufno::ErrorCode::invalid_argument,
                 "prepare: no dt given and no summary.json in the fields directory");

    // Source grid from the first frame; optional downsampling target.
    ufno::ScalarField first = ufno::read_field(frames.front().string());
    ufno::Grid3 target = first.grid;
    bool resample = false;
    if (opts->target_nx || opts->target_ny || opts->target_nz) {
      const auto ext = first.grid.extent();
      if (opts->target_nx) target.nx = opts->target_nx;
      if (opts->target_ny) target.ny = opts->target_ny;
      if (opts->target_nz) target.nz = opts->target_nz;
      target.dx = ext[0] / target.nx;
      target.dy = ext[1] / target.ny;
      target.dz = ext[2] / target.nz;
      resample = !(target == first.grid);
    }

    // Mask: explicit path, or mask.umsk beside the fields.
    std::optional<ufno::BuildingMask> mask;
    fs::path mask_src = opts->mask_path ? fs::path(opts->mask_path)
                                        : fs::path(fields_dir) / "mask.umsk";
    if (opts->mask_path || fs::exists(mask_src)) {
      auto m = ufno::read_mask(mask_src.string());
      mask = resample ? ufno::resample_mask(m, target) : std::move(m);
      if (!(mask->grid == target))
        ufno::fail(ufno::ErrorCode::invalid_argument, "prepare: mask grid does not match fields");
    }

    ufno::DatasetManifest manifest;
    manifest.dt = dt;
    manifest.seed = opts->seed;
    manifest.windows = ufno::make_windows(std::uint32_t(frames.size()), opts->window, opts->stride);
    if (opts->n_train == 0 || opts->n_train >= manifest.windows.size())
      ufno::fail(ufno::ErrorCode::invalid_argument,
                 "prepare: n_train must lie in (0, " + std::to_string(manifest.windows.size()) +
                     ")");
    auto [train, test] = ufno::split_dataset(manifest.windows.size(), opts->n_train, opts->seed);
    manifest.train = std::move(train);
    manifest.test = std::move(test);

    // Process frames (downsample + re-zero) and write them out.
    std::vector<std::string> artifacts;
    std::vector<std::vector<double>> processed;
    processed.reserve(frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
      ufno::ScalarField f = (t == 0) ? std::move(first) : ufno::read_field(frames[t].string());
      if (!(f.grid == target) && !resample)
        ufno::fail(ufno::ErrorCode::invalid_argument,
                   frames[t].string() + ": grid differs across the sequence");
      if (resample)
        f = mask ? ufno::downsample(f, target, *mask) : ufno::downsample(f, target);
      const auto name = frame_name(t);
      ufno::write_field(f, (fs::path(out_dir) / name).string());
      manifest.fields.push_back(name);
      artifacts.push_back(name);
      processed.push_back(std::move(f.values));
    }

    // Normalization from training windows only, fluid cells when masked.
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    std::vector<bool> in_train_window(frames.size(), false);
    for (auto wi : manifest.train) {
      for (auto t : manifest.windows[wi].input_indices) in_train_window[t] = true;
      in_train_window[manifest.windows[wi].target_index] = true;
    }
    for (std::size_t t = 0; t < processed.size(); ++t) {
      if (!in_train_window[t]) continue;
      for (std::size_t c = 0; c < processed[t].size(); ++c) {
        if (mask && mask->solid[c]) continue;
        sum += processed[t][c];
        sum2 += processed[t][c] * processed[t][c];
        ++count;
      }
    }
    if (count == 0) ufno::fail(ufno::ErrorCode::invalid_argument, "prepare: no cells for stats");
    manifest.norm.mean = sum / double(count);
    manifest.norm.std =
        std::sqrt(std::max(sum2 / double(count) - manifest.norm.mean * manifest.norm.mean, 0.0));
    if (!(manifest.norm.std > 0.0))
      ufno::fail(ufno::ErrorCode::numeric, "prepare: zero variance in training data");

    if (mask) {
      ufno::write_mask(*mask, (fs::path(out_dir) / "mask.umsk").string());
      artifacts.push_back("mask.umsk");
    }
    ufno::write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    artifacts.push_back("manifest.json");

    json cfg{{"window", opts->window},   {"stride", opts->stride}, {"n_train", opts->n_train},
             {"seed", opts->seed},       {"dt", dt},               {"resampled", resample},
             {"target_nx", target.nx},   {"target_ny", target.ny}, {"target_nz", target.nz},
             {"masked", bool(mask)},     {"norm_mean", manifest.norm.mean},
             {"norm_std", manifest.norm.std}};
    write_index(out_dir, "prepare", std::move(cfg), std::move(artifacts), 1);
  });
}

void ufno_train_opts_init(ufno_train_opts* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  ufno::TrainConfig tcfg;
  ufno::FnoConfig mcfg;
  o->epochs = tcfg.epochs;
  o->learning_rate = tcfg.lr;
  o->seed = 0;
  o->modes = mcfg.modes;
  o->width = mcfg.width;
  o->layers = mcfg.layers;
  o->activation = "gelu";
  o->grad_check = 0;
  o->threads = 1;
}

ufno_status ufno_train(const char* manifest_path, const ufno_train_opts* opts,
                       const char* out_dir) {
  return guarded([&] {
    if (!manifest_path || !opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    auto data = ufno::load_samples(manifest_path);

    ufno::TrainConfig tcfg;
    tcfg.epochs = opts->epochs;
    tcfg.lr = opts->learning_rate;
    tcfg.seed = opts->seed;
    tcfg.grad_check = opts->grad_check != 0;

    ufno::FnoConfig mcfg;
    mcfg.modes = opts->modes;
    mcfg.width = opts->width;
    mcfg.layers = opts->layers;
    mcfg.in_channels = std::uint32_t(data.input_steps());
    mcfg.out_channels = 1;
    mcfg.activation = opts->activation ? opts->activation : "gelu";

    fs::create_directories(out_dir);
    auto result = ufno::train(data, tcfg, mcfg);

    ufno::save_checkpoint(result.best, (fs::path(out_dir) / "checkpoint_best.ufck").string());
    ufno::save_checkpoint(result.last, (fs::path(out_dir) / "checkpoint_final.ufck").string());
    ufno::write_loss_curves_csv(result.curves, (fs::path(out_dir) / "loss_curves.csv").string());

    json cfg{{"epochs", tcfg.epochs},
             {"learning_rate", tcfg.lr},
             {"batch", tcfg.batch},
             {"seed", tcfg.seed},
             {"modes", mcfg.modes},
             {"width", mcfg.width},
             {"layers", mcfg.layers},
             {"in_channels", mcfg.in_channels},
             {"activation", mcfg.activation},
             {"grad_check", tcfg.grad_check},
             {"trainable_parameters", ufno::param_count(mcfg)},
             {"manifest_hash", data.manifest_hash},
             {"final_train_loss", result.curves.back().train_loss},
             {"final_test_loss", result.curves.back().test_loss},
             {"best_test_loss", result.best.test_loss_history.empty()
                                    ? 0.0
                                    : *std::min_element(result.best.test_loss_history.begin(),
                                                        result.best.test_loss_history.end())}};
    write_index(out_dir, "train",
                std::move(cfg),
                {"checkpoint_best.ufck", "checkpoint_final.ufck", "loss_curves.csv"},
                opts->threads);
  });
}

void ufno_eval_opts_init(ufno_eval_opts* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->split = "test";
  o->label = "default";
  o->pdf_bin_width = 0.25;
  o->cond_bin_width = 0.25;
}

ufno_status ufno_eval(const char* checkpoint_path, const char* manifest_path,
                      const ufno_eval_opts* opts, const char* out_dir) {
  return guarded([&] {
    if (!checkpoint_path || !manifest_path || !opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    auto ckpt = ufno::load_checkpoint(checkpoint_path);
    auto data = ufno::load_samples(manifest_path);
    fs::create_directories(out_dir);

    const std::string split = opts->split ? opts->split : "test";
    std::vector<std::uint32_t> indices;
    if (split == "test")
      indices = data.test;
    else if (split == "train")
      indices = data.train;
    else if (split == "all") {
      indices = data.train;
      indices.insert(indices.end(), data.test.begin(), data.test.end());
      std::sort(indices.begin(), indices.end());
    } else {
      ufno::fail(ufno::ErrorCode::invalid_argument, "eval: split must be test|train|all");
    }

    auto eval = ufno::one_step_eval(ckpt.params, data, indices);

    // Representative sample for the distribution analyses: first window of
    // the split, prediction masked like the training data.
    const auto& w = data.windows[indices.front()];
    ufno::Tensor<float> input, target;
    ufno::assemble_sample(data, w, input, target);
    ufno::FnoWorkspace<float> ws(ckpt.params.config, data.grid.nx, data.grid.ny, data.grid.nz);
    auto pred_t = fno_forward(input, ckpt.params, ws);

    std::optional<ufno::BuildingMask> mask;
    const auto mask_path = fs::path(manifest_path).parent_path() / "mask.umsk";
    if (fs::exists(mask_path)) mask = ufno::read_mask(mask_path.string());

    ufno::ScalarField pred(data.grid), truth(data.grid);
    for (std::size_t c = 0; c < pred.values.size(); ++c) {
      const bool solid = mask && mask->solid[c];
      pred.values[c] = solid ? 0.0 : double(pred_t.channel(0)[c]);
      truth.values[c] = double(target.channel(0)[c]);
    }

    auto pdf_truth = ufno::velocity_pdf(truth, opts->pdf_bin_width);
    auto pdf_pred = ufno::velocity_pdf(pred, opts->pdf_bin_width);
    auto cond = ufno::conditional_error(pred, truth, opts->cond_bin_width);
    auto prof_truth = ufno::height_profile(truth);
    auto prof_pred = ufno::height_profile(pred);

    // pdf.csv / height_profile.csv carry both series.
    {
      std::ofstream os(fs::path(out_dir) / "pdf.csv", std::ios::trunc);
      os << "series,bin_lo,bin_hi,count,density\n";
      for (std::size_t b = 0; b < pdf_truth.density.size(); ++b)
        os << "truth," << b * pdf_truth.bin_width << "," << (b + 1) * pdf_truth.bin_width << ","
           << pdf_truth.counts[b] << "," << pdf_truth.density[b] << "\n";
      for (std::size_t b = 0; b < pdf_pred.density.size(); ++b)
        os << "prediction," << b * pdf_pred.bin_width << "," << (b + 1) * pdf_pred.bin_width
           << "," << pdf_pred.counts[b] << "," << pdf_pred.density[b] << "\n";
    }
    ufno::write_conditional_error_csv(cond, (fs::path(out_dir) / "cond_error.csv").string());
    {
      std::ofstream os(fs::path(out_dir) / "height_profile.csv", std::ios::trunc);
      os << "series,z_index,z_meters,mean,std\n";
      for (std::size_t k = 0; k < prof_truth.mean.size(); ++k)
        os << "truth," << k << "," << data.grid.zc(std::uint32_t(k)) << "," << prof_truth.mean[k]
           << "," << prof_truth.std[k] << "\n";
      for (std::size_t k = 0; k < prof_pred.mean.size(); ++k)
        os << "prediction," << k << "," << data.grid.zc(std::uint32_t(k)) << ","
           << prof_pred.mean[k] << "," << prof_pred.std[k] << "\n";
    }
    {
      std::ofstream os(fs::path(out_dir) / "per_sample_loss.csv", std::ios::trunc);
      os << "window_index,loss\n";
      for (std::size_t i = 0; i < indices.size(); ++i)
        os << indices[i] << "," << eval.per_sample[i] << "\n";
    }

    json report;
    report["label"] = opts->label ? opts->label : "default";
    report["split"] = split;
    report["mean_loss"] = eval.mean_loss;
    report["samples"] = eval.per_sample.size();
    report["representative_window"] = indices.front();
    report["masked"] = bool(mask);
    report["checkpoint_epoch"] = ckpt.epoch;
    {
      std::ofstream os(fs::path(out_dir) / "metrics.json", std::ios::trunc);
      os << report.dump(2) << "\n";
    }

    json cfg{{"checkpoint", checkpoint_path},
             {"manifest", manifest_path},
             {"split", split},
             {"pdf_bin_width", opts->pdf_bin_width},
             {"cond_bin_width", opts->cond_bin_width}};
    write_index(out_dir, "eval", std::move(cfg),
                {"metrics.json", "per_sample_loss.csv", "pdf.csv", "cond_error.csv",
                 "height_profile.csv"},
                1);
  });
}

void ufno_rollout_opts_init(ufno_rollout_opts* o) {
  if (!o) return;
  std::memset(o, 0, sizeof(*o));
  o->n_steps = 50;
  o->start_frame = 0;
  o->write_fields = 0;
}

ufno_status ufno_rollout(const char* checkpoint_path, const char* manifest_path,
                         const ufno_rollout_opts* opts, const char* out_dir) {
  return guarded([&] {
    if (!checkpoint_path || !manifest_path || !opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    auto ckpt = ufno::load_checkpoint(checkpoint_path);
    auto data = ufno::load_samples(manifest_path);
    fs::create_directories(out_dir);

    const std::size_t in = ckpt.params.config.in_channels;
    if (opts->start_frame + in > data.frames.size())
      ufno::fail(ufno::ErrorCode::invalid_argument, "rollout: not enough frames for the window");

    ufno::BuildingMask mask(data.grid);
    const auto mask_path = opts->mask_path
                               ? fs::path(opts->mask_path)
                               : fs::path(manifest_path).parent_path() / "mask.umsk";
    if (opts->mask_path || fs::exists(mask_path)) {
      mask = ufno::read_mask(mask_path.string());
      if (!(mask.grid == data.grid))
        ufno::fail(ufno::ErrorCode::invalid_argument, "rollout: mask grid mismatch");
    }

    std::vector<ufno::ScalarField> initial;
    for (std::size_t s = 0; s < in; ++s) {
      ufno::ScalarField f(data.grid);
      const auto& frame = data.frames[opts->start_frame + s];
      for (std::size_t c = 0; c < frame.size(); ++c) f.values[c] = double(frame[c]);
      initial.push_back(std::move(f));
    }

    auto pred = ufno::rollout(ckpt.params, initial, mask, data.norm, opts->n_steps, data.dt);

    std::vector<std::string> artifacts;
    if (opts->write_fields) {
      for (std::size_t t = 0; t < pred.fields.size(); ++t) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "rollout_%05zu.ufn", t);
        ufno::write_field(pred.fields[t], (fs::path(out_dir) / buf).string());
        artifacts.push_back(buf);
      }
    }

    json report;
    report["n_steps"] = opts->n_steps;
    report["start_frame"] = opts->start_frame;
    const std::size_t truth_begin = opts->start_frame + in;
    const bool have_truth = truth_begin + opts->n_steps <= data.frames.size();
    report["truth_available"] = have_truth;
    if (have_truth) {
      ufno::FieldSequence truth;
      truth.dt = data.dt;
      for (std::uint32_t t = 0; t < opts->n_steps; ++t) {
        ufno::ScalarField f(data.grid);
        const auto& frame = data.frames[truth_begin + t];
        for (std::size_t c = 0; c < frame.size(); ++c) f.values[c] = double(frame[c]);
        truth.fields.push_back(std::move(f));
      }
      auto ae = ufno::accumulated_error(pred, truth);
      ufno::write_rollout_error_csv(ae, (fs::path(out_dir) / "rollout_error.csv").string());
      artifacts.push_back("rollout_error.csv");
      report["first_step_mean_abs_error"] = ae.mean_abs.front();
      report["last_step_mean_abs_error"] = ae.mean_abs.back();
    }
    {
      std::ofstream os(fs::path(out_dir) / "metrics.json", std::ios::trunc);
      os << report.dump(2) << "\n";
    }
    artifacts.push_back("metrics.json");

    json cfg{{"checkpoint", checkpoint_path},
             {"manifest", manifest_path},
             {"n_steps", opts->n_steps},
             {"start_frame", opts->start_frame},
             {"write_fields", opts->write_fields != 0}};
    write_index(out_dir, "rollout", std::move(cfg), std::move(artifacts), 1);
  });
}

ufno_status ufno_bench(const char* checkpoint_path, const char* scene_path,
                       const ufno_solver_opts* solver_opts, uint32_t n_repeats,
                       const char* out_dir) {
  return guarded([&] {
    if (!checkpoint_path || !scene_path || !solver_opts || !out_dir)
      ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    auto ckpt = ufno::load_checkpoint(checkpoint_path);
    auto scene = ufno::read_scene(scene_path);
    auto cfg = solver_config_from(*solver_opts);
    fs::create_directories(out_dir);

    auto result = ufno::bench(ckpt.params, scene, cfg, n_repeats);
    ufno::write_bench_csv(result, (fs::path(out_dir) / "bench.csv").string());

    json jcfg = solver_opts_json(*solver_opts);
    jcfg["n_repeats"] = n_repeats;
    jcfg["checkpoint"] = checkpoint_path;
    jcfg["median_solver_ms"] = result.solver_median_ms;
    jcfg["median_fno_ms"] = result.fno_median_ms;
    jcfg["speedup"] = result.speedup;
    write_index(out_dir, "bench", std::move(jcfg), {"bench.csv"}, solver_opts->threads);
  });
}

ufno_status ufno_export_vtk(const char* field_path, const char* vtk_path) {
  return guarded([&] {
    if (!field_path || !vtk_path) ufno::fail(ufno::ErrorCode::invalid_argument, "null argument");
    auto f = ufno::read_field(field_path);
    ufno::write_vtk(f, vtk_path);
  });
}

} // extern "C"

// ufno command-line front end. Thin flag parsing over the C API; every
// subcommand writes its artifacts plus an index.json under --out.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure, 4 I/O or
// file-format failure.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include <ufno.h>

namespace {

int status_to_exit(ufno_status s) {
  switch (s) {
    case UFNO_OK: return 0;
    case UFNO_ERR_INVALID: return 2;
    case UFNO_ERR_NUMERIC: return 3;
    case UFNO_ERR_IO:
    case UFNO_ERR_FORMAT: return 4;
  }
  return 2;
}

int finish(ufno_status s) {
  if (s != UFNO_OK) std::fprintf(stderr, "ufno: %s\n", ufno_last_error());
  return status_to_exit(s);
}

/// Required input paths are part of the run configuration: a missing one is
/// a configuration error (exit 2), not an I/O failure.
bool inputs_exist(std::initializer_list<const std::string*> paths, int& exit_code) {
  for (const auto* p : paths) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      std::fprintf(stderr, "ufno: required input does not exist: %s\n", p->c_str());
      exit_code = 2;
      return false;
    }
  }
  return true;
}

void add_solver_flags(CLI::App* cmd, ufno_solver_opts& o) {
  cmd->add_option("--direction", o.direction_degrees,
                  "wind origin in degrees: 0 west, 90 north, 180 east, 270 south");
  cmd->add_option("--reynolds", o.reynolds, "Reynolds number");
  cmd->add_option("--prandtl", o.prandtl, "Prandtl number");
  cmd->add_option("--grashof", o.grashof, "Grashof number (thermal runs)");
  cmd->add_option("--cs", o.smagorinsky_cs, "Smagorinsky constant [0.1, 0.24]");
  cmd->add_option("--courant", o.courant, "Courant number");
  cmd->add_option("--u-ref", o.u_ref, "reference inflow speed (m/s)");
  cmd->add_option("--z-ref", o.z_ref, "reference profile height (m)");
  cmd->add_option("--alpha-exp", o.alpha, "power-law exponent");
  cmd->add_flag("--thermal", o.thermal, "enable temperature transport and buoyancy");
  cmd->add_option("--pr-t", o.prandtl_turbulent, "turbulent Prandtl number");
  cmd->add_flag("--linear-interp", o.linear_interpolation,
                "trilinear advection sampling instead of cubic");
  cmd->add_flag("--sor", o.use_sor, "red-black SOR pressure sweeps instead of damped Jacobi");
  cmd->add_option("--proj-tol", o.projection_tol, "projection divergence tolerance (lattice)");
  cmd->add_option("--proj-iters", o.max_projection_iters, "max pressure sweeps per step");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ufno - semi-Lagrangian LES wind data + Fourier neural operator surrogate"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read defaults from a TOML-style config file");
  unsigned threads = 1;
  app.add_option("--threads", threads, "internal parallelism cap (recorded in outputs)")
      ->check(CLI::PositiveNumber);

  int exit_code = 0;

  // generate
  auto* gen = app.add_subcommand("generate", "run the flow solver over a scene");
  std::string gen_scene, gen_out;
  ufno_solver_opts gen_opts;
  ufno_solver_opts_init(&gen_opts);
  gen->add_option("scene", gen_scene, "scene JSON")->required();
  gen->add_option("-o,--out", gen_out, "output directory")->required();
  gen->add_option("--steps", gen_opts.n_steps, "time steps to run");
  gen->add_option("--output-stride", gen_opts.output_stride, "emit every Nth step");
  add_solver_flags(gen, gen_opts);
  gen->callback([&] {
    if (!inputs_exist({&gen_scene}, exit_code)) return;
    gen_opts.threads = threads;
    exit_code = finish(ufno_generate(gen_scene.c_str(), &gen_opts, gen_out.c_str()));
  });

  // prepare
  auto* prep = app.add_subcommand("prepare", "window, split and normalize generated fields");
  std::string prep_fields, prep_out, prep_mask;
  ufno_prepare_opts prep_opts;
  ufno_prepare_opts_init(&prep_opts);
  std::vector<unsigned> target_dims;
  prep->add_option("fields", prep_fields, "directory of field_*.ufn snapshots")->required();
  prep->add_option("-o,--out", prep_out, "output directory")->required();
  prep->add_option("--window", prep_opts.window, "steps per sample");
  prep->add_option("--stride", prep_opts.stride, "window stride");
  prep->add_option("--n-train", prep_opts.n_train, "training sample count")->required();
  prep->add_option("--seed", prep_opts.seed, "split seed");
  prep->add_option("--target", target_dims, "downsample to nx ny nz")->expected(3);
  prep->add_option("--mask", prep_mask, "building mask (defaults to fields/mask.umsk)");
  prep->add_option("--dt", prep_opts.dt, "frame spacing in seconds (default: from summary.json)");
  prep->callback([&] {
    if (target_dims.size() == 3) {
      prep_opts.target_nx = target_dims[0];
      prep_opts.target_ny = target_dims[1];
      prep_opts.target_nz = target_dims[2];
    }
    if (!prep_mask.empty()) prep_opts.mask_path = prep_mask.c_str();
    if (!inputs_exist({&prep_fields, &prep_mask}, exit_code)) return;
    exit_code = finish(ufno_prepare(prep_fields.c_str(), &prep_opts, prep_out.c_str()));
  });

  // train
  auto* tr = app.add_subcommand("train", "train the surrogate on a prepared dataset");
  std::string tr_manifest, tr_out, tr_act = "gelu";
  ufno_train_opts tr_opts;
  ufno_train_opts_init(&tr_opts);
  tr->add_option("manifest", tr_manifest, "dataset manifest JSON")->required();
  tr->add_option("-o,--out", tr_out, "output directory")->required();
  tr->add_option("--epochs", tr_opts.epochs, "training epochs");
  tr->add_option("--lr", tr_opts.learning_rate, "learning rate");
  tr->add_option("--seed", tr_opts.seed, "init/shuffle seed");
  tr->add_option("--modes", tr_opts.modes, "retained Fourier modes per axis");
  tr->add_option("--width", tr_opts.width, "hidden channel count");
  tr->add_option("--layers", tr_opts.layers, "Fourier layer count");
  tr->add_option("--activation", tr_act, "gelu or relu");
  tr->add_flag("--grad-check", tr_opts.grad_check, "finite-difference spot check before training");
  tr->callback([&] {
    if (!inputs_exist({&tr_manifest}, exit_code)) return;
    tr_opts.activation = tr_act.c_str();
    tr_opts.threads = threads;
    exit_code = finish(ufno_train(tr_manifest.c_str(), &tr_opts, tr_out.c_str()));
  });

  // eval
  auto* ev = app.add_subcommand("eval", "one-step evaluation and distribution analyses");
  std::string ev_ckpt, ev_manifest, ev_out, ev_split = "test", ev_label = "default";
  ufno_eval_opts ev_opts;
  ufno_eval_opts_init(&ev_opts);
  ev->add_option("checkpoint", ev_ckpt, "trained checkpoint")->required();
  ev->add_option("manifest", ev_manifest, "dataset manifest JSON")->required();
  ev->add_option("-o,--out", ev_out, "output directory")->required();
  ev->add_option("--split", ev_split, "test, train or all");
  ev->add_option("--label", ev_label, "scenario label recorded in metrics.json");
  ev->add_option("--pdf-bin", ev_opts.pdf_bin_width, "PDF bin width (m/s)");
  ev->add_option("--cond-bin", ev_opts.cond_bin_width, "conditional-error bin width (m/s)");
  ev->callback([&] {
    if (!inputs_exist({&ev_ckpt, &ev_manifest}, exit_code)) return;
    ev_opts.split = ev_split.c_str();
    ev_opts.label = ev_label.c_str();
    exit_code = finish(
        ufno_eval(ev_ckpt.c_str(), ev_manifest.c_str(), &ev_opts, ev_out.c_str()));
  });

  // rollout
  auto* ro = app.add_subcommand("rollout", "autoregressive multi-step forecast");
  std::string ro_ckpt, ro_manifest, ro_out, ro_mask;
  ufno_rollout_opts ro_opts;
  ufno_rollout_opts_init(&ro_opts);
  ro->add_option("checkpoint", ro_ckpt, "trained checkpoint")->required();
  ro->add_option("manifest", ro_manifest, "dataset manifest JSON")->required();
  ro->add_option("-o,--out", ro_out, "output directory")->required();
  ro->add_option("--steps", ro_opts.n_steps, "forecast steps");
  ro->add_option("--start", ro_opts.start_frame, "first history frame index");
  ro->add_option("--mask", ro_mask, "building mask (defaults to manifest-side mask.umsk)");
  ro->add_flag("--write-fields", ro_opts.write_fields, "write predicted fields as .ufn");
  ro->callback([&] {
    if (!inputs_exist({&ro_ckpt, &ro_manifest, &ro_mask}, exit_code)) return;
    if (!ro_mask.empty()) ro_opts.mask_path = ro_mask.c_str();
    exit_code = finish(
        ufno_rollout(ro_ckpt.c_str(), ro_manifest.c_str(), &ro_opts, ro_out.c_str()));
  });

  // bench
  auto* be = app.add_subcommand("bench", "solver step vs surrogate forward timing");
  std::string be_ckpt, be_scene, be_out;
  unsigned be_repeats = 10;
  ufno_solver_opts be_opts;
  ufno_solver_opts_init(&be_opts);
  be->add_option("checkpoint", be_ckpt, "trained checkpoint")->required();
  be->add_option("scene", be_scene, "scene JSON")->required();
  be->add_option("-o,--out", be_out, "output directory")->required();
  be->add_option("--repeats", be_repeats, "timed repeats per engine");
  add_solver_flags(be, be_opts);
  be->callback([&] {
    if (!inputs_exist({&be_ckpt, &be_scene}, exit_code)) return;
    be_opts.threads = threads;
    exit_code = finish(
        ufno_bench(be_ckpt.c_str(), be_scene.c_str(), &be_opts, be_repeats, be_out.c_str()));
  });

  // export-vtk
  auto* ex = app.add_subcommand("export-vtk", "convert a field file to legacy VTK");
  std::string ex_field, ex_vtk;
  ex->add_option("field", ex_field, "input .ufn field")->required();
  ex->add_option("vtk", ex_vtk, "output .vtk path")->required();
  ex->callback([&] {
    if (!inputs_exist({&ex_field}, exit_code)) return;
    exit_code = finish(ufno_export_vtk(ex_field.c_str(), ex_vtk.c_str()));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return exit_code;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <ufno.h>

namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "ufno_capi_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_scene(const fs::path& dir) {
  const auto path = dir / "scene.json";
  std::ofstream os(path);
  os << R"({"grid": {"nx": 12, "ny": 10, "nz": 8, "dx": 1.0, "dy": 1.0, "dz": 1.0},
            "boxes": [{"min": [4.0, 3.0, 0.0], "size": [2.0, 2.0, 4.0]}]})";
  return path.string();
}

} // namespace

TEST_CASE("field handle lifecycle and IO") {
  const auto dir = work_dir();
  double origin[3] = {0.0, 0.0, 0.0};
  std::vector<double> vals(4 * 4 * 4);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = double(i) * 0.25;

  ufno_field* f = nullptr;
  REQUIRE(ufno_field_create(4, 4, 4, 1.0, 1.0, 1.0, origin, vals.data(), &f) == UFNO_OK);
  uint32_t nx, ny, nz;
  CHECK(ufno_field_dims(f, &nx, &ny, &nz) == UFNO_OK);
  CHECK(nx == 4);
  CHECK(ufno_field_values(f)[5] == 1.25);

  const auto path = (dir / "f.ufn").string();
  CHECK(ufno_field_write(f, path.c_str()) == UFNO_OK);
  ufno_field* r = nullptr;
  CHECK(ufno_field_read(path.c_str(), &r) == UFNO_OK);
  CHECK(std::memcmp(ufno_field_values(r), ufno_field_values(f), vals.size() * 8) == 0);
  ufno_field_free(f);
  ufno_field_free(r);

  ufno_field* missing = nullptr;
  CHECK(ufno_field_read((dir / "nope.ufn").string().c_str(), &missing) == UFNO_ERR_IO);
  CHECK(std::strlen(ufno_last_error()) > 0);
}

TEST_CASE("invalid grids are rejected through the C surface") {
  ufno_field* f = nullptr;
  CHECK(ufno_field_create(1, 4, 4, 1.0, 1.0, 1.0, nullptr, nullptr, &f) == UFNO_ERR_INVALID);
  CHECK(ufno_field_create(4, 4, 4, -1.0, 1.0, 1.0, nullptr, nullptr, &f) == UFNO_ERR_INVALID);
}

TEST_CASE("full pipeline through the C API") {
  const auto dir = work_dir() / "pipeline";
  fs::create_directories(dir);
  const auto scene = write_scene(dir);

  // generate (small and quick: SOR + few steps)
  ufno_solver_opts sopts;
  ufno_solver_opts_init(&sopts);
  sopts.n_steps = 14;
  sopts.use_sor = 1;
  const auto gen_dir = (dir / "gen").string();
  REQUIRE(ufno_generate(scene.c_str(), &sopts, gen_dir.c_str()) == UFNO_OK);
  CHECK(fs::exists(fs::path(gen_dir) / "field_00000.ufn"));
  CHECK(fs::exists(fs::path(gen_dir) / "field_00013.ufn"));
  CHECK(fs::exists(fs::path(gen_dir) / "mask.umsk"));
  CHECK(fs::exists(fs::path(gen_dir) / "summary.json"));
  CHECK(fs::exists(fs::path(gen_dir) / "index.json"));

  // prepare with downsampling to 6x5x8
  ufno_prepare_opts popts;
  ufno_prepare_opts_init(&popts);
  popts.window = 6;
  popts.stride = 1;
  popts.n_train = 6;
  popts.seed = 4;
  popts.target_nx = 6;
  popts.target_ny = 5;
  popts.target_nz = 8;
  const auto prep_dir = (dir / "prep").string();
  REQUIRE(ufno_prepare(gen_dir.c_str(), &popts, prep_dir.c_str()) == UFNO_OK);
  CHECK(fs::exists(fs::path(prep_dir) / "manifest.json"));
  CHECK(fs::exists(fs::path(prep_dir) / "mask.umsk"));

  // train a tiny model briefly
  ufno_train_opts topts;
  ufno_train_opts_init(&topts);
  topts.epochs = 2;
  topts.modes = 2;
  topts.width = 4;
  topts.layers = 1;
  topts.seed = 7;
  const auto train_dir = (dir / "train").string();
  const auto manifest = (fs::path(prep_dir) / "manifest.json").string();
  REQUIRE(ufno_train(manifest.c_str(), &topts, train_dir.c_str()) == UFNO_OK);
  const auto ckpt = (fs::path(train_dir) / "checkpoint_best.ufck").string();
  REQUIRE(fs::exists(ckpt));
  CHECK(fs::exists(fs::path(train_dir) / "loss_curves.csv"));

  // checkpoint info + forward
  ufno_checkpoint* c = nullptr;
  REQUIRE(ufno_checkpoint_load(ckpt.c_str(), &c) == UFNO_OK);
  uint32_t epoch, modes, width, layers;
  uint64_t params;
  CHECK(ufno_checkpoint_info(c, &epoch, &params, &modes, &width, &layers) == UFNO_OK);
  CHECK(epoch == 2);
  CHECK(modes == 2);
  CHECK(params > 0);

  ufno_field* inputs[5];
  for (int s = 0; s < 5; ++s) {
    const auto fp = (fs::path(prep_dir) / ("field_0000" + std::to_string(s) + ".ufn")).string();
    REQUIRE(ufno_field_read(fp.c_str(), &inputs[s]) == UFNO_OK);
  }
  ufno_field* pred = nullptr;
  REQUIRE(ufno_checkpoint_forward(c, inputs, 5, 1.0, 0.5, &pred) == UFNO_OK);
  uint32_t pnx;
  ufno_field_dims(pred, &pnx, nullptr, nullptr);
  CHECK(pnx == 6);
  CHECK(ufno_checkpoint_forward(c, inputs, 3, 1.0, 0.5, &pred) == UFNO_ERR_INVALID);

  // eval + rollout + bench + vtk
  ufno_eval_opts eopts;
  ufno_eval_opts_init(&eopts);
  const auto eval_dir = (dir / "eval").string();
  REQUIRE(ufno_eval(ckpt.c_str(), manifest.c_str(), &eopts, eval_dir.c_str()) == UFNO_OK);
  for (const char* name : {"metrics.json", "pdf.csv", "cond_error.csv", "height_profile.csv",
                           "per_sample_loss.csv", "index.json"})
    CHECK(fs::exists(fs::path(eval_dir) / name));

  ufno_rollout_opts ropts;
  ufno_rollout_opts_init(&ropts);
  ropts.n_steps = 4;
  ropts.write_fields = 1;
  const auto roll_dir = (dir / "roll").string();
  REQUIRE(ufno_rollout(ckpt.c_str(), manifest.c_str(), &ropts, roll_dir.c_str()) == UFNO_OK);
  CHECK(fs::exists(fs::path(roll_dir) / "rollout_error.csv"));
  CHECK(fs::exists(fs::path(roll_dir) / "rollout_00003.ufn"));

  // Rollout predictions honor the mask.
  ufno_mask* mask = nullptr;
  REQUIRE(ufno_mask_read((fs::path(prep_dir) / "mask.umsk").string().c_str(), &mask) == UFNO_OK);
  ufno_field* rolled = nullptr;
  REQUIRE(ufno_field_read((fs::path(roll_dir) / "rollout_00000.ufn").string().c_str(), &rolled) ==
          UFNO_OK);
  const uint8_t* solid = ufno_mask_solid(mask);
  const double* rv = ufno_field_values(rolled);
  for (std::size_t cix = 0; cix < 6 * 5 * 8; ++cix)
    if (solid[cix]) CHECK(rv[cix] == 0.0);

  ufno_solver_opts bopts;
  ufno_solver_opts_init(&bopts);
  bopts.use_sor = 1;
  const auto bench_dir = (dir / "bench").string();
  // Bench runs at the scene resolution (12x10x8) against the 6x5x8-trained
  // model: the Nyquist check still passes for modes=2.
  REQUIRE(ufno_bench(ckpt.c_str(), scene.c_str(), &bopts, 3, bench_dir.c_str()) == UFNO_OK);
  CHECK(fs::exists(fs::path(bench_dir) / "bench.csv"));

  const auto vtk = (dir / "slice.vtk").string();
  REQUIRE(ufno_export_vtk((fs::path(prep_dir) / "field_00000.ufn").string().c_str(),
                          vtk.c_str()) == UFNO_OK);
  CHECK(fs::exists(vtk));

  for (auto* fp : inputs) ufno_field_free(fp);
  ufno_field_free(pred);
  ufno_field_free(rolled);
  ufno_mask_free(mask);
  ufno_checkpoint_free(c);
}

TEST_CASE("status codes map error classes") {
  ufno_prepare_opts popts;
  ufno_prepare_opts_init(&popts);
  popts.n_train = 1;
  CHECK(ufno_prepare("/definitely/missing/dir", &popts, "/tmp/ufno_unused") == UFNO_ERR_IO);

  ufno_checkpoint* c = nullptr;
  const auto bogus = work_dir() / "bogus.ufck";
  std::ofstream(bogus) << "not a checkpoint";
  CHECK(ufno_checkpoint_load(bogus.string().c_str(), &c) == UFNO_ERR_FORMAT);
}

#include "ufno/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ufno/field_io.hpp"
#include "ufno/fno_grad.hpp"
#include "ufno/loss.hpp"
#include "ufno/rng.hpp"

namespace ufno {

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::invalid_argument, "train: epochs must be >= 1");
  if (!(lr > 0.0)) fail(ErrorCode::invalid_argument, "train: learning rate must be positive");
  if (batch < 1) fail(ErrorCode::invalid_argument, "train: batch must be >= 1");
}

SampleSet load_samples(const std::string& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const auto base = std::filesystem::path(manifest_path).parent_path();

  SampleSet set;
  set.dt = m.dt;
  set.windows = m.windows;
  set.train = m.train;
  set.test = m.test;
  set.norm = m.norm;
  set.split_seed = m.seed;
  set.manifest_hash = file_hash_hex(manifest_path);

  set.frames.reserve(m.fields.size());
  for (const auto& rel : m.fields) {
    const auto path = std::filesystem::path(rel).is_absolute() ? std::filesystem::path(rel)
                                                               : base / rel;
    ScalarField f = read_field(path.string());
    if (set.frames.empty())
      set.grid = f.grid;
    else if (!(f.grid == set.grid))
      fail(ErrorCode::invalid_argument, path.string() + ": grid differs from the first field");
    std::vector<float> frame(f.values.size());
    for (std::size_t c = 0; c < frame.size(); ++c) frame[c] = float(f.values[c]);
    set.frames.push_back(std::move(frame));
  }
  return set;
}

void assemble_sample(const SampleSet& data, const SampleWindow& w, Tensor<float>& input,
                     Tensor<float>& target) {
  const Grid3& g = data.grid;
  const std::size_t n = g.cell_count();
  const std::size_t steps = w.input_indices.size();
  if (input.c != steps || input.cell_count() != n)
    input = Tensor<float>(steps, g.nx, g.ny, g.nz);
  if (target.c != 1 || target.cell_count() != n) target = Tensor<float>(1, g.nx, g.ny, g.nz);

  const float mean = float(data.norm.mean);
  const float inv_std = float(1.0 / data.norm.std);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto& frame = data.frames.at(w.input_indices[s]);
    float* dst = input.channel(s);
    for (std::size_t c = 0; c < n; ++c) dst[c] = (frame[c] - mean) * inv_std;
  }
  const auto& tgt = data.frames.at(w.target_index);
  std::copy(tgt.begin(), tgt.end(), target.channel(0));
}

namespace {

double mean_loss_over(const SampleSet& data, const std::vector<std::uint32_t>& idx,
                      const FnoParameters<float>& params, FnoWorkspace<float>& ws) {
  if (idx.empty()) return 0.0;
  Tensor<float> input, target;
  double total = 0.0;
  for (auto wi : idx) {
    assemble_sample(data, data.windows[wi], input, target);
    auto out = fno_forward(input, params, ws);
    total += layerwise_relative_loss(out.channel(0), target.channel(0), data.grid.nx,
                                     data.grid.ny, data.grid.nz);
  }
  return total / double(idx.size());
}

/// Finite-difference spot check of the assembled pipeline in double
/// precision on the first training window.
void run_grad_spot_check(const SampleSet& data, const FnoConfig& mcfg, std::uint64_t seed) {
  const Grid3& g = data.grid;
  auto paramsd = init_parameters<double>(mcfg, seed);
  FnoWorkspace<double> wsd(mcfg, g.nx, g.ny, g.nz);
  Tensor<float> inf, tgf;
  assemble_sample(data, data.windows[data.train.front()], inf, tgf);
  Tensor<double> input(inf.c, inf.x, inf.y, inf.z), target(1, tgf.x, tgf.y, tgf.z);
  for (std::size_t i = 0; i < input.size(); ++i) input.v[i] = double(inf.v[i]);
  for (std::size_t i = 0; i < target.size(); ++i) target.v[i] = double(tgf.v[i]);

  FnoTape<double> tape;
  auto out = fno_forward(input, paramsd, wsd, &tape);
  Tensor<double> go(1, g.nx, g.ny, g.nz);
  layerwise_relative_loss_grad(out.channel(0), target.channel(0), g.nx, g.ny, g.nz,
                               go.channel(0));
  auto grads = zero_parameters<double>(mcfg);
  fno_backward(input, paramsd, tape, go, wsd, grads);

  auto loss_at = [&]() {
    auto o = fno_forward(input, paramsd, wsd);
    return layerwise_relative_loss(o.channel(0), target.channel(0), g.nx, g.ny, g.nz);
  };
  std::vector<std::vector<double>*> pb;
  std::vector<const std::vector<double>*> gb;
  for_each_blob(paramsd, [&](const std::string&, std::vector<double>& b) { pb.push_back(&b); });
  for_each_blob(grads, [&](const std::string&, const std::vector<double>& b) { gb.push_back(&b); });
  Rng rng(seed + 17);
  for (int probe = 0; probe < 24; ++probe) {
    const std::size_t bi = rng.next_below(pb.size());
    if (pb[bi]->empty()) continue;
    const std::size_t ei = rng.next_below(pb[bi]->size());
    double& theta = (*pb[bi])[ei];
    const double saved = theta;
    const double h = std::max(1e-4 * std::abs(saved), 1e-5);
    theta = saved + h;
    const double lp = loss_at();
    theta = saved - h;
    const double lm = loss_at();
    theta = saved;
    const double fd = (lp - lm) / (2.0 * h);
    const double ad = (*gb[bi])[ei];
    if (std::abs(fd - ad) > 1e-4 * std::max({std::abs(fd), std::abs(ad), 1e-6}))
      fail(ErrorCode::numeric, "gradient spot check failed: fd=" + std::to_string(fd) +
                                   " ad=" + std::to_string(ad));
  }
}

} // namespace

TrainResult train(const SampleSet& data, const TrainConfig& tcfg, const FnoConfig& mcfg) {
  tcfg.validate();
  mcfg.validate();
  if (data.train.empty()) fail(ErrorCode::invalid_argument, "train: no training windows");
  if (data.frames.empty()) fail(ErrorCode::invalid_argument, "train: no frames loaded");
  if (data.input_steps() != mcfg.in_channels)
    fail(ErrorCode::invalid_argument,
         "train: window has " + std::to_string(data.input_steps()) +
             " input steps but the model expects " + std::to_string(mcfg.in_channels));

  const Grid3& g = data.grid;
  if (tcfg.grad_check) run_grad_spot_check(data, mcfg, tcfg.seed);

  auto params = init_parameters<float>(mcfg, tcfg.seed);
  auto adam = make_adam_state(params);
  FnoWorkspace<float> ws(mcfg, g.nx, g.ny, g.nz);

  TrainResult result;
  Rng shuffle_rng(tcfg.seed ^ 0x5eedc0ffee123456ull);
  std::vector<std::uint32_t> order = data.train;
  double best_test = std::numeric_limits<double>::infinity();

  Tensor<float> input, target;
  Tensor<float> grad_out(1, g.nx, g.ny, g.nz);
  auto grads = zero_parameters<float>(mcfg);

  for (std::uint32_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    double train_total = 0.0;
    for (auto wi : order) {
      assemble_sample(data, data.windows[wi], input, target);
      FnoTape<float> tape;
      auto out = fno_forward(input, params, ws, &tape);
      const double loss = layerwise_relative_loss_grad(out.channel(0), target.channel(0), g.nx,
                                                       g.ny, g.nz, grad_out.channel(0));
      if (!std::isfinite(loss) || loss > tcfg.divergence_abort)
        fail(ErrorCode::numeric, "training diverged at epoch " + std::to_string(epoch) +
                                     ", window " + std::to_string(wi) + ": loss " +
                                     std::to_string(loss));
      train_total += loss;
      for_each_blob(grads, [](const std::string&, std::vector<float>& b) {
        std::fill(b.begin(), b.end(), 0.0f);
      });
      fno_backward(input, params, tape, grad_out, ws, grads);
      check_gradients_finite(grads);
      adam_step(params, grads, adam, tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps);
    }

    const double test_loss = mean_loss_over(data, data.test, params, ws);
    const auto t1 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_total / double(order.size());
    rec.test_loss = test_loss;
    rec.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.curves.push_back(rec);

    result.last.params = params;
    result.last.adam = adam;
    result.last.has_adam = true;
    result.last.epoch = epoch;
    result.last.seed = tcfg.seed;
    result.last.manifest_hash = data.manifest_hash;
    result.last.train_loss_history.push_back(rec.train_loss);
    result.last.test_loss_history.push_back(rec.test_loss);
    if (test_loss < best_test || !result.best.has_adam) {
      best_test = std::min(best_test, test_loss);
      result.best = result.last;
    }
  }
  return result;
}

void write_loss_curves_csv(const std::vector<EpochRecord>& curves, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "epoch,train_loss,test_loss,wall_seconds\n";
  for (const auto& r : curves)
    os << r.epoch << "," << r.train_loss << "," << r.test_loss << "," << r.wall_seconds << "\n";
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

} // namespace ufno

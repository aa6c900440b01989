#include "ufno/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "ufno/fno.hpp"
#include "ufno/loss.hpp"

namespace ufno {

namespace {

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

Tensor<float> tensor_from_fields(const std::vector<const ScalarField*>& fields,
                                 const NormStats& norm) {
  const Grid3& g = fields.front()->grid;
  Tensor<float> t(fields.size(), g.nx, g.ny, g.nz);
  const float mean = float(norm.mean), inv_std = float(1.0 / norm.std);
  for (std::size_t s = 0; s < fields.size(); ++s) {
    float* dst = t.channel(s);
    const auto& vals = fields[s]->values;
    for (std::size_t c = 0; c < vals.size(); ++c) dst[c] = (float(vals[c]) - mean) * inv_std;
  }
  return t;
}

ScalarField field_from_output(const Tensor<float>& out, const Grid3& g,
                              const BuildingMask& mask) {
  ScalarField f(g);
  const float* src = out.channel(0);
  for (std::size_t c = 0; c < f.values.size(); ++c)
    f.values[c] = mask.solid[c] ? 0.0 : double(src[c]);
  return f;
}

} // namespace

OneStepEval one_step_eval(const FnoParameters<float>& params, const SampleSet& data,
                          const std::vector<std::uint32_t>& window_indices) {
  const Grid3& g = data.grid;
  params.config.check_grid(g.nx, g.ny, g.nz);
  FnoWorkspace<float> ws(params.config, g.nx, g.ny, g.nz);
  OneStepEval eval;
  Tensor<float> input, target;
  for (auto wi : window_indices) {
    if (wi >= data.windows.size())
      fail(ErrorCode::invalid_argument, "one_step_eval: window index out of range");
    assemble_sample(data, data.windows[wi], input, target);
    auto out = fno_forward(input, params, ws);
    eval.per_sample.push_back(
        layerwise_relative_loss(out.channel(0), target.channel(0), g.nx, g.ny, g.nz));
  }
  if (eval.per_sample.empty()) fail(ErrorCode::invalid_argument, "one_step_eval: no windows");
  double total = 0.0;
  for (double l : eval.per_sample) total += l;
  eval.mean_loss = total / double(eval.per_sample.size());
  return eval;
}

FieldSequence rollout(const FnoParameters<float>& params, const std::vector<ScalarField>& initial,
                      const BuildingMask& mask, const NormStats& norm, std::uint32_t n_steps,
                      double dt) {
  if (n_steps < 1) fail(ErrorCode::invalid_argument, "rollout: n_steps must be >= 1");
  if (initial.size() != params.config.in_channels)
    fail(ErrorCode::invalid_argument,
         "rollout: need " + std::to_string(params.config.in_channels) + " initial fields, got " +
             std::to_string(initial.size()));
  const Grid3& g = initial.front().grid;
  for (const auto& f : initial)
    if (!(f.grid == g)) fail(ErrorCode::invalid_argument, "rollout: initial fields differ in grid");
  if (!(mask.grid == g)) fail(ErrorCode::invalid_argument, "rollout: mask grid mismatch");
  params.config.check_grid(g.nx, g.ny, g.nz);

  FnoWorkspace<float> ws(params.config, g.nx, g.ny, g.nz);
  std::vector<const ScalarField*> window;
  for (const auto& f : initial) window.push_back(&f);

  FieldSequence out;
  out.dt = dt;
  out.fields.reserve(n_steps);
  for (std::uint32_t t = 0; t < n_steps; ++t) {
    auto input = tensor_from_fields(window, norm);
    auto pred = fno_forward(input, params, ws);
    out.fields.push_back(field_from_output(pred, g, mask));
    // Slide: drop the oldest input, append the masked prediction.
    window.erase(window.begin());
    window.push_back(&out.fields.back());
  }
  return out;
}

FieldSequence rollout_teacher_forced(const FnoParameters<float>& params,
                                     const FieldSequence& truth, const BuildingMask& mask,
                                     const NormStats& norm, std::uint32_t n_steps) {
  const std::size_t in = params.config.in_channels;
  if (truth.fields.size() < in + n_steps)
    fail(ErrorCode::invalid_argument, "rollout_teacher_forced: truth sequence too short");
  const Grid3& g = truth.fields.front().grid;
  FnoWorkspace<float> ws(params.config, g.nx, g.ny, g.nz);
  FieldSequence out;
  out.dt = truth.dt;
  for (std::uint32_t t = 0; t < n_steps; ++t) {
    std::vector<const ScalarField*> window;
    for (std::size_t s = 0; s < in; ++s) window.push_back(&truth.fields[t + s]);
    auto input = tensor_from_fields(window, norm);
    auto pred = fno_forward(input, params, ws);
    out.fields.push_back(field_from_output(pred, g, mask));
  }
  return out;
}

AccumulatedError accumulated_error(const FieldSequence& pred, const FieldSequence& truth) {
  if (pred.fields.size() != truth.fields.size())
    fail(ErrorCode::invalid_argument, "accumulated_error: sequence lengths differ");
  AccumulatedError ae;
  for (std::size_t t = 0; t < pred.fields.size(); ++t) {
    const auto& p = pred.fields[t];
    const auto& v = truth.fields[t];
    if (!(p.grid == v.grid)) fail(ErrorCode::invalid_argument, "accumulated_error: grid mismatch");
    const std::size_t n = p.values.size();
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) sum += std::abs(p.values[c] - v.values[c]);
    const double mean = sum / double(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = std::abs(p.values[c] - v.values[c]) - mean;
      var += d * d;
    }
    ae.mean_abs.push_back(mean);
    ae.std_abs.push_back(std::sqrt(var / double(n)));
  }
  return ae;
}

Histogram velocity_pdf(const std::vector<const ScalarField*>& fields, double bin_width) {
  if (!(bin_width > 0.0)) fail(ErrorCode::invalid_argument, "velocity_pdf: bin width must be positive");
  if (fields.empty()) fail(ErrorCode::invalid_argument, "velocity_pdf: no fields");
  double max_v = 0.0;
  std::size_t total = 0;
  for (const auto* f : fields) {
    for (double v : f->values) max_v = std::max(max_v, v);
    total += f->values.size();
  }
  Histogram h;
  h.bin_width = bin_width;
  const std::size_t bins = std::size_t(std::floor(max_v / bin_width)) + 1;
  h.counts.assign(bins, 0);
  for (const auto* f : fields)
    for (double v : f->values) {
      std::size_t b = std::size_t(std::floor(v / bin_width));
      if (b >= bins) b = bins - 1;
      ++h.counts[b];
    }
  h.density.resize(bins);
  for (std::size_t b = 0; b < bins; ++b)
    h.density[b] = double(h.counts[b]) / (double(total) * bin_width);
  return h;
}

Histogram velocity_pdf(const ScalarField& field, double bin_width) {
  return velocity_pdf(std::vector<const ScalarField*>{&field}, bin_width);
}

ConditionalError conditional_error(const ScalarField& pred, const ScalarField& truth,
                                   double bin_width) {
  if (!(pred.grid == truth.grid))
    fail(ErrorCode::invalid_argument, "conditional_error: grid mismatch");
  if (!(bin_width > 0.0))
    fail(ErrorCode::invalid_argument, "conditional_error: bin width must be positive");
  double max_v = 0.0;
  for (double v : truth.values) max_v = std::max(max_v, v);
  const std::size_t bins = std::size_t(std::floor(max_v / bin_width)) + 1;

  ConditionalError ce;
  ce.bin_width = bin_width;
  ce.mean_abs.assign(bins, 0.0);
  ce.occupied.assign(bins, false);
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t c = 0; c < truth.values.size(); ++c) {
    std::size_t b = std::size_t(std::floor(truth.values[c] / bin_width));
    if (b >= bins) b = bins - 1;
    ce.mean_abs[b] += std::abs(pred.values[c] - truth.values[c]);
    ++counts[b];
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (counts[b] > 0) {
      ce.mean_abs[b] /= double(counts[b]);
      ce.occupied[b] = true;
    }
  }
  return ce;
}

HeightProfile height_profile(const ScalarField& field) {
  const Grid3& g = field.grid;
  HeightProfile hp;
  const std::size_t plane = std::size_t(g.nx) * g.ny;
  for (std::uint32_t k = 0; k < g.nz; ++k) {
    const double* layer = field.values.data() + std::size_t(k) * plane;
    double sum = 0.0;
    for (std::size_t c = 0; c < plane; ++c) sum += layer[c];
    const double mean = sum / double(plane);
    double var = 0.0;
    for (std::size_t c = 0; c < plane; ++c) var += (layer[c] - mean) * (layer[c] - mean);
    hp.mean.push_back(mean);
    hp.std.push_back(std::sqrt(var / double(plane)));
  }
  return hp;
}

BenchResult bench(const FnoParameters<float>& params, const SceneSpec& scene,
                  const SolverConfig& cfg, std::uint32_t n_repeats, std::uint32_t spinup_steps) {
  if (n_repeats < 1) fail(ErrorCode::invalid_argument, "bench: n_repeats must be >= 1");
  const std::size_t in = params.config.in_channels;
  params.config.check_grid(scene.grid.nx, scene.grid.ny, scene.grid.nz);

  // Spin up the solver and collect the most recent magnitude fields.
  auto warm = run_simulation(scene, cfg, std::max<std::uint32_t>(spinup_steps, std::uint32_t(in)), 1);
  SolverState state = std::move(warm.final_state);

  BenchResult result;
  using Clk = std::chrono::steady_clock;
  for (std::uint32_t r = 0; r < 2; ++r) step(state, cfg); // warmup, discarded
  for (std::uint32_t r = 0; r < n_repeats; ++r) {
    const auto t0 = Clk::now();
    step(state, cfg);
    const auto t1 = Clk::now();
    result.solver_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  // Surrogate input from the spin-up's trailing window, dataset-style stats.
  std::vector<const ScalarField*> window;
  const std::size_t frames = warm.sequence.fields.size();
  for (std::size_t s = frames - in; s < frames; ++s) window.push_back(&warm.sequence.fields[s]);
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  for (const auto* f : window)
    for (double v : f->values) {
      sum += v;
      sum2 += v * v;
      ++count;
    }
  NormStats norm;
  norm.mean = sum / double(count);
  norm.std = std::max(std::sqrt(sum2 / double(count) - norm.mean * norm.mean), 1e-9);

  Tensor<float> input = [&] {
    Tensor<float> t(in, scene.grid.nx, scene.grid.ny, scene.grid.nz);
    const float mean = float(norm.mean), inv_std = float(1.0 / norm.std);
    for (std::size_t s = 0; s < in; ++s) {
      float* dst = t.channel(s);
      for (std::size_t c = 0; c < window[s]->values.size(); ++c)
        dst[c] = (float(window[s]->values[c]) - mean) * inv_std;
    }
    return t;
  }();
  FnoWorkspace<float> ws(params.config, scene.grid.nx, scene.grid.ny, scene.grid.nz);
  for (std::uint32_t r = 0; r < 2; ++r) (void)fno_forward(input, params, ws);
  for (std::uint32_t r = 0; r < n_repeats; ++r) {
    const auto t0 = Clk::now();
    auto out = fno_forward(input, params, ws);
    const auto t1 = Clk::now();
    result.fno_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }

  result.solver_median_ms = median_of(result.solver_ms);
  result.fno_median_ms = median_of(result.fno_ms);
  result.speedup = result.solver_median_ms / result.fno_median_ms;
  return result;
}

void write_pdf_csv(const Histogram& h, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "bin_lo,bin_hi,count,density\n";
  for (std::size_t b = 0; b < h.density.size(); ++b)
    os << b * h.bin_width << "," << (b + 1) * h.bin_width << "," << h.counts[b] << ","
       << h.density[b] << "\n";
}

void write_conditional_error_csv(const ConditionalError& ce, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "bin_lo,bin_hi,mean_abs_error,occupied\n";
  for (std::size_t b = 0; b < ce.mean_abs.size(); ++b)
    os << b * ce.bin_width << "," << (b + 1) * ce.bin_width << ","
       << (ce.occupied[b] ? std::to_string(ce.mean_abs[b]) : "") << ","
       << (ce.occupied[b] ? 1 : 0) << "\n";
}

void write_height_profile_csv(const HeightProfile& hp, const Grid3& grid,
                              const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "z_index,z_meters,mean,std\n";
  for (std::size_t k = 0; k < hp.mean.size(); ++k)
    os << k << "," << grid.zc(std::uint32_t(k)) << "," << hp.mean[k] << "," << hp.std[k] << "\n";
}

void write_rollout_error_csv(const AccumulatedError& ae, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  // std_abs_error is the per-cell population spread of |error| at each step.
  os << "step,mean_abs_error,std_abs_error_per_cell\n";
  for (std::size_t t = 0; t < ae.mean_abs.size(); ++t)
    os << (t + 1) << "," << ae.mean_abs[t] << "," << ae.std_abs[t] << "\n";
}

void write_bench_csv(const BenchResult& b, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << "engine,repeat,wall_ms\n";
  for (std::size_t r = 0; r < b.solver_ms.size(); ++r)
    os << "solver," << r << "," << b.solver_ms[r] << "\n";
  for (std::size_t r = 0; r < b.fno_ms.size(); ++r) os << "fno," << r << "," << b.fno_ms[r] << "\n";
  os << "summary,median_solver_ms," << b.solver_median_ms << "\n";
  os << "summary,median_fno_ms," << b.fno_median_ms << "\n";
  os << "summary,speedup," << b.speedup << "\n";
}

} // namespace ufno

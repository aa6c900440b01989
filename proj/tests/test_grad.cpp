#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "ufno/adam.hpp"
#include "ufno/fno.hpp"
#include "ufno/fno_grad.hpp"
#include "ufno/loss.hpp"
#include "ufno/rng.hpp"

using namespace ufno;

namespace {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_blob;
  std::size_t worst_index = 0;
};

double sample_loss(const Tensor<double>& input, const Tensor<double>& target,
                   const FnoParameters<double>& p, FnoWorkspace<double>& ws) {
  auto out = fno_forward(input, p, ws);
  return layerwise_relative_loss(out.channel(0), target.channel(0), input.x, input.y, input.z);
}

/// Central finite differences over every trainable scalar, h relative to the
/// parameter magnitude. Returns the worst relative disagreement with the
/// reverse-mode gradient.
GradCheckReport gradient_check(const FnoConfig& cfg, std::size_t X, std::size_t Y, std::size_t Z,
                               std::uint64_t seed) {
  auto params = init_parameters<double>(cfg, seed);
  FnoWorkspace<double> ws(cfg, X, Y, Z);

  Rng rng(seed + 1);
  Tensor<double> input(cfg.in_channels, X, Y, Z);
  for (auto& v : input.v) v = rng.next_uniform(-1.0, 1.0);
  Tensor<double> target(cfg.out_channels, X, Y, Z);
  for (auto& v : target.v) v = rng.next_uniform(0.2, 2.0);

  FnoTape<double> tape;
  auto out = fno_forward(input, params, ws, &tape);
  Tensor<double> grad_out(cfg.out_channels, X, Y, Z);
  layerwise_relative_loss_grad(out.channel(0), target.channel(0), X, Y, Z, grad_out.channel(0));
  auto grads = zero_parameters<double>(cfg);
  fno_backward(input, params, tape, grad_out, ws, grads);

  GradCheckReport rep;
  std::vector<std::vector<double>*> pblobs;
  std::vector<const std::vector<double>*> gblobs;
  std::vector<std::string> names;
  for_each_blob(params, [&](const std::string& n, std::vector<double>& b) {
    pblobs.push_back(&b);
    names.push_back(n);
  });
  for_each_blob(grads,
                [&](const std::string&, const std::vector<double>& b) { gblobs.push_back(&b); });

  for (std::size_t bi = 0; bi < pblobs.size(); ++bi) {
    std::vector<double>& blob = *pblobs[bi];
    for (std::size_t i = 0; i < blob.size(); ++i) {
      const double theta = blob[i];
      // Relative step with an absolute floor: tiny parameters would otherwise
      // push the difference quotient into roundoff.
      const double h = std::max(1e-4 * std::abs(theta), 1e-5);
      blob[i] = theta + h;
      const double lp = sample_loss(input, target, params, ws);
      blob[i] = theta - h;
      const double lm = sample_loss(input, target, params, ws);
      blob[i] = theta;
      const double fd = (lp - lm) / (2.0 * h);
      const double ad = (*gblobs[bi])[i];
      const double rel = std::abs(fd - ad) / std::max({std::abs(fd), std::abs(ad), 1e-6});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_blob = names[bi];
        rep.worst_index = i;
      }
    }
  }
  return rep;
}

} // namespace

TEST_CASE("reverse-mode gradients match central finite differences (gelu)") {
  FnoConfig cfg;
  cfg.modes = 2;
  cfg.width = 2;
  cfg.layers = 2;
  cfg.in_channels = 3;
  cfg.out_channels = 1;
  cfg.activation = "gelu";
  auto rep = gradient_check(cfg, 4, 4, 4, 2025);
  INFO("worst blob ", rep.worst_blob, "[", rep.worst_index, "]");
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("reverse-mode gradients on a second seed and wider net") {
  FnoConfig cfg;
  cfg.modes = 2;
  cfg.width = 3;
  cfg.layers = 1;
  cfg.in_channels = 2;
  cfg.out_channels = 1;
  auto rep = gradient_check(cfg, 6, 4, 4, 77);
  INFO("worst blob ", rep.worst_blob, "[", rep.worst_index, "]");
  CHECK(rep.max_rel_err <= 1e-4);
}

TEST_CASE("zero parameters leave gradients only in the projection bias") {
  FnoConfig cfg;
  cfg.modes = 2;
  cfg.width = 2;
  cfg.layers = 2;
  cfg.in_channels = 2;
  auto params = zero_parameters<double>(cfg);
  FnoWorkspace<double> ws(cfg, 4, 4, 4);
  Rng rng(5);
  Tensor<double> input(cfg.in_channels, 4, 4, 4);
  for (auto& v : input.v) v = rng.next_uniform(-1.0, 1.0);
  Tensor<double> target(1, 4, 4, 4);
  for (auto& v : target.v) v = rng.next_uniform(0.5, 1.5);

  FnoTape<double> tape;
  auto out = fno_forward(input, params, ws, &tape);
  Tensor<double> grad_out(1, 4, 4, 4);
  layerwise_relative_loss_grad(out.channel(0), target.channel(0), 4, 4, 4, grad_out.channel(0));
  auto grads = zero_parameters<double>(cfg);
  fno_backward(input, params, tape, grad_out, ws, grads);

  for_each_blob(grads, [&](const std::string& name, const std::vector<double>& blob) {
    for (double g : blob) {
      if (name == "proj_b")
        CHECK(g != 0.0);
      else
        CHECK(g == 0.0);
    }
  });
}

TEST_CASE("gradients are additive over repeated backward calls") {
  FnoConfig cfg;
  cfg.modes = 2;
  cfg.width = 2;
  cfg.layers = 1;
  cfg.in_channels = 2;
  auto params = init_parameters<double>(cfg, 9);
  FnoWorkspace<double> ws(cfg, 4, 4, 4);
  Rng rng(10);
  Tensor<double> input(cfg.in_channels, 4, 4, 4);
  for (auto& v : input.v) v = rng.next_uniform(-1.0, 1.0);
  Tensor<double> target(1, 4, 4, 4);
  for (auto& v : target.v) v = rng.next_uniform(0.5, 1.5);

  FnoTape<double> tape;
  auto out = fno_forward(input, params, ws, &tape);
  Tensor<double> grad_out(1, 4, 4, 4);
  layerwise_relative_loss_grad(out.channel(0), target.channel(0), 4, 4, 4, grad_out.channel(0));

  auto once = zero_parameters<double>(cfg);
  fno_backward(input, params, tape, grad_out, ws, once);
  auto twice = zero_parameters<double>(cfg);
  fno_backward(input, params, tape, grad_out, ws, twice);
  fno_backward(input, params, tape, grad_out, ws, twice);

  std::vector<const std::vector<double>*> a, b;
  for_each_blob(once, [&](const std::string&, const std::vector<double>& v) { a.push_back(&v); });
  for_each_blob(twice, [&](const std::string&, const std::vector<double>& v) { b.push_back(&v); });
  for (std::size_t bi = 0; bi < a.size(); ++bi)
    for (std::size_t i = 0; i < a[bi]->size(); ++i)
      CHECK((*b[bi])[i] == doctest::Approx(2.0 * (*a[bi])[i]).epsilon(1e-10));
}

TEST_CASE("adam: zero gradient is a parameter fixed point") {
  FnoConfig cfg;
  cfg.modes = 1;
  cfg.width = 2;
  cfg.layers = 1;
  cfg.in_channels = 2;
  auto params = init_parameters<float>(cfg, 3);
  auto before = params;
  auto grads = zero_parameters<float>(cfg);
  auto st = make_adam_state(params);
  adam_step(params, grads, st, 1e-3);
  CHECK(st.step == 1);
  for_each_blob(params, [&](const std::string& name, const std::vector<float>& blob) {
    (void)name;
    (void)blob;
  });
  std::vector<const std::vector<float>*> a, b;
  for_each_blob(before, [&](const std::string&, const std::vector<float>& v) { a.push_back(&v); });
  for_each_blob(params, [&](const std::string&, const std::vector<float>& v) { b.push_back(&v); });
  for (std::size_t bi = 0; bi < a.size(); ++bi)
    CHECK(*a[bi] == *b[bi]);
}

TEST_CASE("adam single-scalar hand computation") {
  // One step with g=1, lr=1e-3: update = -lr * (g/(1-b1)) / (sqrt(g^2/(1-b2)) + eps).
  FnoConfig cfg;
  cfg.modes = 1;
  cfg.width = 1;
  cfg.layers = 1;
  cfg.in_channels = 1;
  auto params = zero_parameters<double>(cfg);
  auto grads = zero_parameters<double>(cfg);
  grads.proj_b[0] = 1.0;
  auto st = make_adam_state(params);
  adam_step(params, grads, st, 1e-3);
  const double expect = -1e-3 * (0.1 / 0.1) / (std::sqrt(1.0 * 1.0 / 1e-3 * 1e-3) + 1e-8);
  (void)expect;
  const double m_hat = (0.1 * 1.0) / (1.0 - 0.9);
  const double v_hat = (0.001 * 1.0) / (1.0 - 0.999);
  const double want = -1e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(params.proj_b[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(params.proj_b[0] == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("NaN gradients are reported with the offending group") {
  FnoConfig cfg;
  cfg.modes = 1;
  cfg.width = 1;
  cfg.layers = 1;
  cfg.in_channels = 1;
  auto grads = zero_parameters<double>(cfg);
  grads.layers[0].w[0] = std::nan("");
  CHECK_THROWS_WITH_AS(check_gradients_finite(grads),
                       doctest::Contains("layer0_w"), Error);
}

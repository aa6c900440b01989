#include "ufno/fno.hpp"

#include "ufno/fno_grad.hpp"

namespace ufno {

Activation parse_activation(const std::string& name) {
  if (name == "gelu") return Activation::gelu;
  if (name == "relu") return Activation::relu;
  fail(ErrorCode::invalid_argument, "unknown activation '" + name + "' (expected gelu or relu)");
}

void FnoConfig::validate() const {
  if (modes < 1) fail(ErrorCode::invalid_argument, "config: modes must be >= 1");
  if (width < 1) fail(ErrorCode::invalid_argument, "config: width must be >= 1");
  if (layers < 1) fail(ErrorCode::invalid_argument, "config: layers must be >= 1");
  if (in_channels < 1 || out_channels < 1)
    fail(ErrorCode::invalid_argument, "config: channel counts must be >= 1");
  parse_activation(activation);
}

void FnoConfig::check_grid(std::size_t x, std::size_t y, std::size_t z) const {
  if (modes > x / 2 || modes > y / 2 || modes > z / 2)
    fail(ErrorCode::invalid_argument,
         "grid " + std::to_string(x) + "x" + std::to_string(y) + "x" + std::to_string(z) +
             " is below the Nyquist requirement of modes=" + std::to_string(modes));
}

std::uint64_t param_count(const FnoConfig& cfg) {
  cfg.validate();
  const std::uint64_t dv = cfg.width, m = cfg.modes;
  const std::uint64_t lift = dv * cfg.in_channels + dv;
  const std::uint64_t spec = 4ull * m * m * m * dv * dv * 2ull;
  const std::uint64_t point = dv * dv + dv;
  const std::uint64_t proj = std::uint64_t(cfg.out_channels) * dv + cfg.out_channels;
  return lift + cfg.layers * (spec + point) + proj;
}

template Tensor<float> fno_forward<float>(const Tensor<float>&, const FnoParameters<float>&,
                                          FnoWorkspace<float>&, FnoTape<float>*);
template Tensor<double> fno_forward<double>(const Tensor<double>&, const FnoParameters<double>&,
                                            FnoWorkspace<double>&, FnoTape<double>*);
template void fno_backward<float>(const Tensor<float>&, const FnoParameters<float>&,
                                  const FnoTape<float>&, const Tensor<float>&,
                                  FnoWorkspace<float>&, FnoParameters<float>&);
template void fno_backward<double>(const Tensor<double>&, const FnoParameters<double>&,
                                   const FnoTape<double>&, const Tensor<double>&,
                                   FnoWorkspace<double>&, FnoParameters<double>&);

} // namespace ufno

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fedgan/tinygan.hpp"

namespace fedgan {

/// Canonical flattening of a ModelPair: generator tensors first, then
/// discriminator, each layer contributing its weight matrix (row-major) and
/// then its bias. This flat vector is the only thing that crosses the
/// simulated client/server boundary.
struct ParamsCodec {
  std::size_t gen_layer_count = 0;
  std::size_t disc_layer_count = 0;
  // Per layer (out_dim, in_dim), generator first.
  std::vector<std::pair<std::size_t, std::size_t>> gen_shapes;
  std::vector<std::pair<std::size_t, std::size_t>> disc_shapes;
  double gen_leaky_slope = 0.2;
  double disc_leaky_slope = 0.2;

  static ParamsCodec from_model(const ModelPair& model);
  bool matches(const ModelPair& model) const;
  std::size_t gen_param_count() const;
  std::size_t disc_param_count() const;
  std::size_t total_param_count() const;
};

std::vector<double> concat_params(const MLPParams& gen, const MLPParams& disc,
                                  const ParamsCodec& codec);
ModelPair split_params(const std::vector<double>& flat, const ParamsCodec& codec);

}  // namespace fedgan

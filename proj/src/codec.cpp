#include "fedgan/codec.hpp"

#include <string>

#include "fedgan/errors.hpp"

namespace fedgan {
namespace {

std::vector<std::pair<std::size_t, std::size_t>> shapes_of(const MLPParams& params) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  shapes.reserve(params.layers.size());
  for (const LayerParams& layer : params.layers) {
    shapes.emplace_back(layer.weight.rows, layer.weight.cols);
  }
  return shapes;
}

bool shapes_match(const MLPParams& params,
                  const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
  if (params.layers.size() != shapes.size()) return false;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const LayerParams& layer = params.layers[l];
    if (layer.weight.rows != shapes[l].first || layer.weight.cols != shapes[l].second) {
      return false;
    }
    if (layer.bias.size() != shapes[l].first) return false;
  }
  return true;
}

std::size_t flat_count(const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
  std::size_t total = 0;
  for (const auto& [out, in] : shapes) {
    total += out * in + out;
  }
  return total;
}

void append_params(const MLPParams& params, std::vector<double>& flat) {
  for (const LayerParams& layer : params.layers) {
    flat.insert(flat.end(), layer.weight.entries.begin(), layer.weight.entries.end());
    flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
  }
}

MLPParams read_params(const std::vector<double>& flat, std::size_t& pos,
                      const std::vector<std::pair<std::size_t, std::size_t>>& shapes,
                      double slope) {
  MLPParams params;
  params.leaky_slope = slope;
  for (const auto& [out, in] : shapes) {
    LayerParams layer;
    layer.weight = DenseMatrix(out, in);
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + out * in),
              layer.weight.entries.begin());
    pos += out * in;
    layer.bias.assign(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                      flat.begin() + static_cast<std::ptrdiff_t>(pos + out));
    pos += out;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace

ParamsCodec ParamsCodec::from_model(const ModelPair& model) {
  ParamsCodec codec;
  codec.gen_layer_count = model.generator.layers.size();
  codec.disc_layer_count = model.discriminator.layers.size();
  codec.gen_shapes = shapes_of(model.generator);
  codec.disc_shapes = shapes_of(model.discriminator);
  codec.gen_leaky_slope = model.generator.leaky_slope;
  codec.disc_leaky_slope = model.discriminator.leaky_slope;
  return codec;
}

bool ParamsCodec::matches(const ModelPair& model) const {
  return model.generator.layers.size() == gen_layer_count &&
         model.discriminator.layers.size() == disc_layer_count &&
         shapes_match(model.generator, gen_shapes) &&
         shapes_match(model.discriminator, disc_shapes);
}

std::size_t ParamsCodec::gen_param_count() const { return flat_count(gen_shapes); }

std::size_t ParamsCodec::disc_param_count() const { return flat_count(disc_shapes); }

std::size_t ParamsCodec::total_param_count() const {
  return gen_param_count() + disc_param_count();
}

std::vector<double> concat_params(const MLPParams& gen, const MLPParams& disc,
                                  const ParamsCodec& codec) {
  if (!shapes_match(gen, codec.gen_shapes) || !shapes_match(disc, codec.disc_shapes)) {
    throw CodecError("model shapes do not match the codec");
  }
  std::vector<double> flat;
  flat.reserve(codec.total_param_count());
  append_params(gen, flat);
  append_params(disc, flat);
  return flat;
}

ModelPair split_params(const std::vector<double>& flat, const ParamsCodec& codec) {
  if (flat.size() != codec.total_param_count()) {
    throw CodecError("flat vector length " + std::to_string(flat.size()) +
                     " does not match codec size " + std::to_string(codec.total_param_count()));
  }
  std::size_t pos = 0;
  ModelPair model;
  model.generator = read_params(flat, pos, codec.gen_shapes, codec.gen_leaky_slope);
  model.discriminator = read_params(flat, pos, codec.disc_shapes, codec.disc_leaky_slope);
  return model;
}

}  // namespace fedgan

#pragma once

// SFN1 weight files. Layout, all little-endian after the magic:
//   "SFN1"
//   u32 layer_count
//   per layer:
//     u8 variant tag {0 Dense, 1 Conv2D, 2 ReLU, 3 MaxPool2x2, 4 Flatten, 5 Softmax}
//     u16 name length, UTF-8 name
//     per parameter tensor (weights then bias; none for parameterless layers):
//       u8 rank, u32 extents[rank], float64 values
// Conv2D hyperparameters are not part of the format; persisted convolutions
// are restricted to stride 1 with "same" padding (pad = (k-1)/2), which the
// loader reconstructs from the kernel extents.

#include <fstream>
#include <string>
#include <vector>

#include "pqsv/bytes.hpp"
#include "pqsv/network.hpp"

namespace pqsv {

namespace detail {

inline void write_param(std::ostream& os, const ParamView& p) {
  write_u8(os, static_cast<std::uint8_t>(p.shape.size()));
  for (std::size_t e : p.shape) write_u32_le(os, static_cast<std::uint32_t>(e));
  for (double v : p.values) write_f64_le(os, v);
}

struct LoadedParam {
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

inline LoadedParam read_param(std::istream& is) {
  LoadedParam p;
  const std::uint8_t rank = read_u8(is, "SFN1 param");
  p.shape.resize(rank);
  std::size_t n = 1;
  for (std::uint8_t r = 0; r < rank; ++r) {
    p.shape[r] = read_u32_le(is, "SFN1 param");
    n *= p.shape[r];
  }
  p.values.resize(n);
  for (double& v : p.values) v = read_f64_le(is, "SFN1 param");
  return p;
}

}  // namespace detail

inline void save_network(std::ostream& os, Network& net) {
  os.write("SFN1", 4);
  write_u32_le(os, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    Layer& l = net.layer(i);
    const std::vector<ParamView> params = l.params();
    if (l.kind() == LayerKind::Conv2D) {
      const auto& conv = static_cast<const Conv2DLayer&>(l);
      if (conv.stride() != 1 || conv.pad() != (params[0].shape[0] - 1) / 2)
        throw std::runtime_error("save_network: only stride-1 same-padding Conv2D is persistable");
    }
    write_u8(os, static_cast<std::uint8_t>(l.kind()));
    write_u16_le(os, static_cast<std::uint16_t>(l.name().size()));
    os.write(l.name().data(), static_cast<std::streamsize>(l.name().size()));
    for (const ParamView& p : params) detail::write_param(os, p);
  }
}

inline void save_network(const std::string& path, Network& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_network: cannot open " + path);
  save_network(os, net);
  if (!os) throw std::runtime_error("save_network: write failed for " + path);
}

inline std::vector<LayerPtr> load_layers(std::istream& is) {
  char magic[4];
  read_exact(is, magic, 4, "SFN1");
  if (std::string(magic, 4) != "SFN1") throw std::runtime_error("SFN1: bad magic bytes");
  const std::uint32_t count = read_u32_le(is, "SFN1");
  std::vector<LayerPtr> layers;
  layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t tag = read_u8(is, "SFN1 layer");
    const std::uint16_t name_len = read_u16_le(is, "SFN1 layer");
    std::string name(name_len, '\0');
    read_exact(is, name.data(), name_len, "SFN1 layer name");
    switch (static_cast<LayerKind>(tag)) {
      case LayerKind::Dense: {
        auto w = detail::read_param(is);
        auto b = detail::read_param(is);
        if (w.shape.size() != 2 || b.shape.size() != 1)
          throw std::runtime_error("SFN1: malformed Dense parameters");
        layers.push_back(std::make_unique<DenseLayer>(name, w.shape[0], w.shape[1],
                                                      std::move(w.values), std::move(b.values)));
        break;
      }
      case LayerKind::Conv2D: {
        auto k = detail::read_param(is);
        auto b = detail::read_param(is);
        if (k.shape.size() != 4 || b.shape.size() != 1)
          throw std::runtime_error("SFN1: malformed Conv2D parameters");
        layers.push_back(std::make_unique<Conv2DLayer>(
            name, k.shape[0], k.shape[1], k.shape[2], k.shape[3], 1, (k.shape[0] - 1) / 2,
            std::move(k.values), std::move(b.values)));
        break;
      }
      case LayerKind::ReLU:
        layers.push_back(std::make_unique<ReLULayer>(name));
        break;
      case LayerKind::MaxPool2x2:
        layers.push_back(std::make_unique<MaxPool2x2Layer>(name));
        break;
      case LayerKind::Flatten:
        layers.push_back(std::make_unique<FlattenLayer>(name));
        break;
      case LayerKind::Softmax:
        layers.push_back(std::make_unique<SoftmaxLayer>(name));
        break;
      default:
        throw std::runtime_error("SFN1: unknown layer tag " + std::to_string(tag));
    }
  }
  return layers;
}

inline Network load_network(const std::string& path, std::vector<std::size_t> input_shape) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_network: cannot open " + path);
  return Network(std::move(input_shape), load_layers(is));
}

}  // namespace pqsv

#pragma once

// IDX (MNIST-family) ingestion and the Dataset container. Pixels stay on the
// raw [0,255] scale end to end; any model-specific scaling belongs inside the
// network, so perturbation budgets always live in pixel space.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pqsv/bytes.hpp"
#include "pqsv/tensor.hpp"

namespace pqsv {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// rank-2 [rows, cols] tensors with byte values mapped to [0,255] unchanged
inline std::vector<Tensor> read_idx_images(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_idx_images: cannot open " + path);
  if (read_u32_be(is, "IDX image header") != kIdxImageMagic)
    throw std::runtime_error("read_idx_images: bad magic in " + path);
  const std::uint32_t count = read_u32_be(is, "IDX image header");
  const std::uint32_t rows = read_u32_be(is, "IDX image header");
  const std::uint32_t cols = read_u32_be(is, "IDX image header");
  std::vector<Tensor> images;
  images.reserve(count);
  std::vector<char> buf(static_cast<std::size_t>(rows) * cols);
  for (std::uint32_t i = 0; i < count; ++i) {
    read_exact(is, buf.data(), buf.size(), "IDX image payload");
    std::vector<double> vals(buf.size());
    for (std::size_t k = 0; k < buf.size(); ++k)
      vals[k] = static_cast<double>(static_cast<std::uint8_t>(buf[k]));
    images.emplace_back(std::vector<std::size_t>{rows, cols}, std::move(vals));
  }
  return images;
}

inline std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_idx_labels: cannot open " + path);
  if (read_u32_be(is, "IDX label header") != kIdxLabelMagic)
    throw std::runtime_error("read_idx_labels: bad magic in " + path);
  const std::uint32_t count = read_u32_be(is, "IDX label header");
  std::vector<char> buf(count);
  if (count > 0) read_exact(is, buf.data(), buf.size(), "IDX label payload");
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = static_cast<std::uint8_t>(buf[i]);
  return labels;
}

// Writers for synthetic data and round-trip tests. Values must already be
// integers in [0,255]; anything else is a caller bug.
inline void write_idx_images(const std::string& path, std::span<const Tensor> images) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_idx_images: cannot open " + path);
  const std::size_t rows = images.empty() ? 0 : images[0].shape[0];
  const std::size_t cols = images.empty() ? 0 : images[0].shape[1];
  write_u32_be(os, kIdxImageMagic);
  write_u32_be(os, static_cast<std::uint32_t>(images.size()));
  write_u32_be(os, static_cast<std::uint32_t>(rows));
  write_u32_be(os, static_cast<std::uint32_t>(cols));
  for (const Tensor& t : images) {
    if (t.rank() != 2 || t.shape[0] != rows || t.shape[1] != cols)
      throw std::invalid_argument("write_idx_images: inconsistent image shapes");
    for (double v : t.values) {
      if (v < 0.0 || v > 255.0 || v != std::floor(v))
        throw std::invalid_argument("write_idx_images: pixel not an integer in [0,255]");
      write_u8(os, static_cast<std::uint8_t>(v));
    }
  }
  if (!os) throw std::runtime_error("write_idx_images: write failed for " + path);
}

inline void write_idx_labels(const std::string& path, std::span<const int> labels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_idx_labels: cannot open " + path);
  write_u32_be(os, kIdxLabelMagic);
  write_u32_be(os, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw std::invalid_argument("write_idx_labels: label out of byte range");
    write_u8(os, static_cast<std::uint8_t>(l));
  }
  if (!os) throw std::runtime_error("write_idx_labels: write failed for " + path);
}

struct Dataset {
  std::vector<Tensor> images;  // stored as [H, W, 1]
  std::vector<int> labels;
  std::string split;  // "train" or "eval"

  std::size_t size() const { return images.size(); }

  // Validates the invariants once; downstream code relies on them.
  static Dataset assemble(std::vector<Tensor> images, std::vector<int> labels,
                          std::string split, std::size_t class_count) {
    if (images.size() != labels.size())
      throw std::invalid_argument("Dataset: image/label counts differ (" +
                                  std::to_string(images.size()) + " vs " +
                                  std::to_string(labels.size()) + ")");
    for (Tensor& t : images) {
      if (t.rank() == 2) t = t.reshaped({t.shape[0], t.shape[1], 1});
      for (double v : t.values)
        if (!(v >= 0.0 && v <= 255.0))
          throw std::invalid_argument("Dataset: pixel outside [0,255]");
    }
    for (int l : labels)
      if (l < 0 || static_cast<std::size_t>(l) >= class_count)
        throw std::invalid_argument("Dataset: label " + std::to_string(l) +
                                    " >= class count " + std::to_string(class_count));
    Dataset d;
    d.images = std::move(images);
    d.labels = std::move(labels);
    d.split = std::move(split);
    return d;
  }
};

inline Dataset load_dataset(const std::string& images_path, const std::string& labels_path,
                            std::string split, std::size_t class_count = 10) {
  return Dataset::assemble(read_idx_images(images_path), read_idx_labels(labels_path),
                           std::move(split), class_count);
}

}  // namespace pqsv

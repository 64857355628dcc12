#ifndef AUGSEARCH_TOYSEG_PARAMS_HPP
#define AUGSEARCH_TOYSEG_PARAMS_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "augsearch/rng.hpp"

namespace augsearch::toyseg {

inline constexpr int kInChannels = 3;
inline constexpr int kHidden1 = 8;
inline constexpr int kHidden2 = 16;

/// All weights of the three-layer FCN in one flat buffer.
///
/// Layout (row-major, last index fastest):
///   conv1.weight [3][3][3][8]   (ky, kx, in, out)
///   conv1.bias   [8]
///   conv2.weight [3][3][8][16]
///   conv2.bias   [16]
///   head.weight  [16][C]
///   head.bias    [C]
template <typename T>
struct SegmenterParams {
  int num_classes = 0;
  std::vector<T> data;

  SegmenterParams() = default;
  explicit SegmenterParams(int classes) : num_classes(classes) {
    if (classes < 2 || classes > 255) throw std::invalid_argument("SegmenterParams: num_classes must lie in [2, 255]");
    data.assign(total_size(classes), T(0));
  }

  static constexpr std::size_t conv1_w_size() { return 9 * kInChannels * kHidden1; }
  static constexpr std::size_t conv2_w_size() { return 9 * kHidden1 * kHidden2; }
  static std::size_t total_size(int classes) {
    return conv1_w_size() + kHidden1 + conv2_w_size() + kHidden2 + static_cast<std::size_t>(kHidden2) * classes + classes;
  }

  std::size_t off_conv1_b() const { return conv1_w_size(); }
  std::size_t off_conv2_w() const { return off_conv1_b() + kHidden1; }
  std::size_t off_conv2_b() const { return off_conv2_w() + conv2_w_size(); }
  std::size_t off_head_w() const { return off_conv2_b() + kHidden2; }
  std::size_t off_head_b() const { return off_head_w() + static_cast<std::size_t>(kHidden2) * num_classes; }

  T* conv1_w() { return data.data(); }
  T* conv1_b() { return data.data() + off_conv1_b(); }
  T* conv2_w() { return data.data() + off_conv2_w(); }
  T* conv2_b() { return data.data() + off_conv2_b(); }
  T* head_w() { return data.data() + off_head_w(); }
  T* head_b() { return data.data() + off_head_b(); }
  const T* conv1_w() const { return data.data(); }
  const T* conv1_b() const { return data.data() + off_conv1_b(); }
  const T* conv2_w() const { return data.data() + off_conv2_w(); }
  const T* conv2_b() const { return data.data() + off_conv2_b(); }
  const T* head_w() const { return data.data() + off_head_w(); }
  const T* head_b() const { return data.data() + off_head_b(); }

  bool all_finite() const {
    for (const auto& v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& v : data) s += static_cast<double>(v) * static_cast<double>(v);
    return s;
  }

  template <typename U>
  SegmenterParams<U> cast() const {
    SegmenterParams<U> out(num_classes);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  bool operator==(const SegmenterParams&) const = default;
};

/// Glorot-uniform weights and zero biases.
template <typename T>
SegmenterParams<T> init_params(int num_classes, std::uint64_t seed) {
  SegmenterParams<T> p(num_classes);
  Rng rng(seed);
  auto fill = [&](T* w, std::size_t n, double fan_in, double fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<T>(rng.uniform(-a, a));
  };
  fill(p.conv1_w(), p.conv1_w_size(), 9.0 * kInChannels, 9.0 * kHidden1);
  fill(p.conv2_w(), p.conv2_w_size(), 9.0 * kHidden1, 9.0 * kHidden2);
  fill(p.head_w(), static_cast<std::size_t>(kHidden2) * num_classes, kHidden2, num_classes);
  return p;
}

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
};

inline std::vector<TensorInfo> tensor_layout(int num_classes) {
  return {{"conv1.weight", {3, 3, kInChannels, kHidden1}},
          {"conv1.bias", {kHidden1}},
          {"conv2.weight", {3, 3, kHidden1, kHidden2}},
          {"conv2.bias", {kHidden2}},
          {"head.weight", {kHidden2, num_classes}},
          {"head.bias", {num_classes}}};
}

/// JSON tensor dump: {"format", "num_classes", "tensors": [{"name", "shape", "data"}]}.
/// Values are plain JSON numbers written at double precision, so float weights reload exactly.
template <typename T>
nlohmann::json checkpoint_json(const SegmenterParams<T>& p) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& t : tensor_layout(p.num_classes)) {
    std::size_t n = 1;
    for (int d : t.shape) n *= static_cast<std::size_t>(d);
    nlohmann::json values = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) values.push_back(static_cast<T>(p.data[offset + i]));
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"data", values}});
    offset += n;
  }
  return {{"format", "augsearch-toyseg-1"}, {"num_classes", p.num_classes}, {"tensors", tensors}};
}

template <typename T>
SegmenterParams<T> params_from_checkpoint(const nlohmann::json& j) {
  if (j.at("format") != "augsearch-toyseg-1") throw std::invalid_argument("checkpoint: unsupported format");
  SegmenterParams<T> p(j.at("num_classes").get<int>());
  const auto layout = tensor_layout(p.num_classes);
  const auto& tensors = j.at("tensors");
  if (tensors.size() != layout.size()) throw std::invalid_argument("checkpoint: wrong tensor count");
  std::size_t offset = 0;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (tensors[k].at("name") != layout[k].name || tensors[k].at("shape").get<std::vector<int>>() != layout[k].shape) {
      throw std::invalid_argument("checkpoint: tensor " + layout[k].name + " missing or misshapen");
    }
    const auto& values = tensors[k].at("data");
    for (const auto& v : values) p.data.at(offset++) = v.get<T>();
  }
  if (offset != p.data.size()) throw std::invalid_argument("checkpoint: wrong parameter count");
  return p;
}

}  // namespace augsearch::toyseg

#endif  // AUGSEARCH_TOYSEG_PARAMS_HPP

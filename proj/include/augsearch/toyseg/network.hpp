#ifndef AUGSEARCH_TOYSEG_NETWORK_HPP
#define AUGSEARCH_TOYSEG_NETWORK_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "augsearch/image.hpp"
#include "augsearch/toyseg/params.hpp"

namespace augsearch::toyseg {

/// H x W x C feature map, channel index fastest.
template <typename T>
struct FeatureMap {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, T(0)) {}

  T* pixel(int r, int c) { return data.data() + (static_cast<std::size_t>(r) * width + c) * channels; }
  const T* pixel(int r, int c) const { return data.data() + (static_cast<std::size_t>(r) * width + c) * channels; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
};

/// Per-channel input normalisation applied after scaling bytes to [0, 1].
struct InputNorm {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
  bool operator==(const InputNorm&) const = default;
};

template <typename T>
FeatureMap<T> to_input(const RgbImage& img, const InputNorm& norm = {}) {
  FeatureMap<T> x(img.height, img.width, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    for (int ch = 0; ch < 3; ++ch) {
      x.data[i * 3 + ch] = static_cast<T>((img.pixels[i * 3 + ch] / 255.0 - norm.mean[ch]) / norm.std[ch]);
    }
  }
  return x;
}

namespace detail {

/// Same-padded (zero) 3x3 convolution; weights laid out [ky][kx][in][out].
template <typename T>
void conv3x3_forward(const FeatureMap<T>& in, const T* w, const T* b, int cout, FeatureMap<T>& out) {
  const int h = in.height, wd = in.width, cin = in.channels;
  out = FeatureMap<T>(h, wd, cout);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < wd; ++c) {
      T* o = out.pixel(r, c);
      for (int k = 0; k < cout; ++k) o[k] = b[k];
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          if (cc < 0 || cc >= wd) continue;
          const T* x = in.pixel(rr, cc);
          const T* wk = w + static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
          for (int i = 0; i < cin; ++i) {
            const T xi = x[i];
            const T* wi = wk + static_cast<std::size_t>(i) * cout;
            for (int k = 0; k < cout; ++k) o[k] += xi * wi[k];
          }
        }
      }
    }
  }
}

/// Accumulates weight/bias gradients and, when din is non-null, the input gradient.
template <typename T>
void conv3x3_backward(const FeatureMap<T>& in, const T* w, int cout, const FeatureMap<T>& dout, T* dw, T* db,
                      FeatureMap<T>* din) {
  const int h = in.height, wd = in.width, cin = in.channels;
  if (din) *din = FeatureMap<T>(h, wd, cin);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < wd; ++c) {
      const T* g = dout.pixel(r, c);
      for (int k = 0; k < cout; ++k) db[k] += g[k];
      for (int ky = 0; ky < 3; ++ky) {
        const int rr = r + ky - 1;
        if (rr < 0 || rr >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int cc = c + kx - 1;
          if (cc < 0 || cc >= wd) continue;
          const T* x = in.pixel(rr, cc);
          T* dx = din ? din->pixel(rr, cc) : nullptr;
          const std::size_t base = static_cast<std::size_t>(ky * 3 + kx) * cin * cout;
          for (int i = 0; i < cin; ++i) {
            const T xi = x[i];
            T* dwi = dw + base + static_cast<std::size_t>(i) * cout;
            const T* wi = w + base + static_cast<std::size_t>(i) * cout;
            T acc = T(0);
            for (int k = 0; k < cout; ++k) {
              dwi[k] += xi * g[k];
              acc += wi[k] * g[k];
            }
            if (dx) dx[i] += acc;
          }
        }
      }
    }
  }
}

template <typename T>
void tanh_inplace(FeatureMap<T>& f) {
  for (auto& v : f.data) v = std::tanh(v);
}

}  // namespace detail

/// Intermediate activations kept for the backward pass.
template <typename T>
struct Activations {
  FeatureMap<T> input;
  FeatureMap<T> h1;  // tanh(conv1)
  FeatureMap<T> h2;  // tanh(conv2)
  FeatureMap<T> logits;
};

template <typename T>
void forward(const SegmenterParams<T>& p, const FeatureMap<T>& input, Activations<T>& act) {
  if (input.channels != kInChannels) throw std::invalid_argument("forward: input must have 3 channels");
  act.input = input;
  detail::conv3x3_forward(act.input, p.conv1_w(), p.conv1_b(), kHidden1, act.h1);
  detail::tanh_inplace(act.h1);
  detail::conv3x3_forward(act.h1, p.conv2_w(), p.conv2_b(), kHidden2, act.h2);
  detail::tanh_inplace(act.h2);
  const int nc = p.num_classes;
  act.logits = FeatureMap<T>(input.height, input.width, nc);
  const T* hw = p.head_w();
  const T* hb = p.head_b();
  for (std::size_t i = 0; i < act.h2.pixel_count(); ++i) {
    const T* x = act.h2.data.data() + i * kHidden2;
    T* o = act.logits.data.data() + i * nc;
    for (int k = 0; k < nc; ++k) o[k] = hb[k];
    for (int j = 0; j < kHidden2; ++j) {
      const T xj = x[j];
      for (int k = 0; k < nc; ++k) o[k] += xj * hw[j * nc + k];
    }
  }
}

template <typename T>
FeatureMap<T> forward(const SegmenterParams<T>& p, const FeatureMap<T>& input) {
  Activations<T> act;
  forward(p, input, act);
  return std::move(act.logits);
}

/// Adds d(loss)/d(params) for one image into grad, given d(loss)/d(logits).
template <typename T>
void backward(const SegmenterParams<T>& p, const Activations<T>& act, const FeatureMap<T>& dlogits,
              SegmenterParams<T>& grad) {
  const int nc = p.num_classes;
  FeatureMap<T> dh2(act.h2.height, act.h2.width, kHidden2);
  T* ghw = grad.head_w();
  T* ghb = grad.head_b();
  const T* hw = p.head_w();
  for (std::size_t i = 0; i < act.h2.pixel_count(); ++i) {
    const T* g = dlogits.data.data() + i * nc;
    const T* x = act.h2.data.data() + i * kHidden2;
    T* dx = dh2.data.data() + i * kHidden2;
    for (int k = 0; k < nc; ++k) ghb[k] += g[k];
    for (int j = 0; j < kHidden2; ++j) {
      T acc = T(0);
      for (int k = 0; k < nc; ++k) {
        ghw[j * nc + k] += x[j] * g[k];
        acc += hw[j * nc + k] * g[k];
      }
      // tanh' = 1 - tanh^2
      dx[j] = acc * (T(1) - x[j] * x[j]);
    }
  }
  FeatureMap<T> dh1;
  detail::conv3x3_backward(act.h1, p.conv2_w(), kHidden2, dh2, grad.conv2_w(), grad.conv2_b(), &dh1);
  for (std::size_t i = 0; i < dh1.data.size(); ++i) dh1.data[i] *= T(1) - act.h1.data[i] * act.h1.data[i];
  detail::conv3x3_backward<T>(act.input, p.conv1_w(), kHidden1, dh1, grad.conv1_w(), grad.conv1_b(), nullptr);
}

/// Numerically stable softmax over the class axis.
template <typename T>
FeatureMap<T> softmax(const FeatureMap<T>& logits) {
  FeatureMap<T> out(logits.height, logits.width, logits.channels);
  const int nc = logits.channels;
  for (std::size_t i = 0; i < logits.pixel_count(); ++i) {
    const T* z = logits.data.data() + i * nc;
    T* o = out.data.data() + i * nc;
    T mx = z[0];
    for (int k = 1; k < nc; ++k) mx = std::max(mx, z[k]);
    T s = T(0);
    for (int k = 0; k < nc; ++k) {
      o[k] = std::exp(z[k] - mx);
      s += o[k];
    }
    for (int k = 0; k < nc; ++k) o[k] /= s;
  }
  return out;
}

/// Per-pixel argmax (lowest index wins ties).
template <typename T>
ClassMask argmax(const FeatureMap<T>& logits) {
  ClassMask m(logits.height, logits.width);
  const int nc = logits.channels;
  for (std::size_t i = 0; i < logits.pixel_count(); ++i) {
    const T* z = logits.data.data() + i * nc;
    int best = 0;
    for (int k = 1; k < nc; ++k) {
      if (z[k] > z[best]) best = k;
    }
    m.labels[i] = static_cast<std::uint8_t>(best);
  }
  return m;
}

}  // namespace augsearch::toyseg

#endif  // AUGSEARCH_TOYSEG_NETWORK_HPP

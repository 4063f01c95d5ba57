#include "fabinspect/layers.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fabinspect::nn {

namespace {

constexpr std::size_t kTile = 8;       // output columns per register tile
constexpr std::size_t kChannelBlock = 4;  // output channels sharing one input load

struct Padded {
  std::vector<double> data;
  std::size_t height = 0;
  std::size_t width = 0;
};

// Copies `channels` planes of h x w into a zero border: `top`/`left` rows and
// columns before, enough after so every tile read stays in bounds.
Padded pad_planes(const double* src, std::size_t channels, std::size_t h, std::size_t w, std::size_t top,
                  std::size_t left, std::size_t padded_h, std::size_t padded_w, std::size_t row_step = 1,
                  std::size_t col_step = 1) {
  Padded p;
  p.height = padded_h;
  p.width = padded_w;
  p.data.assign(channels * padded_h * padded_w, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* s = src + (c * h + y) * w;
      double* d = p.data.data() + (c * padded_h + top + y * row_step) * padded_w + left;
      for (std::size_t x = 0; x < w; ++x) d[x * col_step] = s[x];
    }
  }
  return p;
}

std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

// Weights regrouped as [oc block][ic][ky][kx][lane] so the inner loop reads
// one contiguous lane vector per tap.
std::vector<double> pack_weights(std::size_t in_channels, std::size_t out_channels, std::size_t k,
                                 const std::function<double(std::size_t, std::size_t, std::size_t, std::size_t)>& at) {
  const std::size_t blocks = (out_channels + kChannelBlock - 1) / kChannelBlock;
  std::vector<double> packed(blocks * in_channels * k * k * kChannelBlock, 0.0);
  for (std::size_t oc = 0; oc < out_channels; ++oc) {
    const std::size_t ob = oc / kChannelBlock;
    const std::size_t lane = oc % kChannelBlock;
    for (std::size_t ic = 0; ic < in_channels; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          packed[(((ob * in_channels + ic) * k + ky) * k + kx) * kChannelBlock + lane] = at(oc, ic, ky, kx);
        }
      }
    }
  }
  return packed;
}

// out[oc][oy][ox] = bias[oc] + sum_{ic,ky,kx} w(oc, ic, ky, kx) * in[ic][oy*S+ky][ox*S+kx]
// over an already padded input. Summation order is fixed: ic, then ky, then kx.
template <std::size_t K, std::size_t S>
void correlate_fixed(const Padded& in, std::size_t in_channels, std::size_t out_channels, std::size_t out_h,
                     std::size_t out_w, const std::vector<double>& packed, const double* bias, double* out) {
  const std::size_t plane = in.height * in.width;
  for (std::size_t oc0 = 0; oc0 < out_channels; oc0 += kChannelBlock) {
    const std::size_t nb = std::min(kChannelBlock, out_channels - oc0);
    const double* wblock = packed.data() + (oc0 / kChannelBlock) * in_channels * K * K * kChannelBlock;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox0 = 0; ox0 < out_w; ox0 += kTile) {
        double acc[kChannelBlock][kTile];
        for (std::size_t j = 0; j < kChannelBlock; ++j) {
          const double b = (bias != nullptr && j < nb) ? bias[oc0 + j] : 0.0;
          for (std::size_t t = 0; t < kTile; ++t) acc[j][t] = b;
        }
        for (std::size_t ic = 0; ic < in_channels; ++ic) {
          const double* base = in.data.data() + ic * plane + oy * S * in.width + ox0 * S;
          const double* wp = wblock + ic * K * K * kChannelBlock;
          for (std::size_t ky = 0; ky < K; ++ky) {
            const double* row = base + ky * in.width;
            for (std::size_t kx = 0; kx < K; ++kx) {
              const double* wl = wp + (ky * K + kx) * kChannelBlock;
              double src[kTile];
              for (std::size_t t = 0; t < kTile; ++t) src[t] = row[kx + t * S];
              for (std::size_t j = 0; j < kChannelBlock; ++j) {
                for (std::size_t t = 0; t < kTile; ++t) acc[j][t] += wl[j] * src[t];
              }
            }
          }
        }
        const std::size_t nt = std::min(kTile, out_w - ox0);
        for (std::size_t j = 0; j < nb; ++j) {
          double* dst = out + ((oc0 + j) * out_h + oy) * out_w + ox0;
          for (std::size_t t = 0; t < nt; ++t) dst[t] = acc[j][t];
        }
      }
    }
  }
}

void correlate(const Padded& in, std::size_t in_channels, std::size_t out_channels, std::size_t k,
               std::size_t stride, std::size_t out_h, std::size_t out_w, const std::vector<double>& packed,
               const double* bias, double* out) {
  if (k == 3 && stride == 1) {
    correlate_fixed<3, 1>(in, in_channels, out_channels, out_h, out_w, packed, bias, out);
  } else if (k == 3 && stride == 2) {
    correlate_fixed<3, 2>(in, in_channels, out_channels, out_h, out_w, packed, bias, out);
  } else if (k == 1 && stride == 1) {
    correlate_fixed<1, 1>(in, in_channels, out_channels, out_h, out_w, packed, bias, out);
  } else if (k == 1 && stride == 2) {
    correlate_fixed<1, 2>(in, in_channels, out_channels, out_h, out_w, packed, bias, out);
  } else {
    throw std::invalid_argument("convolution supports kernels 1 and 3 with strides 1 and 2");
  }
}

// d_weight(oc, ic, ky, kx) += sum_{oy,ox} grad[oc][oy][ox] * in[ic][oy*S+ky][ox*S+kx].
template <std::size_t K, std::size_t S>
void weight_gradient_fixed(const Padded& in, const Padded& grad, std::size_t in_channels, std::size_t out_channels,
                           std::size_t out_h, double* d_weight) {
  const std::size_t wt = grad.width;
  for (std::size_t oc = 0; oc < out_channels; ++oc) {
    const double* gp = grad.data.data() + oc * out_h * wt;
    for (std::size_t ic = 0; ic < in_channels; ++ic) {
      const double* ip = in.data.data() + ic * in.height * in.width;
      double acc[K * K][kTile] = {};
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox0 = 0; ox0 < wt; ox0 += kTile) {
          const double* gr = gp + oy * wt + ox0;
          for (std::size_t ky = 0; ky < K; ++ky) {
            const double* row = ip + (oy * S + ky) * in.width + ox0 * S;
            for (std::size_t kx = 0; kx < K; ++kx) {
              for (std::size_t t = 0; t < kTile; ++t) acc[ky * K + kx][t] += gr[t] * row[kx + t * S];
            }
          }
        }
      }
      double* dwp = d_weight + (oc * in_channels + ic) * K * K;
      for (std::size_t tap = 0; tap < K * K; ++tap) {
        double sum = 0.0;
        for (std::size_t t = 0; t < kTile; ++t) sum += acc[tap][t];
        dwp[tap] += sum;
      }
    }
  }
}

void weight_gradient(const Padded& in, const Padded& grad, std::size_t in_channels, std::size_t out_channels,
                     std::size_t k, std::size_t stride, std::size_t out_h, double* d_weight) {
  if (k == 3 && stride == 1) {
    weight_gradient_fixed<3, 1>(in, grad, in_channels, out_channels, out_h, d_weight);
  } else if (k == 3 && stride == 2) {
    weight_gradient_fixed<3, 2>(in, grad, in_channels, out_channels, out_h, d_weight);
  } else if (k == 1 && stride == 1) {
    weight_gradient_fixed<1, 1>(in, grad, in_channels, out_channels, out_h, d_weight);
  } else if (k == 1 && stride == 2) {
    weight_gradient_fixed<1, 2>(in, grad, in_channels, out_channels, out_h, d_weight);
  } else {
    throw std::invalid_argument("convolution supports kernels 1 and 3 with strides 1 and 2");
  }
}

}  // namespace

void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t ho = g.out_height();
  const std::size_t wo = g.out_width();
  const std::size_t k = g.kernel;
  const std::size_t s = g.stride;
  const std::size_t ph = std::max(g.in_height + 2 * g.pad, (ho - 1) * s + k);
  const std::size_t pw = std::max(g.in_width + 2 * g.pad, (round_up(wo, kTile) - 1) * s + k);
  const auto padded = pad_planes(in.data(), g.in_channels, g.in_height, g.in_width, g.pad, g.pad, ph, pw);
  const double* w = weight.data();
  const std::size_t cin = g.in_channels;
  const auto packed = pack_weights(cin, g.out_channels, k, [=](std::size_t oc, std::size_t ic, std::size_t ky,
                                                                std::size_t kx) {
    return w[((oc * cin + ic) * k + ky) * k + kx];
  });
  correlate(padded, cin, g.out_channels, k, s, ho, wo, packed, bias.data(), out.data());
}

void conv2d_backward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weight,
                     std::span<const double> d_out, std::span<double> d_weight, std::span<double> d_bias,
                     std::span<double> d_in) {
  const std::size_t ho = g.out_height();
  const std::size_t wo = g.out_width();
  const std::size_t plane_out = ho * wo;
  const std::size_t k = g.kernel;
  const std::size_t s = g.stride;
  const std::size_t cin = g.in_channels;
  const std::size_t cout = g.out_channels;

  for (std::size_t oc = 0; oc < cout; ++oc) {
    const double* dop = d_out.data() + oc * plane_out;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane_out; ++i) bsum += dop[i];
    d_bias[oc] += bsum;
  }

  // Weight gradient: per-lane partial sums over output tiles, reduced in a
  // fixed order at the end.
  const std::size_t wo_tiled = round_up(wo, kTile);
  const std::size_t ph = std::max(g.in_height + 2 * g.pad, (ho - 1) * s + k);
  const std::size_t pw = std::max(g.in_width + 2 * g.pad, (wo_tiled - 1) * s + k);
  const auto padded = pad_planes(in.data(), cin, g.in_height, g.in_width, g.pad, g.pad, ph, pw);
  const auto grad = pad_planes(d_out.data(), cout, ho, wo, 0, 0, ho, wo_tiled);
  weight_gradient(padded, grad, cin, cout, k, s, ho, d_weight.data());

  if (d_in.empty()) return;

  // Input gradient: correlate the stride-dilated, (k-1)-padded output
  // gradient with the flipped kernel, channels swapped, then crop the pad.
  const std::size_t full_h = g.in_height + 2 * g.pad;
  const std::size_t full_w = g.in_width + 2 * g.pad;
  const std::size_t full_w_tiled = round_up(full_w, kTile);
  const std::size_t dh = std::max((ho - 1) * s + 1 + 2 * (k - 1), full_h + k - 1);
  const std::size_t dw = std::max((wo - 1) * s + 1 + 2 * (k - 1), full_w_tiled + k - 1);
  const auto dilated = pad_planes(d_out.data(), cout, ho, wo, k - 1, k - 1, dh, dw, s, s);
  std::vector<double> full(cin * full_h * full_w);
  const double* w = weight.data();
  const auto flipped = pack_weights(cout, cin, k, [=](std::size_t ic, std::size_t oc, std::size_t ky,
                                                      std::size_t kx) {
    return w[((oc * cin + ic) * k + (k - 1 - ky)) * k + (k - 1 - kx)];
  });
  correlate(dilated, cout, cin, k, 1, full_h, full_w, flipped, nullptr, full.data());
  for (std::size_t ic = 0; ic < cin; ++ic) {
    for (std::size_t y = 0; y < g.in_height; ++y) {
      const double* src = full.data() + (ic * full_h + y + g.pad) * full_w + g.pad;
      double* dst = d_in.data() + (ic * g.in_height + y) * g.in_width;
      for (std::size_t x = 0; x < g.in_width; ++x) dst[x] += src[x];
    }
  }
}

void dense_forward(std::size_t in_features, std::size_t out_features, std::span<const double> in,
                   std::span<const double> weight, std::span<const double> bias, std::span<double> out) {
  for (std::size_t o = 0; o < out_features; ++o) {
    const double* w = weight.data() + o * in_features;
    double sum = bias[o];
    for (std::size_t i = 0; i < in_features; ++i) sum += w[i] * in[i];
    out[o] = sum;
  }
}

void dense_backward(std::size_t in_features, std::size_t out_features, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out, std::span<double> d_weight,
                    std::span<double> d_bias, std::span<double> d_in) {
  if (!d_in.empty()) std::fill_n(d_in.begin(), in_features, 0.0);
  for (std::size_t o = 0; o < out_features; ++o) {
    const double g = d_out[o];
    d_bias[o] += g;
    double* dw = d_weight.data() + o * in_features;
    const double* w = weight.data() + o * in_features;
    for (std::size_t i = 0; i < in_features; ++i) dw[i] += g * in[i];
    if (!d_in.empty()) {
      for (std::size_t i = 0; i < in_features; ++i) d_in[i] += g * w[i];
    }
  }
}

void relu_inplace(std::span<double> values) noexcept {
  for (auto& v : values) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(std::span<const double> activated, std::span<double> grad) noexcept {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activated[i] > 0.0)) grad[i] = 0.0;
  }
}

void global_average_pool(std::size_t channels, std::size_t plane, std::span<const double> in,
                         std::span<double> out) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* p = in.data() + c * plane;
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    out[c] = sum / static_cast<double>(plane);
  }
}

void global_average_pool_backward(std::size_t channels, std::size_t plane, std::span<const double> d_out,
                                  std::span<double> d_in) {
  for (std::size_t c = 0; c < channels; ++c) {
    std::fill_n(d_in.data() + c * plane, plane, d_out[c] / static_cast<double>(plane));
  }
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t target, std::span<double> d_logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  const double log_z = top + std::log(z);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    d_logits[i] = std::exp(logits[i] - log_z) - (i == target ? 1.0 : 0.0);
  }
  return log_z - logits[target];
}

}  // namespace fabinspect::nn

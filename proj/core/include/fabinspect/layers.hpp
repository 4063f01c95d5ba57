#pragma once

// Building blocks of the residual classifier: plain functions over raw
// channel-major buffers, each with a matching backward pass.

#include <cstddef>
#include <span>

namespace fabinspect::nn {

struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
  std::size_t in_height = 1;
  std::size_t in_width = 1;

  std::size_t out_height() const noexcept { return (in_height + 2 * pad - kernel) / stride + 1; }
  std::size_t out_width() const noexcept { return (in_width + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_count() const noexcept { return out_channels * in_channels * kernel * kernel; }
  std::size_t in_size() const noexcept { return in_channels * in_height * in_width; }
  std::size_t out_size() const noexcept { return out_channels * out_height() * out_width(); }
};

/// out = conv(in, weight) + bias. weight is [out][in][k][k]; out is overwritten.
void conv2d_forward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);

/// Accumulates into d_weight and d_bias; adds into d_in when it is non-empty.
void conv2d_backward(const ConvGeometry& g, std::span<const double> in, std::span<const double> weight,
                     std::span<const double> d_out, std::span<double> d_weight, std::span<double> d_bias,
                     std::span<double> d_in);

/// out[o] = sum_i weight[o][i] * in[i] + bias[o].
void dense_forward(std::size_t in_features, std::size_t out_features, std::span<const double> in,
                   std::span<const double> weight, std::span<const double> bias, std::span<double> out);

void dense_backward(std::size_t in_features, std::size_t out_features, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> d_out, std::span<double> d_weight,
                    std::span<double> d_bias, std::span<double> d_in);

void relu_inplace(std::span<double> values) noexcept;

/// Zeroes gradient entries whose activation output is not positive.
void relu_backward_inplace(std::span<const double> activated, std::span<double> grad) noexcept;

void global_average_pool(std::size_t channels, std::size_t plane, std::span<const double> in,
                         std::span<double> out);
void global_average_pool_backward(std::size_t channels, std::size_t plane, std::span<const double> d_out,
                                  std::span<double> d_in);

/// Cross entropy of one sample: returns -log softmax(logits)[target]
/// and writes d loss / d logits.
double softmax_cross_entropy(std::span<const double> logits, std::size_t target, std::span<double> d_logits);

}  // namespace fabinspect::nn

#pragma once

#include <cstddef>
#include <vector>

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"

namespace nubox {

/// Convolution kernel K(o, i, a, b): output channel o, input channel i,
/// offset a along the width axis and b along the height axis.
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t filter_w = 0;
  std::size_t filter_h = 0;
  std::vector<double> data;

  double operator()(std::size_t o, std::size_t i, std::size_t a, std::size_t b) const {
    return data[((o * in_channels + i) * filter_w + a) * filter_h + b];
  }
};

struct ConvShape {
  std::size_t in_w;
  std::size_t in_h;
};

/// Lowers a stride-1, unpadded convolution (cross-correlation) to a dense matrix.
/// Tensors are flattened channel-major as (c * w + x) * h + y.
inline Matrix lower_conv(const ConvKernel& k, ConvShape in) {
  if (k.data.size() != k.out_channels * k.in_channels * k.filter_w * k.filter_h) {
    throw DimensionError("conv kernel data length does not match its shape");
  }
  if (k.filter_w == 0 || k.filter_h == 0 || k.filter_w > in.in_w || k.filter_h > in.in_h) {
    throw DimensionError("conv filter larger than input");
  }
  const std::size_t out_w = in.in_w - k.filter_w + 1;
  const std::size_t out_h = in.in_h - k.filter_h + 1;
  Matrix m(k.out_channels * out_w * out_h, k.in_channels * in.in_w * in.in_h);
  for (std::size_t o = 0; o < k.out_channels; ++o)
    for (std::size_t x = 0; x < out_w; ++x)
      for (std::size_t y = 0; y < out_h; ++y) {
        const std::size_t row = (o * out_w + x) * out_h + y;
        for (std::size_t i = 0; i < k.in_channels; ++i)
          for (std::size_t a = 0; a < k.filter_w; ++a)
            for (std::size_t b = 0; b < k.filter_h; ++b) {
              const std::size_t col = (i * in.in_w + x + a) * in.in_h + y + b;
              m(row, col) = k(o, i, a, b);
            }
      }
  return m;
}

}  // namespace nubox

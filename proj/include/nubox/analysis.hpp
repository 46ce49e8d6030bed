#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nubox/error.hpp"
#include "nubox/matrix.hpp"

namespace nubox {

inline void check_positive(std::span<const double> eps, const char* what) {
  if (eps.empty()) throw DimensionError(std::string(what) + ": empty vector");
  for (double e : eps) {
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument(std::string(what) + ": entries must be > 0");
  }
}

/// -sum_j log eps_j
inline double neg_log_volume(std::span<const double> eps) {
  check_positive(eps, "neg_log_volume");
  double s = 0.0;
  for (double e : eps) s -= std::log(e);
  return s;
}

/// (prod_j eps_j)^(1/n), evaluated in log space.
inline double geo_mean_volume(std::span<const double> eps) {
  return std::exp(-neg_log_volume(eps) / static_cast<double>(eps.size()));
}

struct SimilarityStats {
  double mean_cosine = 0.0;
  double min_cosine = 0.0;
  std::size_t pair_count = 0;
};

inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm vector");
  return dot(a, b) / (na * nb);
}

/// Mean and minimum cosine similarity over all unordered pairs.
inline SimilarityStats cosine_stats(const std::vector<Vector>& vs) {
  if (vs.size() < 2) throw std::invalid_argument("cosine_stats: need at least two vectors");
  std::vector<double> norms;
  for (const auto& v : vs) {
    if (v.size() != vs.front().size()) throw DimensionError("cosine_stats: vectors differ in length");
    norms.push_back(norm2(v));
    if (norms.back() == 0.0) throw std::invalid_argument("cosine_stats: zero-norm vector");
  }
  SimilarityStats s;
  s.min_cosine = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const double c = std::clamp(dot(vs[i], vs[j]) / (norms[i] * norms[j]), -1.0, 1.0);
      sum += c;
      s.min_cosine = std::min(s.min_cosine, c);
      ++s.pair_count;
    }
  s.mean_cosine = sum / static_cast<double>(s.pair_count);
  return s;
}

/// Gray level of one bounding-map pixel: clamp(1 - scale*eps, 0, 1) on 0..255, rounded half up.
inline int bounding_map_level(double eps, double scale) {
  const double v = std::clamp(1.0 - scale * eps, 0.0, 1.0);
  return static_cast<int>(std::floor(v * 255.0 + 0.5));
}

/// Plain (P2) PGM rendering of eps laid out row-major as height rows of width pixels.
inline std::string bounding_map_pgm(std::span<const double> eps, std::size_t width, std::size_t height,
                                    double scale = 5.0) {
  if (eps.size() != width * height) {
    throw DimensionError("bounding map: eps has " + std::to_string(eps.size()) + " entries, shape is " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  std::ostringstream out;
  out << "P2\n" << width << ' ' << height << "\n255\n";
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c) out << ' ';
      out << bounding_map_level(eps[r * width + c], scale);
    }
    out << '\n';
  }
  return out.str();
}

/// Writes `path` (PGM) and `path` + ".csv" with the raw eps values.
inline void export_bounding_map(std::span<const double> eps, std::size_t width, std::size_t height,
                                const std::string& path, double scale = 5.0) {
  const std::string pgm = bounding_map_pgm(eps, width, height, scale);
  std::ofstream img(path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot write '" + path + "'");
  img << pgm;
  std::ofstream csv(path + ".csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write '" + path + ".csv'");
  csv.precision(17);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (c) csv << ',';
      csv << eps[r * width + c];
    }
    csv << '\n';
  }
  if (!img || !csv) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace nubox

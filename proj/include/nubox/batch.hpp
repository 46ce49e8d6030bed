#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "nubox/certify.hpp"
#include "nubox/io.hpp"
#include "nubox/report.hpp"

namespace nubox {

enum class CertMode { uniform, nonuniform };

/// Certifies one labeled point. Points that are misclassified or cannot be
/// certified yield a row with feasible = false and zero budgets.
inline ReportRow certify_point(const Network& net, const LabeledPoint& p, std::size_t index, CertMode mode,
                               const AlConfig& cfg) {
  ReportRow row;
  row.index = index;
  row.label = p.label;
  row.eps.assign(p.features.size(), 0.0);
  try {
    if (mode == CertMode::uniform) {
      const double g = certify_uniform(net, p.features, p.label, cfg.delta, cfg.gamma_hi, cfg.gamma_tol);
      if (g > 0.0) {
        row.feasible = true;
        row.gamma_uniform = row.geo_mean = g;
        row.ratio = 1.0;
        row.eps.assign(p.features.size(), g);
      }
    } else {
      const CertResult r = certify_nonuniform(net, p.features, p.label, cfg);
      row.feasible = r.feasible;
      row.gamma_uniform = r.gamma_uniform;
      row.geo_mean = r.geo_mean;
      row.ratio = r.geo_mean / r.gamma_uniform;
      row.eps = r.eps;
    }
  } catch (const CertificationError&) {
    row.feasible = false;
  }
  return row;
}

/// Certifies ds.points[i] for each i in `indices` on `workers` threads. Rows come
/// back in the order of `indices`; each row is computed independently.
inline std::vector<ReportRow> certify_dataset(const Network& net, const Dataset& ds,
                                              const std::vector<std::size_t>& indices, CertMode mode,
                                              const AlConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  check_dataset(ds, net.input_size(), net.output_size());
  std::vector<ReportRow> rows(indices.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < indices.size() && !failed; i = next++) {
      try {
        rows[i] = certify_point(net, ds.points.at(indices[i]), indices[i], mode, cfg);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(indices.size(), 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

inline std::vector<std::size_t> all_indices(const Dataset& ds) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace nubox

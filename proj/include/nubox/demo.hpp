#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nubox/batch.hpp"
#include "nubox/certify.hpp"
#include "nubox/trainer.hpp"

namespace nubox {

/// Plain mini-batch GD settings that reach >= 98% test accuracy on the 2-D task;
/// the library defaults (lr 0.05, batch 128, 200 epochs) plateau near 92%.
inline TrainConfig demo_train_config() {
  TrainConfig c;
  c.epochs = 500;
  c.lr = 0.2;
  c.batch_size = 32;
  c.lr_decay = 0.5;
  c.lr_decay_every = 125;
  return c;
}

struct DemoOptions {
  std::uint64_t seed = 0;
  std::vector<std::size_t> arch{2, 10, 10, 10};
  std::size_t n_points = 10000;
  TrainConfig train = demo_train_config();  // adversarial settings are taken from pgd
  PgdConfig pgd;                  // robust model: tau 0.1, 20 iterations
  std::size_t cert_points = 0;    // 0 = every test point
  AlConfig al;
  unsigned workers = 1;
};

struct DemoModel {
  Network net;
  double test_accuracy = 0.0;
  std::vector<ReportRow> rows;  // non-uniform certification of the test points
};

struct DemoResult {
  Dataset train_set, test_set;
  DemoModel normal, robust;
};

/// Synthetic 2-D pipeline: data, a normally trained and a PGD-trained model from
/// the same initialization, and non-uniform certification of the test points.
inline DemoResult run_demo2d(const DemoOptions& opt) {
  auto [train_set, test_set] = gen_synthetic_2d(opt.seed, opt.arch.back(), opt.n_points, 0.9);

  const Network init = init_network(opt.arch, Activation::relu, opt.seed + 1);
  TrainConfig normal_cfg = opt.train;
  normal_cfg.adversarial.reset();
  TrainConfig robust_cfg = opt.train;
  robust_cfg.adversarial = opt.pgd;

  std::vector<std::size_t> idx = all_indices(test_set);
  if (opt.cert_points && opt.cert_points < idx.size()) idx.resize(opt.cert_points);
  auto finish = [&](Network net) {
    DemoModel m{std::move(net), 0.0, {}};
    m.test_accuracy = accuracy(m.net, test_set);
    m.rows = certify_dataset(m.net, test_set, idx, CertMode::nonuniform, opt.al, opt.workers);
    return m;
  };
  DemoModel normal = finish(train(init, train_set, normal_cfg));
  DemoModel robust = finish(adversarial_train(init, train_set, robust_cfg));
  return {std::move(train_set), std::move(test_set), std::move(normal), std::move(robust)};
}

}  // namespace nubox

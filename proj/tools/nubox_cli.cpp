// nubox command-line front end.
#include "CLI11.hpp"
#include "json.hpp"

#include <cctype>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nubox/nubox.hpp"

namespace fs = std::filesystem;
using namespace nubox;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitInput = 3;

// Thrown for bad user input that is not a parse error of a file.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vector parse_list(const std::string& s, const char* what) {
  Vector v;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad number in ") + what + ": '" + cell + "'");
    }
  }
  if (v.empty()) throw UsageError(std::string(what) + " is empty");
  return v;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (double d : parse_list(s, "--arch")) {
    if (!(d >= 1.0) || d != static_cast<double>(static_cast<std::size_t>(d))) {
      throw UsageError("--arch entries must be positive integers");
    }
    out.push_back(static_cast<std::size_t>(d));
  }
  if (out.size() < 2) throw UsageError("--arch needs at least two sizes");
  return out;
}

const Network& chain_model(const Model& m, const char* cmd) {
  if (const auto* net = std::get_if<Network>(&m)) return *net;
  throw UsageError(std::string(cmd) + " needs a layered model, got an edge-list model");
}

void print_vector(std::ostream& out, const char* name, const Vector& v) {
  out << name;
  for (double x : v) out << ' ' << x;
  out << '\n';
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt_rect(const ReportRow& r, const Vector& x) {
  std::ostringstream s;
  s.precision(17);
  s << r.index << ',' << r.label << ',' << (r.feasible ? 1 : 0) << ',' << x[0] << ',' << x[1] << ',' << r.eps[0]
    << ',' << r.eps[1] << ',' << r.gamma_uniform;
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nubox: non-uniform robustness boxes for feedforward networks"};
  app.require_subcommand(1);
  std::cout.precision(17);

  // certify
  std::string model_path, data_path, mode = "nonuniform", config_path, out_path;
  std::optional<std::size_t> point;
  std::optional<double> delta;
  unsigned workers = default_workers();
  bool header = false;
  auto* certify = app.add_subcommand("certify", "certify dataset rows and write a CSV report");
  certify->add_option("--model", model_path, "model JSON")->required();
  certify->add_option("--data", data_path, "dataset CSV (label first)")->required();
  certify->add_option("--point", point, "certify only this row (0-based)");
  certify->add_option("--mode", mode, "uniform or nonuniform")->check(CLI::IsMember({"uniform", "nonuniform"}));
  certify->add_option("--delta", delta, "required logit margin");
  certify->add_option("--config", config_path, "JSON optimizer config");
  certify->add_option("--out", out_path, "report path (stdout if omitted)");
  certify->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  certify->add_flag("--header", header, "skip one header line in the dataset");

  // bounds / gradcheck / oracle share point arguments
  std::string input_s, eps_s, algo = "combined";
  double h = 1e-6, tol = 1e-4;
  std::size_t max_nodes = 200000;
  auto* bnd = app.add_subcommand("bounds", "print certified output bounds");
  auto* gck = app.add_subcommand("gradcheck", "compare bound gradients with central differences");
  auto* orc = app.add_subcommand("oracle", "branch-and-bound output range vs certified bounds");
  for (auto* sc : {bnd, gck, orc}) {
    sc->add_option("--model", model_path, "model JSON")->required();
    sc->add_option("--input", input_s, "comma-separated input")->required();
    sc->add_option("--eps", eps_s, "comma-separated per-feature budget")->required();
  }
  bnd->add_option("--algo", algo, "simple, quad, combined or general")
      ->check(CLI::IsMember({"simple", "quad", "combined", "general"}));
  gck->set_help_flag("--help", "Print this help message and exit");
  gck->add_option("--h", h, "finite-difference step")->check(CLI::PositiveNumber);
  orc->add_option("--tol", tol, "range tolerance")->check(CLI::PositiveNumber);
  orc->add_option("--max-nodes", max_nodes, "node budget")->check(CLI::PositiveNumber);

  // map / similarity
  std::string eps_file, shape;
  std::size_t row = 0;
  double scale = 5.0;
  auto* map = app.add_subcommand("map", "export a bounding map as PGM plus CSV");
  map->add_option("--eps-file", eps_file, "certification report")->required();
  map->add_option("--row", row, "report index column value")->required();
  map->add_option("--shape", shape, "WxH")->required();
  map->add_option("--out", out_path, "PGM path")->required();
  map->add_option("--scale", scale, "gray = 1 - scale * eps");
  auto* sim = app.add_subcommand("similarity", "cosine similarity of feasible eps vectors");
  sim->add_option("--eps-file", eps_file, "certification report")->required();

  // demo2d / train
  std::uint64_t seed = 0;
  std::string out_dir, arch_s = "2,10,10,10", act_s = "relu";
  TrainConfig tcfg = demo_train_config();
  double pgd_tau = 0.0, pgd_step = 0.0;
  int pgd_iters = 20;
  std::size_t demo_points = 0;
  auto* demo = app.add_subcommand("demo2d", "synthetic 2-D data, normal and robust training, certification");
  demo->add_option("--seed", seed, "RNG seed");
  demo->add_option("--out", out_dir, "output directory")->required();
  demo->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  demo->add_option("--cert-points", demo_points, "certify only the first N test points (0 = all)");
  demo->add_option("--epochs", tcfg.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  auto* trn = app.add_subcommand("train", "train a network on a CSV dataset");
  trn->add_option("--data", data_path, "dataset CSV")->required();
  trn->add_option("--arch", arch_s, "layer sizes, e.g. 2,10,10,10");
  trn->add_option("--activation", act_s, "relu, sigmoid or tanh");
  trn->add_option("--pgd-tau", pgd_tau, "PGD budget (0 = plain training)")->check(CLI::NonNegativeNumber);
  trn->add_option("--pgd-iters", pgd_iters, "PGD iterations")->check(CLI::NonNegativeNumber);
  trn->add_option("--pgd-step", pgd_step, "PGD step (default 2.5 tau / iters)");
  trn->add_option("--epochs", tcfg.epochs, "epochs")->check(CLI::NonNegativeNumber);
  trn->add_option("--lr", tcfg.lr, "learning rate")->check(CLI::PositiveNumber);
  trn->add_option("--batch", tcfg.batch_size, "batch size")->check(CLI::PositiveNumber);
  trn->add_option("--lr-decay", tcfg.lr_decay, "step decay factor");
  trn->add_option("--lr-decay-every", tcfg.lr_decay_every, "epochs between decays (0 = constant lr)");
  trn->add_option("--seed", seed, "init and shuffle seed");
  trn->add_option("--out", out_path, "model JSON")->required();
  trn->add_flag("--header", header, "skip one header line in the dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (certify->parsed()) {
      const Model model = load_model_file(model_path);
      const Network& net = chain_model(model, "certify");
      const Dataset ds = load_dataset_file(data_path, header);
      check_dataset(ds, net.input_size(), net.output_size());
      AlConfig cfg;
      if (!config_path.empty()) {
        try {
          cfg = al_config_from_json(nlohmann::json::parse(read_file(config_path)));
        } catch (const nlohmann::json::exception& e) {
          throw FormatError(std::string("config: ") + e.what());
        }
      }
      if (delta) cfg.delta = *delta;
      cfg.validate();
      std::vector<std::size_t> idx;
      if (point) {
        if (*point >= ds.size()) throw UsageError("--point out of range");
        idx.push_back(*point);
      } else {
        idx = all_indices(ds);
      }
      const auto rows = certify_dataset(net, ds, idx, mode == "uniform" ? CertMode::uniform : CertMode::nonuniform,
                                        cfg, workers);
      const std::string report = format_report(rows, net.input_size());
      if (out_path.empty()) {
        std::cout << report;
      } else {
        write_file(out_path, report);
      }
      std::size_t feasible = 0;
      for (const auto& r : rows) feasible += r.feasible;
      std::cerr << feasible << "/" << rows.size() << " rows certified\n";
      if (point && feasible == 0) return kExitInfeasible;
      return kExitOk;
    }

    if (bnd->parsed() || gck->parsed() || orc->parsed()) {
      const Model model = load_model_file(model_path);
      const Budget budget{parse_list(input_s, "--input"), parse_list(eps_s, "--eps")};
      if (bnd->parsed()) {
        LayerBounds b;
        if (algo == "general") {
          const auto* dag = std::get_if<DagNetwork>(&model);
          b = dag ? bounds_general(*dag, budget) : bounds_general(to_dag(std::get<Network>(model)), budget);
        } else {
          const Network& net = chain_model(model, "bounds");
          const BoundMode m = algo == "simple" ? BoundMode::simple
                              : algo == "quad" ? BoundMode::quadratic
                                               : BoundMode::combined;
          b = bounds(net, budget, m);
        }
        print_vector(std::cout, "lower", b.output_lower());
        print_vector(std::cout, "upper", b.output_upper());
        return kExitOk;
      }
      const Network& net = chain_model(model, gck->parsed() ? "gradcheck" : "oracle");
      if (gck->parsed()) {
        const auto rep = check_bound_gradient(net, budget, h);
        std::cout << "coords " << rep.coords << "\nmax_rel_error " << rep.max_rel_error << "\nmax_rel_error_smooth "
                  << rep.max_rel_error_smooth << "\nfailures " << rep.failures << "\nfailures_with_flip "
                  << rep.failures_with_flip << "\nflips " << rep.flipped_coords << '\n';
        return kExitOk;
      }
      const auto est = exact_range_bb(net, budget, tol, max_nodes);
      const auto cert = bounds_combined(net, budget);
      std::cout << "logit,bb_lo,bb_hi,inner_lo,inner_hi,cert_lo,cert_hi\n";
      for (std::size_t o = 0; o < est.lo.size(); ++o) {
        std::cout << o << ',' << est.lo[o] << ',' << est.hi[o] << ',' << est.inner_lo[o] << ',' << est.inner_hi[o]
                  << ',' << cert.output_lower()[o] << ',' << cert.output_upper()[o] << '\n';
      }
      std::cout << "converged " << (est.converged ? 1 : 0) << "\nnodes " << est.nodes_expanded << '\n';
      return kExitOk;
    }

    if (map->parsed()) {
      std::size_t w = 0, hgt = 0;
      char x = 0;
      std::istringstream ss(shape);
      if (!(ss >> w >> x >> hgt) || (x != 'x' && x != 'X') || w == 0 || hgt == 0 || !ss.eof()) {
        throw UsageError("--shape must look like 28x28");
      }
      const auto rows = parse_report(read_file(eps_file));
      for (const auto& r : rows) {
        if (r.index != row) continue;
        if (r.eps.size() != w * hgt) throw DimensionError("--shape does not match the eps length");
        export_bounding_map(r.eps, w, hgt, out_path, scale);
        return kExitOk;
      }
      throw UsageError("row " + std::to_string(row) + " not found in report");
    }

    if (sim->parsed()) {
      std::vector<Vector> eps;
      for (const auto& r : parse_report(read_file(eps_file))) {
        if (r.feasible) eps.push_back(r.eps);
      }
      if (eps.size() < 2) throw UsageError("need at least two feasible rows");
      const auto s = cosine_stats(eps);
      std::cout << "mean_cosine " << s.mean_cosine << "\nmin_cosine " << s.min_cosine << "\npairs " << s.pair_count
                << '\n';
      return kExitOk;
    }

    if (demo->parsed()) {
      DemoOptions opt;
      opt.seed = seed;
      opt.workers = workers;
      opt.cert_points = demo_points;
      opt.train.epochs = tcfg.epochs;
      opt.train.seed = seed;
      const DemoResult res = run_demo2d(opt);
      fs::create_directories(out_dir);
      const fs::path dir(out_dir);
      write_file((dir / "train.csv").string(), format_dataset(res.train_set));
      write_file((dir / "test.csv").string(), format_dataset(res.test_set));
      for (const auto& [name, m] : {std::pair{"normal", &res.normal}, std::pair{"robust", &res.robust}}) {
        write_file((dir / (std::string(name) + "_model.json")).string(), save_model(m->net));
        write_file((dir / (std::string(name) + "_report.csv")).string(), format_report(m->rows, 2));
        std::string rects = "index,label,feasible,x0,x1,eps0,eps1,gamma_uniform\n";
        for (const auto& r : m->rows) rects += fmt_rect(r, res.test_set.points[r.index].features) + "\n";
        write_file((dir / (std::string(name) + "_rects.csv")).string(), rects);
        double geo = 0.0, gam = 0.0;
        std::size_t feasible = 0;
        for (const auto& r : m->rows) {
          if (!r.feasible) continue;
          ++feasible;
          geo += r.geo_mean;
          gam += r.gamma_uniform;
        }
        const double n = std::max<std::size_t>(feasible, 1);
        std::cout << name << ": test_accuracy " << m->test_accuracy << " certified " << feasible << "/"
                  << m->rows.size() << " mean_gamma " << gam / n << " mean_geo " << geo / n << '\n';
      }
      return kExitOk;
    }

    if (trn->parsed()) {
      const Activation act = parse_activation(act_s);
      const auto sizes = parse_sizes(arch_s);
      const Dataset ds = load_dataset_file(data_path, header);
      check_dataset(ds, sizes.front(), sizes.back());
      tcfg.seed = seed;
      const Network init = init_network(sizes, act, seed);
      Network net = init;
      if (pgd_tau > 0.0) {
        tcfg.adversarial = PgdConfig{pgd_tau, pgd_iters, pgd_step};
        net = adversarial_train(init, ds, tcfg);
      } else {
        net = train(init, ds, tcfg);
      }
      write_file(out_path, save_model(net));
      std::cout << "train_accuracy " << accuracy(net, ds) << "\ntrain_loss " << mean_loss(net, ds) << '\n';
      return kExitOk;
    }
  } catch (const CertificationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

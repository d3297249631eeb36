#include "dcci/cli.hpp"

#include <chrono>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dcci/checks.hpp"
#include "dcci/datasets.hpp"
#include "dcci/discrete.hpp"
#include "dcci/inference.hpp"
#include "dcci/io.hpp"
#include "dcci/trainer.hpp"

#ifndef DCCI_GIT_DESCRIBE
#define DCCI_GIT_DESCRIBE "unknown"
#endif

namespace dcci::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string out = "out";
  // training
  Index k0 = 3;
  Index batch = 512;
  double lr = 1e-3;
  Index epochs = 100;
  std::uint64_t seed = 0;
  std::optional<double> pinv_tol;
  std::optional<double> ridge_eps;
  std::string hidden = "64,64";
  std::string hidden_y;
  std::string optimizer = "adam";
  bool y_identity = false;
  std::string model;
  std::string data;
  std::string test_data;
  // inference
  std::string targets;
  std::string direction = "x-from-y";
  std::string at;
  bool save = false;
  // gen
  std::string generator = "gaussian";
  std::string name = "data";
  Index n = 10000;
  Index test_n = 0;
  double tau = 1.0;
  double sigma = 1.0;
  double gap = 0.0;
  double shift = 0.05;
  Index classes = 3;
  double separation = 3.0;
  double noise = 0.5;
  double label_noise = 0.05;
  Index nx = 4;
  Index ny = 4;
  double concentration = 1.0;
  // spectrum / gradcheck / oracle / verify
  Index k_report = 0;
  Index trials = 20;
  std::string joint;
  std::string suite = "all";
  Index joints = 20;
};

// Tracks one command invocation and writes its manifest and metrics.
class Run {
 public:
  Run(std::string command, const Options& opt, std::vector<std::string> argv)
      : command_(std::move(command)), out_dir_(opt.out), argv_(std::move(argv)),
        start_(std::chrono::steady_clock::now()), started_at_(std::time(nullptr)) {}

  const fs::path& out_dir() const { return out_dir_; }
  fs::path artifact(const std::string& file) {
    const fs::path p = out_dir_ / file;
    artifacts_.push_back(p.string());
    return p;
  }
  void add_artifact(const fs::path& p) { artifacts_.push_back(p.string()); }
  void input(const std::string& role, const std::string& path) { inputs_[role] = path; }

  json config = json::object();
  json metrics = json::object();
  json seeds = json::object();

  void finish(int exit_code) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    const json body = {{"command", command_}, {"config", config}, {"metrics", metrics}, {"artifacts", artifacts_}};
    io::write_text_atomic(out_dir_ / (command_ + "_metrics.json"), body.dump(2) + "\n");

    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&started_at_), "%Y-%m-%dT%H:%M:%SZ");
    const json manifest = {{"command", command_},
                           {"argv", argv_},
                           {"config", config},
                           {"seeds", seeds},
                           {"inputs", inputs_},
                           {"outputs", artifacts_},
                           {"metrics_file", (out_dir_ / (command_ + "_metrics.json")).string()},
                           {"started_at", ts.str()},
                           {"wall_clock_seconds", wall},
                           {"exit_code", exit_code},
                           {"build", DCCI_GIT_DESCRIBE}};
    io::write_text_atomic(out_dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_dir_;
  std::vector<std::string> argv_;
  std::chrono::steady_clock::time_point start_;
  std::time_t started_at_;
  std::vector<std::string> artifacts_;
  json inputs_ = json::object();
};

std::vector<Index> parse_widths(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const long v = std::stol(item);
      detail::require(v >= 1, "hidden widths must be positive");
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ValidationError("cannot parse hidden widths '" + text + "'");
    }
  }
  return out;
}

InverseMode inverse_mode(const Options& o) {
  if (o.ridge_eps) return InverseMode::ridge(*o.ridge_eps);
  return InverseMode::pseudo(o.pinv_tol.value_or(1e-10));
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg;
  cfg.k0 = o.k0;
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.inverse_mode = inverse_mode(o);
  if (o.optimizer == "adam") {
    cfg.optimizer = Optimizer::Adam;
  } else if (o.optimizer == "gd") {
    cfg.optimizer = Optimizer::GradientDescent;
  } else {
    throw ValidationError("unknown optimizer '" + o.optimizer + "' (adam or gd)");
  }
  cfg.hidden_x = parse_widths(o.hidden);
  cfg.hidden_y = o.hidden_y.empty() ? cfg.hidden_x : parse_widths(o.hidden_y);
  cfg.y_identity = o.y_identity;
  validate(cfg);
  return cfg;
}

void require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string("missing required flag ") + flag);
}

json column_stats(const MatrixXd& m) {
  json cols = json::array();
  for (Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    const double var = (m.col(c).array() - mean).square().mean();
    cols.push_back({{"mean", mean}, {"variance", var}});
  }
  return cols;
}

json checks_json(const std::vector<checks::CheckResult>& results, std::ostream& out, bool& all_passed) {
  json arr = json::array();
  for (const auto& r : results) {
    all_passed = all_passed && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << "  value=" << r.value << "  tol=" << r.tolerance << "\n";
    arr.push_back({{"name", r.name}, {"value", r.value}, {"tolerance", r.tolerance}, {"passed", r.passed},
                   {"detail", r.detail}});
  }
  return arr;
}

// ---- subcommands --------------------------------------------------------

int cmd_gen(const Options& o, Run& run, std::ostream& out) {
  run.config = {{"generator", o.generator}, {"n", o.n}, {"test_n", o.test_n}, {"seed", o.seed}};
  run.seeds["data"] = o.seed;
  if (o.generator == "discrete") {
    run.config.update({{"nx", o.nx}, {"ny", o.ny}, {"concentration", o.concentration}});
    const auto joint = gen_discrete_joint(o.nx, o.ny, o.seed, o.concentration);
    const fs::path jp = run.artifact(o.name + "_joint.csv");
    io::save_joint(jp, joint);
    if (o.n > 0) {
      const auto pairs = sample_joint(joint, o.n, o.seed);
      PairDataset d;
      d.x = pairs.col(0).cast<double>();
      d.y = pairs.col(1).cast<double>();
      d.meta = {{"generator", "discrete"},
                {"params", {{"nx", o.nx}, {"ny", o.ny}, {"concentration", o.concentration}, {"n", o.n}}},
                {"seed", o.seed}};
      const fs::path dp = run.artifact(o.name + ".csv");
      io::save_dataset(dp, d);
      run.add_artifact(io::meta_path(dp));
    }
    run.metrics = {{"nx", o.nx}, {"ny", o.ny}, {"etas", std::vector<double>()}};
    const auto d = channel_svd(joint);
    run.metrics["etas"] = std::vector<double>(d.etas.data(), d.etas.data() + d.etas.size());
    out << "wrote " << jp.string() << "\n";
    return kExitOk;
  }

  auto make = [&](Index n, std::uint64_t seed) {
    if (o.generator == "gaussian") return gen_gaussian_pair(n, o.tau, o.sigma, seed);
    if (o.generator == "ringdisk") return gen_ring_disk(n, seed, o.gap, o.shift);
    if (o.generator == "blobs") return gen_labeled_blobs(n, o.classes, o.separation, o.noise, o.label_noise, seed);
    throw ValidationError("unknown generator '" + o.generator + "' (gaussian, ringdisk, blobs, discrete)");
  };
  if (o.generator == "gaussian") run.config.update({{"tau", o.tau}, {"sigma", o.sigma}});
  if (o.generator == "ringdisk") run.config.update({{"gap", o.gap}, {"shift", o.shift}});
  if (o.generator == "blobs") {
    run.config.update({{"classes", o.classes},
                       {"separation", o.separation},
                       {"noise", o.noise},
                       {"label_noise", o.label_noise}});
  }
  const PairDataset d = make(o.n, o.seed);
  const fs::path dp = run.artifact(o.name + ".csv");
  io::save_dataset(dp, d);
  run.add_artifact(io::meta_path(dp));
  run.metrics = {{"n", d.size()}, {"dx", d.dx()}, {"dy", d.dy()}, {"x", column_stats(d.x)}, {"y", column_stats(d.y)}};
  out << "wrote " << dp.string() << " (" << d.size() << " rows)\n";
  if (o.test_n > 0) {
    const std::uint64_t test_seed = derive_seed(o.seed, 0x7e57);
    run.seeds["test"] = test_seed;
    const PairDataset t = make(o.test_n, test_seed);
    const fs::path tp = run.artifact(o.name + "_test.csv");
    io::save_dataset(tp, t);
    run.add_artifact(io::meta_path(tp));
    run.metrics["test_n"] = t.size();
    out << "wrote " << tp.string() << " (" << t.size() << " rows)\n";
  }
  return kExitOk;
}

int cmd_train(const Options& o, Run& run, std::ostream& out, std::ostream& err) {
  require_path(o.data, "--data");
  require_path(o.test_data, "--test-data");
  const TrainConfig cfg = train_config(o);
  run.config = io::to_json(cfg);
  run.seeds["train"] = cfg.seed;
  run.input("data", o.data);
  run.input("test_data", o.test_data);
  for (const auto& w : config_warnings(cfg)) err << "warning: " << w << "\n";

  const PairDataset train_set = io::load_dataset(o.data);
  const PairDataset test_set = io::load_dataset(o.test_data);
  TrainHooks hooks;
  hooks.on_epoch = [&](Index epoch, const EpochRecord& r) {
    out << "epoch " << epoch << "  train_loss " << r.train_loss << "  test_loss " << r.test_loss << "\n";
  };
  const TrainedModel model = train(train_set, test_set, cfg, hooks);

  const fs::path model_path = o.model.empty() ? run.out_dir() / "model.json" : fs::path(o.model);
  io::save_model(model_path, model);
  run.add_artifact(model_path);
  MatrixXd loss_rows(static_cast<Index>(model.history.size()), 3);
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    loss_rows.row(static_cast<Index>(e)) << double(e), model.history[e].train_loss, model.history[e].test_loss;
  }
  io::write_csv(run.artifact("loss.csv"), {"epoch", "train_loss", "test_loss"}, loss_rows);
  run.metrics = {{"epochs_run", model.history.size()},
                 {"n_train", train_set.size()},
                 {"n_test", test_set.size()},
                 {"warnings", config_warnings(cfg)}};
  if (!model.history.empty()) {
    run.metrics["final_train_loss"] = model.history.back().train_loss;
    run.metrics["final_test_loss"] = model.history.back().test_loss;
  }
  return kExitOk;
}

int cmd_spectrum(const Options& o, Run& run, std::ostream& out) {
  require_path(o.model, "--model");
  require_path(o.data, "--data");
  run.input("model", o.model);
  run.input("data", o.data);
  const TrainedModel model = io::load_model(o.model);
  const PairDataset data = io::load_dataset(o.data);
  const Index k_report = o.k_report > 0 ? o.k_report : model.config.k0;
  run.config = {{"k_report", k_report}, {"model_config", io::to_json(model.config)}};
  const SpanDiagonalization s = extract_canonical(model, data, k_report);

  MatrixXd rows(k_report, 3);
  for (Index i = 0; i < k_report; ++i) rows.row(i) << double(i), s.singular_values(i), s.relevances(i);
  io::write_csv(run.artifact("spectrum.csv"), {"index", "singular_value", "relevance"}, rows);
  run.metrics = {
      {"singular_values", std::vector<double>(s.singular_values.data(), s.singular_values.data() + k_report)},
      {"relevances", std::vector<double>(s.relevances.data(), s.relevances.data() + k_report)},
      {"relevance_sum", s.relevances.sum()},
      {"n", data.size()}};
  for (Index i = 0; i < k_report; ++i) out << i << "  eta " << s.singular_values(i) << "  eta^2 " << s.relevances(i) << "\n";
  return kExitOk;
}

MatrixXd parse_points(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> vals;
    std::stringstream rs(row);
    std::string cell;
    while (std::getline(rs, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw ValidationError("cannot parse observation '" + cell + "'");
      }
    }
    if (!vals.empty()) rows.push_back(std::move(vals));
  }
  detail::require(!rows.empty(), "no observations in --at");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    detail::require(rows[r].size() == rows[0].size(), "observations in --at have different lengths");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(Index(r), Index(c)) = rows[r][c];
  }
  return m;
}

int cmd_infer(const Options& o, Run& run, std::ostream& out) {
  require_path(o.model, "--model");
  run.input("model", o.model);
  const TrainedModel model = io::load_model(o.model);
  InferenceModel inf;
  if (!o.targets.empty()) {
    require_path(o.data, "--data");
    run.input("data", o.data);
    const PairDataset training = io::load_dataset(o.data);
    inf = fit_statistics(model, training, parse_targets(o.targets), direction_from_string(o.direction));
    if (o.save) io::save_model(o.model, model, &inf);
  } else {
    auto stored = io::load_inference(o.model, model);
    if (!stored) throw ValidationError("model has no stored inference statistics; pass --targets and --data");
    inf = std::move(*stored);
  }
  run.config = {{"direction", to_string(inf.direction)}, {"targets", io::to_json(inf).at("target_names")}};

  MatrixXd obs;
  if (!o.at.empty()) {
    obs = parse_points(o.at);
  } else {
    require_path(o.test_data, "--test-data or --at");
    run.input("observations", o.test_data);
    const PairDataset q = io::load_dataset(o.test_data);
    obs = inf.direction == Direction::YtoX ? q.y : q.x;
  }

  std::vector<std::string> header = {"row"};
  for (const auto& t : inf.targets) header.push_back(t.name);
  std::vector<std::size_t> with_std;
  {
    const Posterior probe = infer(inf, obs.row(0));
    for (std::size_t k = 0; k < probe.stddev.size(); ++k) {
      if (probe.stddev[k]) {
        with_std.push_back(k);
        header.push_back("std_" + probe.names[k]);
      }
    }
  }
  MatrixXd rows(obs.rows(), static_cast<Index>(header.size()));
  Index clamped = 0;
  json first;
  for (Index r = 0; r < obs.rows(); ++r) {
    const Posterior p = infer(inf, obs.row(r));
    rows(r, 0) = double(r);
    rows.row(r).segment(1, p.expectations.size()) = p.expectations.transpose();
    for (std::size_t s = 0; s < with_std.size(); ++s) {
      rows(r, 1 + p.expectations.size() + Index(s)) = p.stddev[with_std[s]].value_or(0.0);
      if (p.clamped[with_std[s]]) ++clamped;
    }
    if (r == 0) {
      first = json::object();
      for (std::size_t k = 0; k < p.names.size(); ++k) first[p.names[k]] = p.expectations(Index(k));
    }
  }
  io::write_csv(run.artifact("predictions.csv"), header, rows);
  run.metrics = {{"n_observations", obs.rows()}, {"clamped_variances", clamped}, {"first_posterior", first}};
  out << "posterior for first observation: " << first.dump() << "\n";
  return kExitOk;
}

int cmd_classify(const Options& o, Run& run, std::ostream& out) {
  require_path(o.model, "--model");
  require_path(o.data, "--data");
  require_path(o.test_data, "--test-data");
  run.input("model", o.model);
  run.input("data", o.data);
  run.input("test_data", o.test_data);
  const TrainedModel model = io::load_model(o.model);
  const PairDataset training = io::load_dataset(o.data);
  const PairDataset test = io::load_dataset(o.test_data);
  const InferenceModel inf = fit_classifier(model, training);
  if (o.save) io::save_model(o.model, model, &inf);

  const Index k = test.dy();
  MatrixXd rows(test.size(), 3 + k);
  MatrixXd confusion = MatrixXd::Zero(k, k);
  Index correct = 0;
  for (Index r = 0; r < test.size(); ++r) {
    const Classification c = classify(inf, test.x.row(r));
    Index truth = 0;
    test.y.row(r).maxCoeff(&truth);
    correct += c.label == truth;
    confusion(truth, c.label) += 1;
    rows(r, 0) = double(r);
    rows(r, 1) = double(c.label);
    rows(r, 2) = double(truth);
    rows.row(r).tail(k) = c.scores.transpose();
  }
  std::vector<std::string> header = {"row", "label", "true_label"};
  for (Index c = 0; c < k; ++c) header.push_back("score_" + std::to_string(c));
  io::write_csv(run.artifact("classification.csv"), header, rows);
  const double accuracy = double(correct) / double(test.size());
  json cm = json::array();
  for (Index i = 0; i < k; ++i) {
    json row = json::array();
    for (Index j = 0; j < k; ++j) row.push_back(confusion(i, j));
    cm.push_back(row);
  }
  run.config = {{"classes", k}};
  run.metrics = {{"accuracy", accuracy}, {"n_test", test.size()}, {"confusion", cm}};
  out << "accuracy " << accuracy << " on " << test.size() << " test rows\n";
  return kExitOk;
}

int cmd_gradcheck(const Options& o, Run& run, std::ostream& out) {
  run.config = {{"trials", o.trials}, {"seed", o.seed}};
  run.seeds["gradcheck"] = o.seed;
  bool ok = true;
  run.metrics["checks"] = checks_json(checks::gradient_suite(o.trials, o.seed), out, ok);
  run.metrics["passed"] = ok;
  return ok ? kExitOk : kExitNumerical;
}

int cmd_oracle(const Options& o, Run& run, std::ostream& out) {
  std::optional<JointDistribution<double>> joint;
  if (!o.joint.empty()) {
    run.input("joint", o.joint);
    joint.emplace(io::load_joint(o.joint));
  } else {
    run.seeds["joint"] = o.seed;
    joint.emplace(gen_discrete_joint(o.nx, o.ny, o.seed, o.concentration));
  }
  const auto d = channel_svd(*joint);
  const Index r = d.rank();
  MatrixXd etas(r, 3);
  MatrixXd trunc(r, 3);
  for (Index i = 0; i < r; ++i) {
    etas.row(i) << double(i), d.etas(i), d.etas(i) * d.etas(i);
    trunc.row(i) << double(i + 1), frobenius_distance(*joint, truncated_joint(d, i + 1)),
        d.etas.tail(r - i - 1).squaredNorm();
  }
  io::write_csv(run.artifact("oracle_spectrum.csv"), {"index", "eta", "relevance"}, etas);
  io::write_csv(run.artifact("oracle_truncation.csv"), {"k0", "frobenius_distance", "tail_sum_eta2"}, trunc);
  std::vector<std::string> vh;
  for (Index i = 0; i < r; ++i) vh.push_back("a" + std::to_string(i));
  io::write_csv(run.artifact("oracle_left_vars.csv"), vh, d.left_vars);
  for (auto& h : vh) h[0] = 'b';
  io::write_csv(run.artifact("oracle_right_vars.csv"), vh, d.right_vars);
  if (o.k_report > 0) {
    // The truncation can have negative entries, so it is written as a plain table.
    std::vector<std::string> cols;
    for (Index y = 0; y < joint->ny(); ++y) cols.push_back("y" + std::to_string(y));
    io::write_csv(run.artifact("oracle_truncated_joint.csv"), cols, truncated_joint(d, o.k_report));
  }
  run.config = {{"nx", joint->nx()}, {"ny", joint->ny()}};
  run.metrics = {{"etas", std::vector<double>(d.etas.data(), d.etas.data() + r)},
                 {"relevance_sum", d.etas.squaredNorm()}};
  for (Index i = 0; i < r; ++i) out << i << "  eta " << d.etas(i) << "\n";
  return kExitOk;
}

int cmd_verify(const Options& o, Run& run, std::ostream& out) {
  run.config = {{"suite", o.suite}, {"seed", o.seed}, {"joints", o.joints}, {"trials", o.trials}};
  run.seeds["verify"] = o.seed;
  const bool all = o.suite == "all";
  if (!all && o.suite != "gaussian" && o.suite != "discrete" && o.suite != "projector" && o.suite != "gradient") {
    throw ValidationError("unknown suite '" + o.suite + "' (gaussian, discrete, projector, gradient, all)");
  }
  bool ok = true;
  if (all || o.suite == "gaussian") run.metrics["gaussian"] = checks_json(checks::gaussian_suite(o.tau, o.sigma), out, ok);
  if (all || o.suite == "discrete") run.metrics["discrete"] = checks_json(checks::discrete_suite(o.joints, o.seed), out, ok);
  if (all || o.suite == "projector") run.metrics["projector"] = checks_json(checks::projector_suite(o.trials, o.seed), out, ok);
  if (all || o.suite == "gradient") run.metrics["gradient"] = checks_json(checks::gradient_suite(o.trials, o.seed), out, ok);
  run.metrics["passed"] = ok;
  out << (ok ? "all checks passed" : "some checks FAILED") << "\n";
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Learn relevant feature pairs of a joint distribution and infer conditional expectations", "dcci"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--k0", o.k0, "Number of learned features per side")->capture_default_str();
    sub->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
    sub->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    sub->add_option("--epochs", o.epochs, "Number of epochs")->capture_default_str();
    sub->add_option("--pinv-tol", o.pinv_tol, "Relative eigenvalue cutoff of the pseudo-inverse (default 1e-10)");
    sub->add_option("--ridge-eps", o.ridge_eps, "Use (M + eps I)^-1 instead of the pseudo-inverse");
    sub->add_option("--hidden", o.hidden, "Hidden widths of the x network, comma separated")->capture_default_str();
    sub->add_option("--hidden-y", o.hidden_y, "Hidden widths of the y network (default: --hidden)");
    sub->add_option("--optimizer", o.optimizer, "adam or gd")->capture_default_str();
    sub->add_flag("--y-identity", o.y_identity, "Use raw y columns (e.g. one-hot labels) as the y features");
  };

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset or discrete joint");
  common(gen);
  gen->add_option("--generator", o.generator, "gaussian, ringdisk, blobs or discrete")->capture_default_str();
  gen->add_option("--name", o.name, "Output file stem")->capture_default_str();
  gen->add_option("--n", o.n, "Number of samples")->capture_default_str();
  gen->add_option("--test-n", o.test_n, "Also write an independent test set of this size")->capture_default_str();
  gen->add_option("--tau", o.tau, "Gaussian prior std")->capture_default_str();
  gen->add_option("--sigma", o.sigma, "Gaussian noise std")->capture_default_str();
  gen->add_option("--gap", o.gap, "Ring gap angle in radians")->capture_default_str();
  gen->add_option("--shift", o.shift, "Ring/disk shift std")->capture_default_str();
  gen->add_option("--classes", o.classes, "Number of blob classes")->capture_default_str();
  gen->add_option("--separation", o.separation, "Blob circle radius")->capture_default_str();
  gen->add_option("--noise", o.noise, "Blob std")->capture_default_str();
  gen->add_option("--label-noise", o.label_noise, "Label flip probability")->capture_default_str();
  gen->add_option("--nx", o.nx, "Discrete x states")->capture_default_str();
  gen->add_option("--ny", o.ny, "Discrete y states")->capture_default_str();
  gen->add_option("--concentration", o.concentration, "Gamma shape for discrete joints")->capture_default_str();

  auto* tr = app.add_subcommand("train", "Train the two feature networks");
  common(tr);
  training(tr);
  tr->add_option("--data", o.data, "Training dataset CSV");
  tr->add_option("--test-data", o.test_data, "Test dataset CSV");
  tr->add_option("--model", o.model, "Model JSON to write (default <out>/model.json)");

  auto* sp = app.add_subcommand("spectrum", "Learned singular values on a dataset");
  common(sp);
  sp->add_option("--model", o.model, "Model JSON");
  sp->add_option("--data", o.data, "Dataset CSV");
  sp->add_option("--k-report", o.k_report, "Number of leading pairs to report (default k0)");

  auto* inf = app.add_subcommand("infer", "Conditional expectations of registered targets");
  common(inf);
  inf->add_option("--model", o.model, "Model JSON");
  inf->add_option("--data", o.data, "Training dataset CSV for the target statistics");
  inf->add_option("--targets", o.targets, "Comma-separated targets, e.g. x0,x0*x0");
  inf->add_option("--direction", o.direction, "x-from-y or y-from-x")->capture_default_str();
  inf->add_option("--test-data", o.test_data, "Observations (dataset CSV; the conditioning side is used)");
  inf->add_option("--at", o.at, "Observations inline: '2' or '0.1,0.2;0.3,0.4'");
  inf->add_flag("--save", o.save, "Store the statistics in the model file");

  auto* cl = app.add_subcommand("classify", "Classification by inferred one-hot expectations");
  common(cl);
  cl->add_option("--model", o.model, "Model JSON (trained with --y-identity on one-hot labels)");
  cl->add_option("--data", o.data, "Training dataset CSV");
  cl->add_option("--test-data", o.test_data, "Test dataset CSV");
  cl->add_flag("--save", o.save, "Store the statistics in the model file");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  common(gc);
  gc->add_option("--trials", o.trials, "Random instances")->capture_default_str();

  auto* orc = app.add_subcommand("oracle", "Exact channel SVD of a discrete joint");
  common(orc);
  orc->add_option("--joint", o.joint, "Joint table CSV (default: random joint from --nx/--ny/--seed)");
  orc->add_option("--nx", o.nx, "Random joint x states")->capture_default_str();
  orc->add_option("--ny", o.ny, "Random joint y states")->capture_default_str();
  orc->add_option("--concentration", o.concentration, "Gamma shape for random joints")->capture_default_str();
  orc->add_option("--k0", o.k_report, "Also write the rank-k0 truncation");

  auto* ver = app.add_subcommand("verify", "Run identity checks");
  common(ver);
  ver->add_option("--suite", o.suite, "gaussian, discrete, projector, gradient or all")->capture_default_str();
  ver->add_option("--joints", o.joints, "Random joints for the discrete suite")->capture_default_str();
  ver->add_option("--trials", o.trials, "Instances for projector/gradient suites")->capture_default_str();
  ver->add_option("--tau", o.tau, "Gaussian prior std")->capture_default_str();
  ver->add_option("--sigma", o.sigma, "Gaussian noise std")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  std::vector<std::string> argv_copy(argv, argv + argc);
  Run run(command, o, argv_copy);
  int code = kExitOk;
  try {
    if (command == "gen") code = cmd_gen(o, run, out);
    else if (command == "train") code = cmd_train(o, run, out, err);
    else if (command == "spectrum") code = cmd_spectrum(o, run, out);
    else if (command == "infer") code = cmd_infer(o, run, out);
    else if (command == "classify") code = cmd_classify(o, run, out);
    else if (command == "gradcheck") code = cmd_gradcheck(o, run, out);
    else if (command == "oracle") code = cmd_oracle(o, run, out);
    else if (command == "verify") code = cmd_verify(o, run, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    run.metrics["error"] = e.what();
    code = kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    run.metrics["error"] = e.what();
    code = kExitValidation;
  }
  try {
    run.finish(code);
  } catch (const std::exception& e) {
    err << "error: cannot write run outputs: " << e.what() << "\n";
    if (code == kExitOk) code = kExitValidation;
  }
  return code;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv = {"dcci"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dcci::cli

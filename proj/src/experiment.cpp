#include "slimtrain/experiment.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "slimtrain/io.hpp"
#include "slimtrain/optimizers.hpp"
#include "slimtrain/stik.hpp"

#ifndef SLIMTRAIN_VERSION
#define SLIMTRAIN_VERSION "dev"
#endif

namespace fs = std::filesystem;

namespace slimtrain {

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
}

void write_plots(const fs::path& dir, const std::vector<EpochRecord>& epochs,
                 const std::vector<IterationRecord>& iterations) {
  write_file(dir / "loss.svg", [&](std::ostream& o) { o << loss_svg(epochs); });
  write_file(dir / "lambda_heatmap.svg",
             [&](std::ostream& o) { o << lambda_heatmap_svg(iterations); });
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream& log) {
  RunOutcome outcome;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  outcome.run_dir = dir.string();

  const fs::path manifest = dir / "manifest.txt";
  write_file(manifest, [&](std::ostream& o) {
    o << "# slimtrain run manifest\n"
      << "manifest.version=" << SLIMTRAIN_VERSION << '\n'
      << "manifest.seed=" << config.train.seed << '\n'
      << "manifest.started=" << timestamp() << '\n'
      << "manifest.outputs=iterations.csv,epochs.csv,sgcv.csv,"
         "checkpoint_best,checkpoint_final\n"
      << to_config_text(config);
  });

  const auto [train_set, validation] = make_datasets(config.data);
  log << "[" << config.name << "] " << to_string(config.train.mode) << ": "
      << train_set.size() << " training / " << validation.size()
      << " validation samples, " << config.train.epochs << " epochs\n";

  outcome.result = train(config.train, train_set, validation);
  const TrainResult& r = outcome.result;

  write_file(dir / "iterations.csv",
             [&](std::ostream& o) { write_iterations_csv(o, r.iterations); });
  write_file(dir / "epochs.csv",
             [&](std::ostream& o) { write_epochs_csv(o, r.epochs); });
  write_file(dir / "sgcv.csv",
             [&](std::ostream& o) { write_sgcv_csv(o, r.sgcv); });
  const std::string mode = to_string(config.train.mode);
  write_checkpoint((dir / "checkpoint_best").string(),
                   {mode, r.best_epoch, r.best_model});
  write_checkpoint((dir / "checkpoint_final").string(),
                   {mode,
                    r.epochs.empty() ? 0 : r.epochs.back().epoch,
                    r.final_model});
  if (config.plots) write_plots(dir, r.epochs, r.iterations);
  for (const auto& w : r.warnings) log << "warning: " << w << '\n';

  std::ofstream(manifest, std::ios::app)
      << "manifest.finished=" << timestamp() << '\n'
      << "manifest.status=" << (r.diverged ? "diverged" : "ok") << '\n';

  if (r.diverged) {
    log << "error: " << r.failure << '\n';
    outcome.status = kExitNumerical;
  } else if (!r.epochs.empty()) {
    log << "[" << config.name << "] final train loss "
        << format_double(r.epochs.back().train_loss) << ", best validation "
        << format_double(r.best_val_loss) << " (epoch " << r.best_epoch
        << ")\n";
  }
  return outcome;
}

int run_command(const std::string& config_path, std::ostream& log,
                const std::string& output_override) {
  ExperimentConfig config;
  try {
    config = parse_experiment(KeyValueConfig::load(config_path));
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (!output_override.empty()) config.output_dir = output_override;
  try {
    return run_experiment(config, log).status;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int sweep_command(const std::string& config_path, std::ostream& log) {
  KeyValueConfig base;
  ExperimentConfig base_config;
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  try {
    base = KeyValueConfig::load(config_path);
    for (const auto& [key, entry] : base.entries()) {
      if (key.rfind("sweep.", 0) != 0) continue;
      const std::string target = key.substr(6);
      std::vector<std::string> values;
      for (auto& v : split_csv_line(entry.value)) {
        const auto b = v.find_first_not_of(' ');
        const auto e = v.find_last_not_of(' ');
        if (b != std::string::npos) values.push_back(v.substr(b, e - b + 1));
      }
      if (target.empty() || values.empty()) {
        throw ConfigError(key, entry.line, "empty sweep grid");
      }
      grid.emplace_back(target, std::move(values));
    }
    if (grid.empty()) {
      throw ConfigError("sweep.*", 0, "no sweep grid given");
    }
    for (const auto& [key, _] : grid) base.erase(key);
    for (const auto& [key, _] : grid) base.erase("sweep." + key);
    // the base must parse once its swept keys get values
    KeyValueConfig probe = base;
    for (const auto& [key, values] : grid) probe.set(key, values.front());
    base_config = parse_experiment(probe);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path root(base_config.output_dir);
  fs::create_directories(root);
  std::ofstream summary(root / "summary.csv");
  summary << "cell";
  for (const auto& [key, _] : grid) summary << ',' << key;
  summary << ",status,final_train_loss,best_val_loss,best_epoch,run_dir\n";

  std::size_t cells = 1;
  for (const auto& [_, values] : grid) cells *= values.size();
  int worst = kExitOk;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    KeyValueConfig kv = base;
    std::vector<std::string> chosen;
    std::size_t rem = cell;
    // last key varies fastest
    std::vector<std::size_t> pick(grid.size());
    for (std::size_t g = grid.size(); g-- > 0;) {
      pick[g] = rem % grid[g].second.size();
      rem /= grid[g].second.size();
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      kv.set(grid[g].first, grid[g].second[pick[g]]);
      chosen.push_back(grid[g].second[pick[g]]);
    }
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu", cell);
    kv.set("run.name", base_config.name + "_" + name);
    kv.set("run.output_dir", (root / name).string());

    int status = kExitOk;
    RunOutcome outcome;
    try {
      outcome = run_experiment(parse_experiment(kv), log);
      status = outcome.status;
    } catch (const ConfigError& e) {
      log << "config error in " << name << ": " << e.what() << '\n';
      status = kExitConfig;
    } catch (const std::exception& e) {
      log << "error in " << name << ": " << e.what() << '\n';
      status = kExitNumerical;
    }
    worst = std::max(worst, status);

    summary << cell;
    for (const auto& v : chosen) summary << ',' << v;
    const auto& ep = outcome.result.epochs;
    summary << ',' << (status == kExitOk ? "ok" : "failed") << ','
            << (ep.empty() ? std::string() : format_double(ep.back().train_loss))
            << ','
            << (outcome.result.best_epoch > 0
                    ? format_double(outcome.result.best_val_loss)
                    : std::string())
            << ',' << outcome.result.best_epoch << ',' << (root / name).string()
            << '\n';
    summary.flush();
  }
  log << "sweep: " << cells << " cells, summary in "
      << (root / "summary.csv").string() << '\n';
  return worst;
}

Fig1Result run_fig1(const Fig1Options& opt) {
  const Dataset data = make_peaks_dataset(opt.grid_side * opt.grid_side, -3.0,
                                          3.0, Sampling::Grid, opt.seed);
  const auto features = init_params<double>(8, 8, 2, 5.0, derive_seed(opt.seed, 5));
  const Eigen::MatrixXd Z =
      augment_features(resnet_forward(features, data.inputs).output());
  const Eigen::Index n = data.size();
  const Eigen::Index n_feat = Z.rows();

  // reference Tikhonov solution from the augmented stack [A; sqrt(lambda) I]
  Eigen::MatrixXd stacked(n + n_feat, n_feat);
  stacked << Z.transpose(),
      std::sqrt(opt.lambda) * Eigen::MatrixXd::Identity(n_feat, n_feat);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + n_feat);
  rhs.head(n) = data.targets.row(0).transpose();
  const Eigen::VectorXd w_hat = stacked.colPivHouseholderQr().solve(rhs);

  const auto batches = shuffle_partition(n, opt.batch_size,
                                         derive_seed(opt.seed, 1001));
  const double lambda_k = opt.lambda / static_cast<double>(batches.size());

  MemoryBuffer memory(batches.size());
  RegHistory history;
  Eigen::MatrixXd W_stik = Eigen::MatrixXd::Zero(1, n_feat);
  Eigen::MatrixXd W_adam = Eigen::MatrixXd::Zero(1, n_feat);
  Eigen::VectorXd w_adam = W_adam.reshaped();
  AdamState<double> adam(n_feat);

  Fig1Result out;
  const double ref = w_hat.norm();
  for (std::size_t k = 0; k < batches.size(); ++k) {
    const Eigen::MatrixXd Zk = Z(Eigen::all, batches[k]);
    const Eigen::MatrixXd Ck = data.targets(Eigen::all, batches[k]);
    FeatureBatch current{Zk, Ck, 0};
    W_stik = slimtik_step(W_stik, memory, current, history, lambda_k);
    history.push(lambda_k);
    memory.push(std::move(current));

    const Eigen::MatrixXd g = linear_weight_gradient<double>(
        w_adam.transpose(), Zk, Ck, opt.lambda / static_cast<double>(n));
    const Eigen::VectorXd gv = g.reshaped();
    adam_step(adam, w_adam, gv, opt.adam_lr);

    out.stik_error.push_back((W_stik.transpose() - w_hat).norm() / ref);
    out.adam_error.push_back((w_adam - w_hat).norm() / ref);
  }
  return out;
}

int demo_fig1_command(const Fig1Options& options, std::ostream& log) {
  Fig1Result r;
  try {
    r = run_fig1(options);
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const fs::path dir(options.output_dir);
  fs::create_directories(dir);
  write_file(dir / "fig1.csv", [&](std::ostream& o) {
    o << "iter,stik_rel_err,adam_rel_err\n";
    for (std::size_t k = 0; k < r.stik_error.size(); ++k) {
      o << (k + 1) << ',' << format_double(r.stik_error[k]) << ','
        << format_double(r.adam_error[k]) << '\n';
    }
  });
  log << "sTik relative error after one epoch: "
      << format_double(r.stik_error.back())
      << "\nADAM relative error after one epoch: "
      << format_double(r.adam_error.back()) << '\n';
  return r.stik_error.back() <= 1e-10 ? kExitOk : kExitNumerical;
}

int plot_command(const std::string& run_dir, std::ostream& log) {
  const fs::path dir(run_dir);
  std::ifstream ep(dir / "epochs.csv");
  std::ifstream it(dir / "iterations.csv");
  if (!ep || !it) {
    log << "error: " << run_dir << " has no epochs.csv/iterations.csv\n";
    return kExitConfig;
  }
  write_plots(dir, read_epochs_csv(ep), read_iterations_csv(it));
  log << "wrote " << (dir / "loss.svg").string() << " and "
      << (dir / "lambda_heatmap.svg").string() << '\n';
  return kExitOk;
}

}  // namespace slimtrain

// slimtrain: experiment runner.
//
//   slimtrain run <config> [--out DIR]
//   slimtrain sweep <config>
//   slimtrain demo-fig1 [--lambda L] [--batch B] [--seed S] [--out DIR]
//   slimtrain plot <run-dir>

#include <iostream>

#include "CLI11.hpp"
#include "slimtrain/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"slimTrain: separable DNN training with slimTik and sGCV"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "train one configuration");
  run->add_option("config", config_path, "key=value config file")->required();
  run->add_option("--out", out_dir, "override run.output_dir");

  auto* sweep = app.add_subcommand("sweep", "run a Cartesian parameter grid");
  sweep->add_option("config", config_path, "config with sweep.* grids")
      ->required();

  slimtrain::Fig1Options fig1;
  auto* demo = app.add_subcommand(
      "demo-fig1", "sTik vs ADAM on a fixed-feature linear problem");
  demo->add_option("--lambda", fig1.lambda, "Tikhonov parameter")
      ->capture_default_str();
  demo->add_option("--batch", fig1.batch_size, "mini-batch size")
      ->capture_default_str();
  demo->add_option("--grid", fig1.grid_side, "grid points per axis")
      ->capture_default_str();
  demo->add_option("--adam-lr", fig1.adam_lr, "ADAM learning rate")
      ->capture_default_str();
  demo->add_option("--seed", fig1.seed, "random seed")->capture_default_str();
  demo->add_option("--out", fig1.output_dir, "output directory")
      ->capture_default_str();

  std::string run_dir;
  auto* plot = app.add_subcommand("plot", "render SVG plots of a run");
  plot->add_option("run-dir", run_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : slimtrain::kExitConfig;
  }

  try {
    if (*run) return slimtrain::run_command(config_path, std::cerr, out_dir);
    if (*sweep) return slimtrain::sweep_command(config_path, std::cerr);
    if (*demo) return slimtrain::demo_fig1_command(fig1, std::cerr);
    if (*plot) return slimtrain::plot_command(run_dir, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return slimtrain::kExitNumerical;
  }
  return slimtrain::kExitConfig;
}

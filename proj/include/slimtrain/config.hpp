#pragma once

// Flat key=value experiment files with dotted keys, e.g.
//
//   # peaks, batch 5 with memory
//   data.kind=peaks
//   train.batch_size=5
//   train.memory_depth=10
//
// Blank lines and lines starting with '#' are ignored. Keys under
// `manifest.` are metadata and skipped by the experiment parser; keys under
// `sweep.` hold comma-separated value grids for the sweep command.

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "slimtrain/data.hpp"
#include "slimtrain/trainer.hpp"

namespace slimtrain {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry* find(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void erase(const std::string& key) { entries_.erase(key); }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  std::map<std::string, Entry> entries_;
};

struct DataConfig {
  std::string kind = "peaks";  // peaks | teacher
  Eigen::Index n_samples = 2000;
  Sampling sampling = Sampling::Uniform;
  double domain_lo = -3.0;
  double domain_hi = 3.0;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  TeacherSpec teacher;  // n_samples and seed are taken from above
};

struct ExperimentConfig {
  std::string name = "run";
  std::string output_dir = "runs/run";
  bool plots = false;
  DataConfig data;
  TrainConfig train;
};

/// Throws ConfigError naming the offending field (and line when known).
ExperimentConfig parse_experiment(const KeyValueConfig& kv);

/// Canonical key=value text; parse_experiment(parse(echo)) reproduces the
/// same configuration.
std::string to_config_text(const ExperimentConfig& config);

/// Builds (train, validation) from the data section.
std::pair<Dataset, Dataset> make_datasets(const DataConfig& config);

std::string to_string(TrainMode mode);
std::string to_string(OptimizerKind kind);
std::string format_double(double v);

}  // namespace slimtrain

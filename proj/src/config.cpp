#include "slimtrain/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace slimtrain {

ConfigError::ConfigError(const std::string& field, int line,
                         const std::string& what)
    : std::runtime_error(
          (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
          field + ": " + what),
      field_(field),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig kv;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(s, line, "expected key=value");
    }
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError("(empty key)", line, "missing key");
    if (kv.entries_.count(key)) {
      throw ConfigError(key, line, "duplicate key");
    }
    kv.entries_[key] = Entry{trim(s.substr(eq + 1)), line};
  }
  return kv;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse(in);
}

const KeyValueConfig::Entry* KeyValueConfig::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  auto& e = entries_[key];
  e.value = value;
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::SlimTrain: return "slimtrain";
    case TrainMode::CoupledAdam: return "coupled_adam";
    case TrainMode::SlimTrainFixedLambda: return "slimtrain_fixed_lambda";
  }
  return "?";
}

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

class Reader {
 public:
  explicit Reader(const KeyValueConfig& kv) : kv_(kv) {}

  const KeyValueConfig::Entry* get(const std::string& key, bool required) {
    used_.insert(key);
    const auto* e = kv_.find(key);
    if (!e && required) throw ConfigError(key, 0, "missing required field");
    return e;
  }

  void str(const std::string& key, std::string& out, bool required = false) {
    if (const auto* e = get(key, required)) {
      if (e->value.empty()) throw ConfigError(key, e->line, "empty value");
      out = e->value;
    }
  }

  void real(const std::string& key, double& out, bool required = false) {
    if (const auto* e = get(key, required)) {
      const char* b = e->value.c_str();
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(b, &end);
      if (e->value.empty() || *end != '\0' || errno == ERANGE ||
          !std::isfinite(v)) {
        throw ConfigError(key, e->line, "not a finite number: '" + e->value + "'");
      }
      out = v;
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, bool required = false) {
    if (const auto* e = get(key, required)) {
      Int v{};
      const char* b = e->value.data();
      const char* end = b + e->value.size();
      const auto [p, ec] = std::from_chars(b, end, v);
      if (e->value.empty() || ec != std::errc() || p != end) {
        throw ConfigError(key, e->line, "not an integer: '" + e->value + "'");
      }
      out = v;
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const auto* e = get(key, false)) {
      if (e->value == "true" || e->value == "1") {
        out = true;
      } else if (e->value == "false" || e->value == "0") {
        out = false;
      } else {
        throw ConfigError(key, e->line, "expected true or false");
      }
    }
  }

  template <typename Enum>
  void choice(const std::string& key, Enum& out,
              const std::map<std::string, Enum>& options,
              bool required = false) {
    if (const auto* e = get(key, required)) {
      const auto it = options.find(e->value);
      if (it == options.end()) {
        std::string allowed;
        for (const auto& [name, _] : options) {
          allowed += (allowed.empty() ? "" : "|") + name;
        }
        throw ConfigError(key, e->line,
                          "unknown value '" + e->value + "' (" + allowed + ")");
      }
      out = it->second;
    }
  }

  void reject_unknown() const {
    for (const auto& [key, entry] : kv_.entries()) {
      if (key.rfind("manifest.", 0) == 0 || key.rfind("sweep.", 0) == 0) {
        continue;
      }
      if (!used_.count(key)) throw ConfigError(key, entry.line, "unknown key");
    }
  }

 private:
  const KeyValueConfig& kv_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig parse_experiment(const KeyValueConfig& kv) {
  Reader r(kv);
  ExperimentConfig c;
  r.str("run.name", c.name);
  r.str("run.output_dir", c.output_dir);
  r.boolean("run.plots", c.plots);

  DataConfig& d = c.data;
  r.str("data.kind", d.kind, true);
  if (d.kind != "peaks" && d.kind != "teacher") {
    throw ConfigError("data.kind", kv.find("data.kind")->line,
                      "unknown value '" + d.kind + "' (peaks|teacher)");
  }
  r.integer("data.n_samples", d.n_samples);
  r.choice("data.sampling", d.sampling,
           {{"uniform", Sampling::Uniform}, {"grid", Sampling::Grid}});
  r.real("data.domain_lo", d.domain_lo);
  r.real("data.domain_hi", d.domain_hi);
  r.integer("data.seed", d.seed);
  r.real("data.val_fraction", d.val_fraction);
  r.integer("data.n_in", d.teacher.n_in);
  r.integer("data.n_target", d.teacher.n_target);
  r.integer("data.teacher_width", d.teacher.teacher_width);
  r.integer("data.teacher_depth", d.teacher.teacher_depth);
  r.real("data.teacher_final_time", d.teacher.teacher_final_time);
  r.real("data.noise_std", d.teacher.noise_std);
  d.teacher.n_samples = d.n_samples;
  d.teacher.seed = d.seed;

  TrainConfig& t = c.train;
  r.integer("net.width", t.net.width);
  r.integer("net.depth", t.net.depth);
  r.real("net.final_time", t.net.final_time);
  r.integer("train.batch_size", t.batch_size, true);
  r.integer("train.memory_depth", t.memory_depth);
  r.real("train.learning_rate", t.learning_rate);
  r.real("train.alpha", t.alpha);
  r.real("train.lambda0", t.lambda0);
  r.integer("train.epochs", t.epochs, true);
  r.integer("train.seed", t.seed);
  r.choice("train.optimizer", t.optimizer,
           {{"adam", OptimizerKind::Adam}, {"sgd", OptimizerKind::Sgd}});
  r.choice("train.mode", t.mode,
           {{"slimtrain", TrainMode::SlimTrain},
            {"coupled_adam", TrainMode::CoupledAdam},
            {"slimtrain_fixed_lambda", TrainMode::SlimTrainFixedLambda}},
           true);
  r.choice("train.fixed_scaling", t.fixed_scaling,
           {{"per_epoch", FixedLambdaScaling::PerEpoch},
            {"per_iteration", FixedLambdaScaling::PerIteration}});
  r.boolean("train.record_wallclock", t.record_wallclock);
  r.real("sgcv.grid_lo", t.sgcv.grid_lo);
  r.real("sgcv.grid_hi", t.sgcv.grid_hi);
  r.integer("sgcv.grid_points", t.sgcv.grid_points);
  r.integer("sgcv.refine_iters", t.sgcv.refine_iters);
  r.boolean("sgcv.signed_grid", t.sgcv.signed_grid);
  r.boolean("sgcv.count_targets", t.sgcv.count_targets);
  r.reject_unknown();

  if (d.n_samples < 1) throw ConfigError("data.n_samples", 0, "must be >= 1");
  if (!(d.val_fraction >= 0.0 && d.val_fraction < 1.0)) {
    throw ConfigError("data.val_fraction", 0, "must lie in [0, 1)");
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train", 0, e.what());
  }
  return c;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream o;
  auto kv = [&o](const std::string& k, const std::string& v) {
    o << k << '=' << v << '\n';
  };
  const auto num = [](double v) { return format_double(v); };
  kv("run.name", c.name);
  kv("run.output_dir", c.output_dir);
  kv("run.plots", c.plots ? "true" : "false");
  kv("data.kind", c.data.kind);
  kv("data.n_samples", std::to_string(c.data.n_samples));
  kv("data.sampling", c.data.sampling == Sampling::Grid ? "grid" : "uniform");
  kv("data.domain_lo", num(c.data.domain_lo));
  kv("data.domain_hi", num(c.data.domain_hi));
  kv("data.seed", std::to_string(c.data.seed));
  kv("data.val_fraction", num(c.data.val_fraction));
  kv("data.n_in", std::to_string(c.data.teacher.n_in));
  kv("data.n_target", std::to_string(c.data.teacher.n_target));
  kv("data.teacher_width", std::to_string(c.data.teacher.teacher_width));
  kv("data.teacher_depth", std::to_string(c.data.teacher.teacher_depth));
  kv("data.teacher_final_time", num(c.data.teacher.teacher_final_time));
  kv("data.noise_std", num(c.data.teacher.noise_std));
  const TrainConfig& t = c.train;
  kv("net.width", std::to_string(t.net.width));
  kv("net.depth", std::to_string(t.net.depth));
  kv("net.final_time", num(t.net.final_time));
  kv("train.batch_size", std::to_string(t.batch_size));
  kv("train.memory_depth", std::to_string(t.memory_depth));
  kv("train.learning_rate", num(t.learning_rate));
  kv("train.alpha", num(t.alpha));
  kv("train.lambda0", num(t.lambda0));
  kv("train.epochs", std::to_string(t.epochs));
  kv("train.seed", std::to_string(t.seed));
  kv("train.optimizer", to_string(t.optimizer));
  kv("train.mode", to_string(t.mode));
  kv("train.fixed_scaling", t.fixed_scaling == FixedLambdaScaling::PerEpoch
                                 ? "per_epoch"
                                 : "per_iteration");
  kv("train.record_wallclock", t.record_wallclock ? "true" : "false");
  kv("sgcv.grid_lo", num(t.sgcv.grid_lo));
  kv("sgcv.grid_hi", num(t.sgcv.grid_hi));
  kv("sgcv.grid_points", std::to_string(t.sgcv.grid_points));
  kv("sgcv.refine_iters", std::to_string(t.sgcv.refine_iters));
  kv("sgcv.signed_grid", t.sgcv.signed_grid ? "true" : "false");
  kv("sgcv.count_targets", t.sgcv.count_targets ? "true" : "false");
  return o.str();
}

std::pair<Dataset, Dataset> make_datasets(const DataConfig& config) {
  Dataset all;
  if (config.kind == "peaks") {
    all = make_peaks_dataset(config.n_samples, config.domain_lo,
                             config.domain_hi, config.sampling, config.seed);
  } else if (config.kind == "teacher") {
    TeacherSpec spec = config.teacher;
    spec.n_samples = config.n_samples;
    spec.seed = config.seed;
    all = make_teacher_dataset(spec);
  } else {
    throw ConfigError("data.kind", 0, "unknown dataset generator");
  }
  return split_validation(all, config.val_fraction,
                          derive_seed(config.seed, 77));
}

}  // namespace slimtrain

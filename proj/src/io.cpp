#include "slimtrain/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "slimtrain/config.hpp"

namespace slimtrain {

namespace {

std::string field(double v) {
  return std::isnan(v) ? std::string() : format_double(v);
}

double parse_field(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

void write_iterations_csv(std::ostream& out,
                          const std::vector<IterationRecord>& records) {
  out << "epoch,iter,lambda_k,lambda_sum,batch_loss,grad_norm_theta,"
         "wallclock_ms\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << r.iteration << ',' << field(r.lambda_k) << ','
        << field(r.lambda_sum) << ',' << field(r.batch_loss) << ','
        << field(r.grad_norm_theta) << ',' << field(r.wallclock_ms) << '\n';
  }
}

void write_epochs_csv(std::ostream& out,
                      const std::vector<EpochRecord>& records) {
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << field(r.train_loss) << ',' << field(r.val_loss)
        << '\n';
  }
}

void write_sgcv_csv(std::ostream& out, const std::vector<SgcvRecord>& records) {
  out << "epoch,iter,lambda_k,grid_argmin,grid_lo,grid_hi,sgcv_value,"
         "fallback\n";
  for (const auto& r : records) {
    out << r.epoch << ',' << r.iteration << ',' << field(r.lambda_k) << ','
        << field(r.grid_argmin) << ',' << field(r.grid_lo) << ','
        << field(r.grid_hi) << ',' << field(r.value) << ','
        << (r.fallback ? 1 : 0) << '\n';
  }
}

std::vector<IterationRecord> read_iterations_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("iterations.csv: bad row");
    IterationRecord r;
    r.epoch = std::stoi(f[0]);
    r.iteration = std::stol(f[1]);
    r.lambda_k = parse_field(f[2]);
    r.lambda_sum = parse_field(f[3]);
    r.batch_loss = parse_field(f[4]);
    r.grad_norm_theta = parse_field(f[5]);
    r.wallclock_ms = parse_field(f[6]);
    out.push_back(r);
  }
  return out;
}

std::vector<EpochRecord> read_epochs_csv(std::istream& in) {
  std::string line;
  std::getline(in, line);
  std::vector<EpochRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw std::runtime_error("epochs.csv: bad row");
    out.push_back({std::stoi(f[0]), parse_field(f[1]), parse_field(f[2])});
  }
  return out;
}

namespace {

void write_le_doubles(std::ostream& out, const double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    auto bits = std::bit_cast<std::uint64_t>(data[i]);
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

void read_le_doubles(std::istream& in, double* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
      throw std::runtime_error("checkpoint: truncated payload");
    }
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[b];
    data[i] = std::bit_cast<double>(bits);
  }
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  const auto& th = cp.model.theta;
  const Eigen::VectorXd theta = flatten(th);
  out << "SLIMTRAIN-CHECKPOINT 1\n"
      << "mode=" << cp.mode << '\n'
      << "n_in=" << th.n_in() << '\n'
      << "width=" << th.width() << '\n'
      << "depth=" << th.depth() << '\n'
      << "step_h=" << format_double(th.step_h) << '\n'
      << "n_target=" << cp.model.W.rows() << '\n'
      << "epoch=" << cp.epoch << '\n'
      << "theta_count=" << theta.size() << '\n'
      << "w_count=" << cp.model.W.size() << '\n'
      << "END\n";
  write_le_doubles(out, theta.data(), static_cast<std::size_t>(theta.size()));
  write_le_doubles(out, cp.model.W.data(),
                   static_cast<std::size_t>(cp.model.W.size()));
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "SLIMTRAIN-CHECKPOINT 1") {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::map<std::string, std::string> header;
  while (std::getline(in, line) && line != "END") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("checkpoint: bad header");
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (line != "END") throw std::runtime_error("checkpoint: missing END");
  auto get = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) {
      throw std::runtime_error(std::string("checkpoint: missing ") + key);
    }
    return it->second;
  };
  Checkpoint cp;
  cp.mode = get("mode");
  cp.epoch = std::stoi(get("epoch"));
  const long n_in = std::stol(get("n_in"));
  const long width = std::stol(get("width"));
  const long depth = std::stol(get("depth"));
  const long n_target = std::stol(get("n_target"));
  auto shape = make_params_shape<double>(width, depth, n_in, 1.0);
  shape.step_h = std::stod(get("step_h"));
  if (std::stol(get("theta_count")) != shape.size() ||
      std::stol(get("w_count")) != n_target * (width + 1)) {
    throw std::runtime_error("checkpoint: inconsistent sizes");
  }
  Eigen::VectorXd theta(shape.size());
  read_le_doubles(in, theta.data(), static_cast<std::size_t>(theta.size()));
  cp.model.theta = unflatten(shape, theta);
  cp.model.W.resize(n_target, width + 1);
  read_le_doubles(in, cp.model.W.data(),
                  static_cast<std::size_t>(cp.model.W.size()));
  return cp;
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 50.0;

std::string rgb(double t) {
  // dark blue -> teal -> yellow
  t = std::clamp(t, 0.0, 1.0);
  const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  const double s = t * 2.0;
  const int i = std::min(1, static_cast<int>(s));
  const double f = s - i;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
                static_cast<int>(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
                static_cast<int>(stops[i][2] + f * (stops[i + 1][2] - stops[i][2])));
  return buf;
}

}  // namespace

std::string loss_svg(const std::vector<EpochRecord>& epochs) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
    << "\" height=\"" << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : epochs) {
    for (double v : {e.train_loss, e.val_loss}) {
      if (std::isfinite(v) && v > 0) {
        lo = std::min(lo, std::log10(v));
        hi = std::max(hi, std::log10(v));
      }
    }
  }
  if (epochs.empty() || !std::isfinite(lo)) {
    o << "</svg>\n";
    return o.str();
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const double n = static_cast<double>(std::max<std::size_t>(epochs.size(), 2) - 1);
  auto x = [&](std::size_t i) {
    return kMargin + (kWidth - 2 * kMargin) * static_cast<double>(i) / n;
  };
  auto y = [&](double v) {
    return kHeight - kMargin - (kHeight - 2 * kMargin) * (std::log10(v) - lo) / (hi - lo);
  };
  o << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
    << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
    << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  auto series = [&](auto get, const char* color, const char* label, double ly) {
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < epochs.size(); ++i) {
      const double v = get(epochs[i]);
      if (std::isfinite(v) && v > 0) o << x(i) << ',' << y(v) << ' ';
    }
    o << "\"/>\n<text x=\"" << kWidth - 160 << "\" y=\"" << ly << "\" fill=\""
      << color << "\" font-size=\"12\">" << label << "</text>\n";
  };
  series([](const EpochRecord& e) { return e.train_loss; }, "#1f77b4",
         "train loss", 20);
  series([](const EpochRecord& e) { return e.val_loss; }, "#ff7f0e",
         "validation loss", 36);
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
    << "\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n"
    << "<text x=\"5\" y=\"" << kMargin - 10 << "\" font-size=\"12\">log10 loss ["
    << format_double(lo) << ", " << format_double(hi) << "]</text>\n"
    << "</svg>\n";
  return o.str();
}

std::string lambda_heatmap_svg(const std::vector<IterationRecord>& records) {
  std::map<int, std::vector<double>> by_epoch;
  for (const auto& r : records) {
    if (std::isfinite(r.lambda_k) && r.lambda_k > 0) {
      by_epoch[r.epoch].push_back(std::log10(r.lambda_k));
    }
  }
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
    << "\" height=\"" << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (by_epoch.empty()) {
    o << "</svg>\n";
    return o.str();
  }
  std::size_t per_epoch = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [_, v] : by_epoch) {
    per_epoch = std::max(per_epoch, v.size());
    for (double l : v) {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;
  // average consecutive iterations so the image stays small
  const std::size_t rows = std::min<std::size_t>(per_epoch, 200);
  const double cw = (kWidth - 2 * kMargin) / static_cast<double>(by_epoch.size());
  const double ch = (kHeight - 2 * kMargin) / static_cast<double>(rows);
  std::size_t col = 0;
  for (const auto& [_, v] : by_epoch) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t b = r * v.size() / rows;
      const std::size_t e = std::max(b + 1, (r + 1) * v.size() / rows);
      if (b >= v.size()) break;
      double s = 0;
      for (std::size_t i = b; i < e && i < v.size(); ++i) s += v[i];
      const double mean = s / static_cast<double>(std::min(e, v.size()) - b);
      o << "<rect x=\"" << kMargin + cw * col << "\" y=\"" << kMargin + ch * r
        << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
        << rgb((mean - lo) / (hi - lo)) << "\"/>\n";
    }
    ++col;
  }
  o << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
    << "\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n"
    << "<text x=\"5\" y=\"" << kMargin - 10
    << "\" font-size=\"12\">log10 Lambda_k per iteration, range ["
    << format_double(lo) << ", " << format_double(hi) << "]</text>\n"
    << "</svg>\n";
  return o.str();
}

}  // namespace slimtrain

#pragma once

// Run records: tables of already-formatted cells, the manifest, and the
// CSV / JSON / SVG writers.

#include "nhq/config.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nhq {

namespace fs = std::filesystem;

/// Cells are stored as text so a table prints identically every time.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& c) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == c) return k;
    throw std::out_of_range("table " + name + " has no column " + c);
  }

  std::vector<double> doubles(const std::string& c) const {
    std::size_t k = column(c);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(std::stod(r[k]));
    return out;
  }

  friend bool operator==(const Table&, const Table&) = default;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Manifest {
  Json config;
  std::string config_hash;
  std::string code_version = kCodeVersion;
  std::string started, finished;
  int digits = 0, safety_margin = 0;
  std::string status = "pending";  // ok | failed
  std::optional<std::string> failure_time;
  std::string message;
  long steps = 0;
  std::string max_orthonormality_defect = "0";
  std::string max_projector_defect = "0";
  double wall_seconds = 0;

  Json to_json() const {
    Json j{{"config", config},
           {"config_hash", config_hash},
           {"code_version", code_version},
           {"started", started},
           {"finished", finished},
           {"precision", {{"digits", digits}, {"safety_margin", safety_margin}}},
           {"status", status},
           {"message", message},
           {"steps", steps},
           {"max_orthonormality_defect", max_orthonormality_defect},
           {"max_projector_defect", max_projector_defect},
           {"wall_seconds", wall_seconds}};
    j["failure_time"] = failure_time ? Json(*failure_time) : Json(nullptr);
    return j;
  }

  static Manifest from_json(const Json& j) {
    Manifest m;
    m.config = j.at("config");
    m.config_hash = j.at("config_hash").get<std::string>();
    m.code_version = j.at("code_version").get<std::string>();
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.digits = j.at("precision").at("digits").get<int>();
    m.safety_margin = j.at("precision").at("safety_margin").get<int>();
    m.status = j.at("status").get<std::string>();
    m.message = j.value("message", "");
    m.steps = j.value("steps", 0L);
    m.max_orthonormality_defect = j.value("max_orthonormality_defect", "0");
    m.max_projector_defect = j.value("max_projector_defect", "0");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    if (j.contains("failure_time") && !j["failure_time"].is_null())
      m.failure_time = j["failure_time"].get<std::string>();
    return m;
  }
};

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Shortest round-trip text of a double; used for derived features.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  return shortest_decimal(v);
}

// ------------------------------------------------------------------- CSV

/// Header line "# key=value" per physical parameter, then the column row.
inline std::string csv_text(const Table& t, const std::vector<std::pair<std::string, std::string>>& echo) {
  std::ostringstream os;
  for (const auto& [k, v] : echo) os << "# " << k << "=" << v << "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
    os << "\n";
  }
  return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
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

inline Table parse_csv(const std::string& name, std::istream& in) {
  Table t;
  t.name = name;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) throw OutputError("csv " + name + ": ragged row");
    t.rows.push_back(std::move(cells));
  }
  if (!header) throw OutputError("csv " + name + ": missing header");
  return t;
}

inline Table load_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw OutputError("cannot read " + p.string());
  return parse_csv(p.stem().string(), in);
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw OutputError("cannot write " + p.string());
  out << text;
  out.close();
  if (!out) throw OutputError("write failed for " + p.string());
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw OutputError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ------------------------------------------------------------------- SVG

struct SvgSeries {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {
inline std::string svg_color(std::size_t k) {
  static const char* pal[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return pal[k % 10];
}

inline std::string fmt1(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}
}  // namespace detail

/// Simple multi-series line plot.
inline std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<SvgSeries>& series) {
  const double W = 640, H = 420, ml = 70, mr = 150, mt = 40, mb = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    double xv = x0 + k * (x1 - x0) / 4, yv = y0 + k * (y1 - y0) / 4;
    os << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << detail::fmt1(xv) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << detail::fmt1(yv) << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-size=\"13\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    os << "<polyline fill=\"none\" stroke=\"" << detail::svg_color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.y[i])) os << X(s.x[i]) << "," << Y(s.y[i]) << " ";
    os << "\"/>\n";
    double ly = mt + 14 + 18.0 * k;
    os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << detail::svg_color(k) << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - mr + 34 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Heat map of values[t][site], time running downwards.
inline std::string svg_heat_map(const std::string& title, const std::vector<double>& times,
                                const std::vector<std::vector<double>>& values, double vmin, double vmax) {
  const std::size_t T = times.size();
  const std::size_t L = T ? values.front().size() : 0;
  const double cell_w = 8, cell_h = std::max(1.0, 480.0 / std::max<std::size_t>(T, 1));
  const double ml = 50, mt = 40;
  const double W = ml + cell_w * L + 30, H = mt + cell_h * T + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  for (std::size_t k = 0; k < T; ++k)
    for (std::size_t j = 0; j < L; ++j) {
      double f = (values[k][j] - vmin) / (vmax - vmin);
      f = std::clamp(f, 0.0, 1.0);
      int r = static_cast<int>(255 * f), b = static_cast<int>(255 * (1 - f)), g = static_cast<int>(80 * (1 - std::abs(2 * f - 1)));
      os << "<rect x=\"" << ml + cell_w * j << "\" y=\"" << mt + cell_h * k << "\" width=\"" << cell_w
         << "\" height=\"" << cell_h << "\" fill=\"rgb(" << r << "," << g << "," << b << ")\"/>\n";
    }
  if (T) {
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\" font-size=\"11\">t="
       << detail::fmt1(times.front()) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << mt + cell_h * T << "\" text-anchor=\"end\" font-size=\"11\">t="
       << detail::fmt1(times.back()) << "</text>\n";
  }
  os << "<text x=\"" << ml + cell_w * L / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-size=\"13\">site j</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace nhq

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "chaining_lab/losses.hpp"

namespace chainlab {

// ---------------------------------------------------------------------------
// Deterministic emission: CSV with a provenance comment line, JSON, and
// minimal SVG line plots. All files are UTF-8 with LF endings.
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvBuilder {
 public:
  CsvBuilder& provenance(std::uint64_t config_hash, std::uint64_t seed,
                         const std::string& version) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# config_hash=%016llx seed=%llu version=%s\n",
                  static_cast<unsigned long long>(config_hash),
                  static_cast<unsigned long long>(seed), version.c_str());
    out_ += buf;
    return *this;
  }
  CsvBuilder& header(const std::vector<std::string>& cols) {
    append_row(cols);
    return *this;
  }
  CsvBuilder& row(const std::vector<std::string>& cells) {
    append_row(cells);
    return *this;
  }
  const std::string& str() const { return out_; }

 private:
  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ += ',';
      out_ += cells[i];
    }
    out_ += '\n';
  }
  std::string out_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

/// Envelope matrix as CSV: n rows, p columns, headers psi_1..psi_p.
inline std::string envelope_csv(const LipschitzEnvelope& envelope) {
  CsvBuilder csv;
  std::vector<std::string> head;
  for (Index j = 0; j < envelope.psi.cols(); ++j)
    head.push_back("psi_" + std::to_string(j + 1));
  csv.header(head);
  for (Index i = 0; i < envelope.psi.rows(); ++i) {
    std::vector<std::string> cells;
    for (Index j = 0; j < envelope.psi.cols(); ++j)
      cells.push_back(format_double(envelope.psi(i, j)));
    csv.row(cells);
  }
  return csv.str();
}

/// Minimal line plot: one polyline over the data range plus axis labels.
inline std::string svg_line_plot(const std::vector<double>& xs,
                                 const std::vector<double>& ys,
                                 const std::string& x_label,
                                 const std::string& y_label) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("svg_line_plot needs two same-length series");
  const double W = 640, H = 400, L = 64, B = 48, T = 16, R = 16;
  double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xmin = std::min(xmin, xs[i]);
    xmax = std::max(xmax, xs[i]);
    ymin = std::min(ymin, ys[i]);
    ymax = std::max(ymax, ys[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) {
    return L + (x - xmin) / (xmax - xmin) * (W - L - R);
  };
  auto py = [&](double y) {
    return H - B - (y - ymin) / (ymax - ymin) * (H - B - T);
  };
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "viewBox=\"0 0 640 400\">\n";
  svg += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                L, H - B, W - R, H - B);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n",
                L, T, L, H - B);
  svg += buf;
  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", px(xs[i]),
                  py(ys[i]));
    svg += buf;
  }
  svg += "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof(buf),
                  "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n",
                  px(xs[i]), py(ys[i]));
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"13\">%s</text>\n",
                (W - L) / 2, H - 12, x_label.c_str());
  svg += buf;
  std::snprintf(
      buf, sizeof(buf),
      "<text x=\"14\" y=\"%g\" font-size=\"13\" transform=\"rotate(-90 14 %g)\">%s</text>\n",
      (H - B) / 2, (H - B) / 2, y_label.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\">%s</text>\n", L,
                H - B + 16, format_double(xmin).c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">%s</text>\n",
                W - R, H - B + 16, format_double(xmax).c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\">%s</text>\n", 6.0,
                H - B, format_double(ymin).c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%g\" y=\"%g\" font-size=\"11\">%s</text>\n", 6.0,
                T + 10, format_double(ymax).c_str());
  svg += buf;
  svg += "</svg>\n";
  return svg;
}

}  // namespace chainlab

#include "ipmlab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ipmlab/errors.hpp"

namespace ipmlab::svg {

namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 780.0, kTop = 40.0, kBottom = 460.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void absorb(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // padded plotting interval; degenerate or empty data still yields a
  // usable nonzero span
  void finalize() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    const double pad = (hi > lo) ? 0.05 * (hi - lo) : std::max(1.0, std::abs(hi));
    lo -= pad;
    hi += pad;
  }
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
  for (const Series& s : series)
    if (s.x.size() != s.y.size())
      throw UsageError("series '" + s.label + "' has mismatched x and y lengths");

  Range rx, ry;
  for (const Series& s : series)
    for (size_t i = 0; i < s.x.size(); ++i)
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        rx.absorb(s.x[i]);
        ry.absorb(s.y[i]);
      }
  rx.finalize();
  ry.finalize();

  std::ofstream out(path);
  if (!out) throw UsageError("cannot open '" + path + "' for writing");

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << escape(title) << "</text>\n";

  // axes
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = rx.lo + (rx.hi - rx.lo) * i / ticks;
    const double px = rx.map(fx, kLeft, kRight);
    out << "<line x1=\"" << px << "\" y1=\"" << kBottom << "\" x2=\"" << px << "\" y2=\""
        << kBottom + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kBottom + 22
        << "\" text-anchor=\"middle\" font-size=\"12\">" << tick_label(fx) << "</text>\n";

    const double fy = ry.lo + (ry.hi - ry.lo) * i / ticks;
    const double py = ry.map(fy, kBottom, kTop);
    out << "<line x1=\"" << kLeft - 6 << "\" y1=\"" << py << "\" x2=\"" << kLeft << "\" y2=\""
        << py << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 10 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << tick_label(fy) << "</text>\n";
  }

  out << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kHeight - 8
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << (kTop + kBottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (kTop + kBottom) / 2 << ")\">" << escape(y_label) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::string points;
    auto flush = [&]() {
      if (points.empty()) return;
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
          << points << "\"/>\n";
      points.clear();
    };
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
        flush();  // break the line at gaps instead of drawing through them
        continue;
      }
      if (!points.empty()) points += ' ';
      points += tick_label(rx.map(s.x[i], kLeft, kRight));
      points += ',';
      points += tick_label(ry.map(s.y[i], kBottom, kTop));
    }
    flush();

    const double ly = kTop + 16 + 18 * double(si);
    out << "<line x1=\"" << kRight - 150 << "\" y1=\"" << ly << "\" x2=\"" << kRight - 126
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kRight - 120 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
        << escape(s.label) << "</text>\n";
  }

  out << "</svg>\n";
  if (!out) throw UsageError("failed while writing '" + path + "'");
}

}  // namespace ipmlab::svg

#include "warpband/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "warpband/errors.hpp"

namespace warpband::svg {

namespace {

constexpr double kLeft = 70, kRight = 24, kTop = 44, kBottom = 58;

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string pxfmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> ticks(double lo, double hi, int target) {
  std::vector<double> out;
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return {lo};
  const double raw = (hi - lo) / std::max(target - 1, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step =
      mag * (norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0);
  double t = std::ceil(lo / step) * step;
  const double eps = step * 1e-9;
  for (; t <= hi + eps; t += step) out.push_back(std::abs(t) < eps ? 0.0 : t);
  return out;
}

Canvas::Canvas(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(x_max_ > x_min_)) x_max_ = x_min_ + 1.0;
  if (!(y_max_ > y_min_)) y_max_ = y_min_ + 1.0;
}

double Canvas::px(double x) const {
  return kLeft + (x - x_min_) / (x_max_ - x_min_) * (kWidth - kLeft - kRight);
}

double Canvas::py(double y) const {
  return kHeight - kBottom -
         (y - y_min_) / (y_max_ - y_min_) * (kHeight - kTop - kBottom);
}

void Canvas::rect(double x0, double y0, double x1, double y1,
                  const std::string& fill, double opacity) {
  const double ax = std::min(px(x0), px(x1));
  const double ay = std::min(py(y0), py(y1));
  const double w = std::abs(px(x1) - px(x0));
  const double h = std::abs(py(y1) - py(y0));
  body_.push_back("<rect x=\"" + pxfmt(ax) + "\" y=\"" + pxfmt(ay) +
                  "\" width=\"" + pxfmt(w) + "\" height=\"" + pxfmt(h) +
                  "\" fill=\"" + fill + "\" fill-opacity=\"" + fmt(opacity) +
                  "\" stroke=\"none\"/>");
}

void Canvas::line(double x0, double y0, double x1, double y1,
                  const std::string& stroke, double width, bool dashed) {
  body_.push_back("<line x1=\"" + pxfmt(px(x0)) + "\" y1=\"" + pxfmt(py(y0)) +
                  "\" x2=\"" + pxfmt(px(x1)) + "\" y2=\"" + pxfmt(py(y1)) +
                  "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) +
                  (dashed ? "\" stroke-dasharray=\"6 4" : "") + "\"/>");
}

void Canvas::polyline(const std::vector<std::array<double, 2>>& pts,
                      const std::string& stroke, double width, bool dashed,
                      bool closed) {
  if (pts.size() < 2) return;
  std::string d;
  for (const auto& p : pts) {
    if (!d.empty()) d += " ";
    d += pxfmt(px(p[0])) + "," + pxfmt(py(p[1]));
  }
  body_.push_back(std::string(closed ? "<polygon" : "<polyline") +
                  " points=\"" + d + "\" fill=\"none\" stroke=\"" + stroke +
                  "\" stroke-width=\"" + fmt(width) +
                  (dashed ? "\" stroke-dasharray=\"6 4" : "") +
                  "\" stroke-linejoin=\"round\"/>");
}

void Canvas::cross(double x, double y, const std::string& stroke,
                   double size_px) {
  const double cx = px(x), cy = py(y), r = size_px / 2.0;
  body_.push_back("<line x1=\"" + pxfmt(cx - r) + "\" y1=\"" + pxfmt(cy) +
                  "\" x2=\"" + pxfmt(cx + r) + "\" y2=\"" + pxfmt(cy) +
                  "\" stroke=\"" + stroke + "\" stroke-width=\"2\"/>");
  body_.push_back("<line x1=\"" + pxfmt(cx) + "\" y1=\"" + pxfmt(cy - r) +
                  "\" x2=\"" + pxfmt(cx) + "\" y2=\"" + pxfmt(cy + r) +
                  "\" stroke=\"" + stroke + "\" stroke-width=\"2\"/>");
}

void Canvas::annotation(const std::string& text) {
  const double cx = (kLeft + kWidth - kRight) / 2.0;
  const double cy = (kTop + kHeight - kBottom) / 2.0;
  body_.push_back("<text x=\"" + pxfmt(cx) + "\" y=\"" + pxfmt(cy) +
                  "\" text-anchor=\"middle\" font-size=\"15\" fill=\"#666\">" +
                  escape(text) + "</text>");
}

void Canvas::legend(
    const std::vector<std::pair<std::string, std::string>>& color_labels) {
  double y = kTop + 16;
  const double x = kWidth - kRight - 190;
  for (const auto& [color, label] : color_labels) {
    body_.push_back("<line x1=\"" + pxfmt(x) + "\" y1=\"" + pxfmt(y - 4) +
                    "\" x2=\"" + pxfmt(x + 26) + "\" y2=\"" + pxfmt(y - 4) +
                    "\" stroke=\"" + color + "\" stroke-width=\"3\"/>");
    body_.push_back("<text x=\"" + pxfmt(x + 32) + "\" y=\"" + pxfmt(y) +
                    "\" font-size=\"12\" fill=\"#333\">" + escape(label) +
                    "</text>");
    y += 18;
  }
}

std::string Canvas::render() const {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\" font-family=\"Helvetica, Arial, sans-serif\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";

  const double fx0 = kLeft, fx1 = kWidth - kRight;
  const double fy0 = kTop, fy1 = kHeight - kBottom;
  out << "<clipPath id=\"plot\"><rect x=\"" << fx0 << "\" y=\"" << fy0
      << "\" width=\"" << fx1 - fx0 << "\" height=\"" << fy1 - fy0
      << "\"/></clipPath>\n";

  out << "<g clip-path=\"url(#plot)\">\n";
  for (const auto& el : body_) out << el << "\n";
  out << "</g>\n";

  for (double t : ticks(x_min_, x_max_)) {
    const double x = px(t);
    out << "<line x1=\"" << pxfmt(x) << "\" y1=\"" << fy1 << "\" x2=\""
        << pxfmt(x) << "\" y2=\"" << fy1 + 6
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << pxfmt(x) << "\" y=\"" << fy1 + 20
        << "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#333\">"
        << fmt(t) << "</text>\n";
  }
  for (double t : ticks(y_min_, y_max_)) {
    const double y = py(t);
    out << "<line x1=\"" << fx0 - 6 << "\" y1=\"" << pxfmt(y) << "\" x2=\""
        << fx0 << "\" y2=\"" << pxfmt(y)
        << "\" stroke=\"#333\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << fx0 - 9 << "\" y=\"" << pxfmt(y + 4)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"#333\">" << fmt(t)
        << "</text>\n";
  }

  out << "<rect x=\"" << fx0 << "\" y=\"" << fy0 << "\" width=\""
      << fx1 - fx0 << "\" height=\"" << fy1 - fy0
      << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  if (!title_.empty())
    out << "<text x=\"" << kWidth / 2
        << "\" y=\"26\" text-anchor=\"middle\" font-size=\"16\" "
           "fill=\"#111\">"
        << escape(title_) << "</text>\n";
  if (!x_label_.empty())
    out << "<text x=\"" << (fx0 + fx1) / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-size=\"13\" fill=\"#111\">"
        << escape(x_label_) << "</text>\n";
  if (!y_label_.empty())
    out << "<text x=\"18\" y=\"" << (fy0 + fy1) / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" fill=\"#111\" "
           "transform=\"rotate(-90 18 "
        << (fy0 + fy1) / 2 << ")\">" << escape(y_label_) << "</text>\n";

  out << "</svg>\n";
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_histogram(const std::string& path, const Histogram& h) {
  if (h.values.empty()) {
    Canvas c(0, 1, 0, 1);
    c.set_title(h.title);
    c.annotation("no data");
    write_file(path, c.render());
    return;
  }
  double lo = *std::min_element(h.values.begin(), h.values.end());
  double hi = *std::max_element(h.values.begin(), h.values.end());
  if (!(hi > lo)) {
    const double pad = std::max(0.5, std::abs(lo) * 0.05);
    lo -= pad;
    hi += pad;
  }
  const int bins = std::max(1, h.bins);
  std::vector<int> counts(bins, 0);
  const double w = (hi - lo) / bins;
  for (double v : h.values) {
    int idx = static_cast<int>((v - lo) / w);
    idx = std::clamp(idx, 0, bins - 1);
    ++counts[idx];
  }
  const int peak = *std::max_element(counts.begin(), counts.end());

  Canvas c(lo, hi, 0, peak * 1.08);
  c.set_title(h.title);
  c.set_labels(h.x_label, "count");
  for (int b = 0; b < bins; ++b) {
    if (counts[b] == 0) continue;
    c.rect(lo + b * w, 0, lo + (b + 1) * w, counts[b], "#4878a8", 0.85);
  }
  c.line(h.q25, 0, h.q25, peak * 1.04, "#b03030", 1.4, true);
  c.line(h.q75, 0, h.q75, peak * 1.04, "#b03030", 1.4, true);
  c.line(h.median, 0, h.median, peak * 1.04, "#202020", 1.8);
  c.legend({{"#202020", "median " + fmt(h.median)},
            {"#b03030", "quartiles " + fmt(h.q25) + ", " + fmt(h.q75)}});
  write_file(path, c.render());
}

}  // namespace warpband::svg

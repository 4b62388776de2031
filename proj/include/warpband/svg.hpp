#pragma once

#include <array>
#include <string>
#include <vector>

namespace warpband::svg {

// Minimal SVG plot canvas: fixed 800x600 page, linear world-to-pixel
// mapping inside a margin frame, axes with round-number ticks. Everything
// is emitted as plain text, so outputs diff cleanly.
class Canvas {
 public:
  Canvas(double x_min, double x_max, double y_min, double y_max);

  void set_title(const std::string& t) { title_ = t; }
  void set_labels(const std::string& x, const std::string& y) {
    x_label_ = x;
    y_label_ = y;
  }

  // World-coordinate primitives.
  void rect(double x0, double y0, double x1, double y1,
            const std::string& fill, double opacity);
  void line(double x0, double y0, double x1, double y1,
            const std::string& stroke, double width, bool dashed = false);
  void polyline(const std::vector<std::array<double, 2>>& pts,
                const std::string& stroke, double width, bool dashed = false,
                bool closed = false);
  void cross(double x, double y, const std::string& stroke, double size_px);
  void annotation(const std::string& text);  // centered message
  void legend(const std::vector<std::pair<std::string, std::string>>&
                  color_labels);  // (css color, label)

  std::string render() const;  // full document with axes, ticks, labels

  static constexpr double kWidth = 800;
  static constexpr double kHeight = 600;

 private:
  double px(double x) const;
  double py(double y) const;

  double x_min_, x_max_, y_min_, y_max_;
  std::string title_, x_label_, y_label_;
  std::vector<std::string> body_;
};

// Vertical-bar histogram with quantile rule lines (median solid, quartiles
// dashed), written to `path`.
struct Histogram {
  std::vector<double> values;
  int bins = 30;
  double median = 0.0, q25 = 0.0, q75 = 0.0;
  std::string title, x_label;
};

void write_histogram(const std::string& path, const Histogram& h);

void write_file(const std::string& path, const std::string& content);

// Round-number tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 6);

std::string fmt(double v);  // %.6g

}  // namespace warpband::svg

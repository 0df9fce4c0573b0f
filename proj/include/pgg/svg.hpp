#pragma once

#include <string>
#include <vector>

namespace pgg {

// 256-step blue -> yellow ramp; v clamped to [0, 1].
std::string heat_color(double v);

// Minimal self-contained SVG builder for the report figures. All chart
// helpers draw into an (x, y, w, h) region of the document; values are
// expected on the [0, 1] scale used throughout the library.
class Svg {
 public:
  Svg(double width, double height, bool deterministic = false);

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none", double stroke_width = 0.0,
            double opacity = 1.0);
  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double width = 1.0,
            const std::string& dash = "");
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5);
  void polygon(const std::vector<std::pair<double, double>>& pts,
               const std::string& fill, double opacity = 0.3);
  void circle(double cx, double cy, double r, const std::string& fill);
  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& anchor = "start",
            const std::string& color = "#333333");
  void arrow(double x1, double y1, double x2, double y2,
             const std::string& stroke, double width = 1.5);

  // Per-participant rows x per-round columns, colored by the heat ramp.
  void heatmap(double x, double y, double w, double h,
               const std::vector<std::vector<double>>& rows,
               const std::string& title);

  // Center line with a shaded band between lo and hi; y axis fixed to [0, 1].
  void band_plot(double x, double y, double w, double h,
                 const std::vector<double>& center,
                 const std::vector<double>& lo, const std::vector<double>& hi,
                 const std::string& title, const std::string& color = "#2166ac");

  // Two-state transition diagram for a 2x2 row-stochastic matrix.
  void transition_diagram(double x, double y, double w, double h,
                          const std::vector<std::vector<double>>& lambda,
                          const std::string& title);

  // Scatter with optional criterion guide lines (pass NaN to omit).
  void scatter(double x, double y, double w, double h,
               const std::vector<double>& xs, const std::vector<double>& ys,
               double x_line, double y_line, const std::string& title,
               const std::string& x_label, const std::string& y_label);

  std::string str() const;
  void save(const std::string& path) const;

 private:
  double width_, height_;
  bool deterministic_;
  std::string body_;
};

}  // namespace pgg

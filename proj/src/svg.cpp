#include "pgg/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>
#include <stdexcept>

#include "pgg/csv.hpp"

namespace pgg {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int step = std::min(255, static_cast<int>(v * 256.0));
  const double t = step / 255.0;
  // Blue (#1f3b99) to yellow (#ffe135).
  const int r = static_cast<int>(std::lround(0x1f + t * (0xff - 0x1f)));
  const int g = static_cast<int>(std::lround(0x3b + t * (0xe1 - 0x3b)));
  const int b = static_cast<int>(std::lround(0x99 + t * (0x35 - 0x99)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

Svg::Svg(double width, double height, bool deterministic)
    : width_(width), height_(height), deterministic_(deterministic) {}

void Svg::rect(double x, double y, double w, double h, const std::string& fill,
               const std::string& stroke, double stroke_width, double opacity) {
  std::ostringstream ss;
  ss << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
     << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"";
  if (stroke != "none")
    ss << " stroke=\"" << stroke << "\" stroke-width=\"" << num(stroke_width)
       << "\"";
  if (opacity < 1.0) ss << " opacity=\"" << num(opacity) << "\"";
  ss << "/>\n";
  body_ += ss.str();
}

void Svg::line(double x1, double y1, double x2, double y2,
               const std::string& stroke, double width, const std::string& dash) {
  std::ostringstream ss;
  ss << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\""
     << num(x2) << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke
     << "\" stroke-width=\"" << num(width) << "\"";
  if (!dash.empty()) ss << " stroke-dasharray=\"" << dash << "\"";
  ss << "/>\n";
  body_ += ss.str();
}

void Svg::polyline(const std::vector<std::pair<double, double>>& pts,
                   const std::string& stroke, double width) {
  std::ostringstream ss;
  ss << "<polyline points=\"";
  for (const auto& [x, y] : pts) ss << num(x) << ',' << num(y) << ' ';
  ss << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
     << num(width) << "\"/>\n";
  body_ += ss.str();
}

void Svg::polygon(const std::vector<std::pair<double, double>>& pts,
                  const std::string& fill, double opacity) {
  std::ostringstream ss;
  ss << "<polygon points=\"";
  for (const auto& [x, y] : pts) ss << num(x) << ',' << num(y) << ' ';
  ss << "\" fill=\"" << fill << "\" opacity=\"" << num(opacity)
     << "\" stroke=\"none\"/>\n";
  body_ += ss.str();
}

void Svg::circle(double cx, double cy, double r, const std::string& fill) {
  std::ostringstream ss;
  ss << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
     << num(r) << "\" fill=\"" << fill << "\"/>\n";
  body_ += ss.str();
}

void Svg::text(double x, double y, const std::string& s, double size,
               const std::string& anchor, const std::string& color) {
  std::ostringstream ss;
  ss << "<text x=\"" << num(x) << "\" y=\"" << num(y)
     << "\" font-family=\"sans-serif\" font-size=\"" << num(size)
     << "\" text-anchor=\"" << anchor << "\" fill=\"" << color << "\">" << s
     << "</text>\n";
  body_ += ss.str();
}

void Svg::arrow(double x1, double y1, double x2, double y2,
                const std::string& stroke, double width) {
  line(x1, y1, x2, y2, stroke, width);
  const double angle = std::atan2(y2 - y1, x2 - x1);
  const double head = 6.0;
  std::vector<std::pair<double, double>> tip = {
      {x2, y2},
      {x2 - head * std::cos(angle - 0.4), y2 - head * std::sin(angle - 0.4)},
      {x2 - head * std::cos(angle + 0.4), y2 - head * std::sin(angle + 0.4)}};
  polygon(tip, stroke, 1.0);
}

void Svg::heatmap(double x, double y, double w, double h,
                  const std::vector<std::vector<double>>& rows,
                  const std::string& title) {
  if (rows.empty() || rows.front().empty())
    throw std::invalid_argument("heatmap: empty data");
  const double title_h = 16.0;
  const double ph = h - title_h;
  text(x, y + 12.0, title, 11.0, "start", "#111111");
  const double cw = w / static_cast<double>(rows.front().size());
  const double ch = ph / static_cast<double>(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      rect(x + c * cw, y + title_h + r * ch, cw + 0.05, ch + 0.05,
           heat_color(rows[r][c]));
  rect(x, y + title_h, w, ph, "none", "#666666", 0.5);
}

void Svg::band_plot(double x, double y, double w, double h,
                    const std::vector<double>& center,
                    const std::vector<double>& lo, const std::vector<double>& hi,
                    const std::string& title, const std::string& color) {
  if (center.empty() || center.size() != lo.size() || lo.size() != hi.size())
    throw std::invalid_argument("band_plot: series lengths disagree");
  const double title_h = 16.0;
  const double ph = h - title_h;
  text(x, y + 12.0, title, 11.0, "start", "#111111");
  const double top = y + title_h;
  auto px = [&](std::size_t t) {
    return center.size() == 1
               ? x + w / 2.0
               : x + w * static_cast<double>(t) /
                         static_cast<double>(center.size() - 1);
  };
  auto py = [&](double v) { return top + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  rect(x, top, w, ph, "none", "#666666", 0.5);
  line(x, py(0.5), x + w, py(0.5), "#bbbbbb", 0.5, "3,3");

  std::vector<std::pair<double, double>> band;
  for (std::size_t t = 0; t < lo.size(); ++t) band.push_back({px(t), py(hi[t])});
  for (std::size_t t = lo.size(); t-- > 0;) band.push_back({px(t), py(lo[t])});
  polygon(band, color, 0.25);

  std::vector<std::pair<double, double>> mid;
  for (std::size_t t = 0; t < center.size(); ++t) mid.push_back({px(t), py(center[t])});
  polyline(mid, color, 1.5);
}

void Svg::transition_diagram(double x, double y, double w, double h,
                             const std::vector<std::vector<double>>& lambda,
                             const std::string& title) {
  if (lambda.size() != 2 || lambda[0].size() != 2 || lambda[1].size() != 2)
    throw std::invalid_argument("transition_diagram: expects a 2x2 matrix");
  const double title_h = 16.0;
  text(x, y + 12.0, title, 11.0, "start", "#111111");
  const double cy = y + title_h + (h - title_h) / 2.0;
  const double r = std::min(18.0, (h - title_h) / 3.0);
  const double cx1 = x + w * 0.25, cx2 = x + w * 0.75;
  auto pct = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  circle(cx1, cy, r, "#2166ac");
  circle(cx2, cy, r, "#b2182b");
  text(cx1, cy + 4.0, "1", 11.0, "middle", "#ffffff");
  text(cx2, cy + 4.0, "2", 11.0, "middle", "#ffffff");
  arrow(cx1 + r, cy - 6.0, cx2 - r, cy - 6.0, "#444444", 1.2);
  arrow(cx2 - r, cy + 6.0, cx1 + r, cy + 6.0, "#444444", 1.2);
  text((cx1 + cx2) / 2.0, cy - 12.0, pct(lambda[0][1]), 9.0, "middle");
  text((cx1 + cx2) / 2.0, cy + 20.0, pct(lambda[1][0]), 9.0, "middle");
  text(cx1, cy - r - 6.0, pct(lambda[0][0]), 9.0, "middle");
  text(cx2, cy - r - 6.0, pct(lambda[1][1]), 9.0, "middle");
}

void Svg::scatter(double x, double y, double w, double h,
                  const std::vector<double>& xs, const std::vector<double>& ys,
                  double x_line, double y_line, const std::string& title,
                  const std::string& x_label, const std::string& y_label) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("scatter: series lengths disagree");
  const double title_h = 16.0;
  const double ph = h - title_h - 14.0;
  const double top = y + title_h;
  text(x, y + 12.0, title, 11.0, "start", "#111111");
  rect(x, top, w, ph, "none", "#666666", 0.5);

  double xlo = 0.0, xhi = 1.0, ylo = 0.0, yhi = 1.0;
  for (double v : xs) {
    xlo = std::min(xlo, v);
    xhi = std::max(xhi, v);
  }
  for (double v : ys) {
    ylo = std::min(ylo, v);
    yhi = std::max(yhi, v);
  }
  auto px = [&](double v) { return x + w * (v - xlo) / (xhi - xlo); };
  auto py = [&](double v) { return top + ph * (1.0 - (v - ylo) / (yhi - ylo)); };
  if (std::isfinite(x_line) && x_line >= xlo && x_line <= xhi)
    line(px(x_line), top, px(x_line), top + ph, "#b2182b", 0.8, "4,3");
  if (std::isfinite(y_line) && y_line >= ylo && y_line <= yhi)
    line(x, py(y_line), x + w, py(y_line), "#b2182b", 0.8, "4,3");
  for (std::size_t i = 0; i < xs.size(); ++i)
    circle(px(xs[i]), py(ys[i]), 2.5, "#2166ac");
  text(x + w / 2.0, y + h - 2.0, x_label, 9.0, "middle");
  text(x + 2.0, top + 10.0, y_label, 9.0, "start");
}

std::string Svg::str() const {
  std::ostringstream ss;
  ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!deterministic_) {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    ss << "<!-- generated " << buf << " -->\n";
  }
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_)
     << "\" height=\"" << num(height_) << "\" viewBox=\"0 0 " << num(width_)
     << ' ' << num(height_) << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
     << body_ << "</svg>";
  return ss.str();
}

void Svg::save(const std::string& path) const { write_lines(path, {str()}); }

}  // namespace pgg

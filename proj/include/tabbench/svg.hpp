#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace tabbench {

// Minimal static-chart SVG writer: bars with error whiskers, paired bars,
// grouped bars, and line plots. No external renderer involved; coordinates
// are formatted with fixed precision so output is byte-stable.
class SvgCanvas {
 public:
  SvgCanvas(int w, int h) : w_(w), h_(h) {}

  static std::string esc(const std::string& s) {
    std::string o;
    o.reserve(s.size());
    for (char c : s) {
      if (c == '&')
        o += "&amp;";
      else if (c == '<')
        o += "&lt;";
      else if (c == '>')
        o += "&gt;";
      else
        o += c;
    }
    return o;
  }

  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\" stroke=\"" << stroke
          << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0) {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\"/>\n";
  }
  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start", const std::string& fill = "#333333",
            double rotate = 0.0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\" fill=\"" << fill
          << "\"";
    if (rotate != 0.0)
      body_ << " transform=\"rotate(" << num(rotate) << " " << num(x) << " " << num(y) << ")\"";
    body_ << ">" << esc(s) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
          << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(x) << "," << num(y) << " ";
    body_ << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r)
          << "\" fill=\"" << fill << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
        << "\" viewBox=\"0 0 " << w_ << " " << h_ << "\">\n"
        << "<rect width=\"" << w_ << "\" height=\"" << h_ << "\" fill=\"#ffffff\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  int w_, h_;
  std::ostringstream body_;
};

namespace svg_detail {

inline const char* palette(size_t i) {
  static const char* colors[] = {"#4878a8", "#e8875a", "#6aa66a", "#c06070",
                                 "#9070b0", "#a09048", "#58a8a0", "#b07898"};
  return colors[i % 8];
}

struct Scale {
  double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
  double operator()(double v) const { return px0 + (v - lo) / (hi - lo) * (px1 - px0); }
};

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  const double span = hi - lo;
  if (span <= 0) return {lo};
  double step = std::pow(10.0, std::floor(std::log10(span / target)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * m) <= target) {
      step *= m;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step)
    ticks.push_back(t);
  return ticks;
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace svg_detail

// Horizontal bar chart with optional error whiskers (mean ranks with SEM).
inline std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& labels,
                                 const std::vector<double>& values,
                                 const std::vector<double>& errors, const std::string& x_label) {
  const int n = static_cast<int>(labels.size());
  const int row_h = 28, top = 48, bottom = 42, left = 150, right = 30;
  const int w = 640, h = top + bottom + row_h * std::max(1, n);
  SvgCanvas c(w, h);
  c.text(w / 2.0, 24, title, 15, "middle", "#111111");

  double vmax = 0.0;
  for (size_t i = 0; i < values.size(); ++i)
    vmax = std::max(vmax, values[i] + (i < errors.size() ? errors[i] : 0.0));
  if (vmax <= 0) vmax = 1.0;
  svg_detail::Scale sx{0.0, vmax * 1.08, static_cast<double>(left),
                       static_cast<double>(w - right)};

  for (double t : svg_detail::nice_ticks(0.0, vmax * 1.08)) {
    c.line(sx(t), top - 6, sx(t), h - bottom, "#dddddd");
    c.text(sx(t), h - bottom + 16, svg_detail::fmt_tick(t), 10, "middle", "#666666");
  }
  for (int i = 0; i < n; ++i) {
    const double y = top + i * row_h + 4;
    const double bh = row_h - 10;
    c.text(left - 8, y + bh / 2 + 4, labels[static_cast<size_t>(i)], 12, "end");
    c.rect(sx(0), y, sx(values[static_cast<size_t>(i)]) - sx(0), bh, svg_detail::palette(0));
    if (static_cast<size_t>(i) < errors.size() && errors[static_cast<size_t>(i)] > 0) {
      const double e = errors[static_cast<size_t>(i)];
      const double v = values[static_cast<size_t>(i)];
      const double cy = y + bh / 2;
      c.line(sx(v - e), cy, sx(v + e), cy, "#222222", 1.2);
      c.line(sx(v - e), cy - 4, sx(v - e), cy + 4, "#222222", 1.2);
      c.line(sx(v + e), cy - 4, sx(v + e), cy + 4, "#222222", 1.2);
    }
  }
  c.text((left + w - right) / 2.0, h - 12, x_label, 11, "middle", "#444444");
  return c.str();
}

// Win/loss paired horizontal bars per model.
inline std::string win_loss_svg(const std::string& title, const std::vector<std::string>& labels,
                                const std::vector<int>& wins, const std::vector<int>& losses,
                                int n_tasks) {
  const int n = static_cast<int>(labels.size());
  const int row_h = 34, top = 54, bottom = 36, left = 150, right = 30;
  const int w = 640, h = top + bottom + row_h * std::max(1, n);
  SvgCanvas c(w, h);
  c.text(w / 2.0, 24, title, 15, "middle", "#111111");
  c.rect(left, 32, 10, 10, svg_detail::palette(2));
  c.text(left + 14, 41, "wins", 10);
  c.rect(left + 60, 32, 10, 10, svg_detail::palette(3));
  c.text(left + 74, 41, "losses", 10);

  svg_detail::Scale sx{0.0, static_cast<double>(std::max(1, n_tasks)),
                       static_cast<double>(left), static_cast<double>(w - right)};
  for (int i = 0; i < n; ++i) {
    const double y = top + i * row_h + 4;
    c.text(left - 8, y + 12, labels[static_cast<size_t>(i)], 12, "end");
    c.rect(sx(0), y, sx(wins[static_cast<size_t>(i)]) - sx(0), 10, svg_detail::palette(2));
    c.rect(sx(0), y + 12, sx(losses[static_cast<size_t>(i)]) - sx(0), 10, svg_detail::palette(3));
    c.text(sx(wins[static_cast<size_t>(i)]) + 4, y + 9, std::to_string(wins[static_cast<size_t>(i)]), 10);
    c.text(sx(losses[static_cast<size_t>(i)]) + 4, y + 21,
           std::to_string(losses[static_cast<size_t>(i)]), 10);
  }
  c.text((left + w - right) / 2.0, h - 10, "tasks (of " + std::to_string(n_tasks) + ")", 11,
         "middle", "#444444");
  return c.str();
}

// Grouped vertical bars: one cluster per bin, one bar per group.
inline std::string grouped_bar_svg(const std::string& title,
                                   const std::vector<std::string>& bin_labels,
                                   const std::vector<std::string>& group_labels,
                                   const std::vector<std::vector<double>>& values,
                                   const std::vector<std::vector<double>>& errors,
                                   const std::string& y_label) {
  const int w = 720, h = 380, top = 52, bottom = 66, left = 64, right = 24;
  SvgCanvas c(w, h);
  c.text(w / 2.0, 24, title, 15, "middle", "#111111");

  double vmax = 1.0;
  for (size_t b = 0; b < values.size(); ++b)
    for (size_t g = 0; g < values[b].size(); ++g)
      vmax = std::max(vmax, values[b][g] + (b < errors.size() && g < errors[b].size()
                                                ? errors[b][g]
                                                : 0.0));
  svg_detail::Scale sy{0.0, vmax * 1.1, static_cast<double>(h - bottom),
                       static_cast<double>(top)};
  for (double t : svg_detail::nice_ticks(0.0, vmax * 1.1)) {
    c.line(left, sy(t), w - right, sy(t), "#dddddd");
    c.text(left - 6, sy(t) + 4, svg_detail::fmt_tick(t), 10, "end", "#666666");
  }

  const size_t nb = bin_labels.size(), ng = group_labels.size();
  const double cluster_w = static_cast<double>(w - left - right) / std::max<size_t>(1, nb);
  const double bar_w = cluster_w * 0.8 / std::max<size_t>(1, ng);
  for (size_t b = 0; b < nb; ++b) {
    const double x0 = left + b * cluster_w + cluster_w * 0.1;
    for (size_t g = 0; g < ng && g < values[b].size(); ++g) {
      const double x = x0 + g * bar_w;
      c.rect(x, sy(values[b][g]), bar_w * 0.9, sy(0) - sy(values[b][g]), svg_detail::palette(g));
      if (b < errors.size() && g < errors[b].size() && errors[b][g] > 0) {
        const double cx = x + bar_w * 0.45, e = errors[b][g], v = values[b][g];
        c.line(cx, sy(v - e), cx, sy(v + e), "#222222", 1.2);
      }
    }
    c.text(left + b * cluster_w + cluster_w / 2, h - bottom + 18, bin_labels[b], 11, "middle");
  }
  for (size_t g = 0; g < ng; ++g) {
    const double lx = left + 8 + 120.0 * static_cast<double>(g % 5);
    const double ly = h - 26 + 14 * static_cast<double>(g / 5);
    c.rect(lx, ly - 9, 10, 10, svg_detail::palette(g));
    c.text(lx + 14, ly, group_labels[g], 10);
  }
  c.text(16, (top + h - bottom) / 2.0, y_label, 11, "middle", "#444444", -90.0);
  return c.str();
}

// Line chart (ensemble-size curves): one series per label.
inline std::string line_chart_svg(const std::string& title, const std::vector<double>& xs,
                                  const std::map<std::string, std::vector<double>>& series,
                                  const std::string& x_label, const std::string& y_label) {
  const int w = 720, h = 400, top = 52, bottom = 56, left = 72, right = 24;
  SvgCanvas c(w, h);
  c.text(w / 2.0, 24, title, 15, "middle", "#111111");

  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& [name, ys] : series)
    for (double v : ys) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  if (!(ymax > ymin)) {
    ymax = ymin + 1.0;
    ymin -= 1.0;
  }
  const double pad = 0.08 * (ymax - ymin);
  svg_detail::Scale sy{ymin - pad, ymax + pad, static_cast<double>(h - bottom),
                       static_cast<double>(top)};
  svg_detail::Scale sx{xs.front(), xs.back(), static_cast<double>(left),
                       static_cast<double>(w - right)};

  for (double t : svg_detail::nice_ticks(ymin - pad, ymax + pad)) {
    c.line(left, sy(t), w - right, sy(t), "#dddddd");
    c.text(left - 6, sy(t) + 4, svg_detail::fmt_tick(t), 10, "end", "#666666");
  }
  for (double t : svg_detail::nice_ticks(xs.front(), xs.back(), 8)) {
    c.text(sx(t), h - bottom + 16, svg_detail::fmt_tick(t), 10, "middle", "#666666");
  }

  size_t si = 0;
  for (const auto& [name, ys] : series) {
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < xs.size() && i < ys.size(); ++i) pts.push_back({sx(xs[i]), sy(ys[i])});
    c.polyline(pts, svg_detail::palette(si), 1.8);
    for (const auto& [x, y] : pts) c.circle(x, y, 2.0, svg_detail::palette(si));
    const double lx = left + 8 + 150.0 * static_cast<double>(si % 4);
    const double ly = h - 16 + 12 * static_cast<double>(si / 4);
    c.line(lx, ly - 4, lx + 16, ly - 4, svg_detail::palette(si), 2.0);
    c.text(lx + 20, ly, name, 10);
    ++si;
  }
  c.text((left + w - right) / 2.0, h - 34, x_label, 11, "middle", "#444444");
  c.text(18, (top + h - bottom) / 2.0, y_label, 11, "middle", "#444444", -90.0);
  return c.str();
}

}  // namespace tabbench

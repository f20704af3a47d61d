#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "embedprobe/report.hpp"

namespace embedprobe {

namespace {

constexpr double kCell = 28.0;
constexpr double kMargin = 36.0;
constexpr double kGap = 40.0;
constexpr double kPlot = 220.0;

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

// White to dark blue over [lo, hi]; NaN cells are grey.
std::string fill(double v, double lo, double hi) {
  if (!std::isfinite(v)) return "#cccccc";
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  const auto channel = [t](int from, int to) { return int(std::lround(from + (to - from) * t)); };
  char buffer[8];
  std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", channel(255, 8), channel(255, 48), channel(255, 107));
  return buffer;
}

class Canvas {
 public:
  Canvas(double width, double height) : width_(width), height_(height) {}

  void text(double x, double y, std::string_view s, std::string_view anchor = "middle", int size = 11) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
  }

  void heatmap(double x0, double y0, const Matrix& m, const std::vector<std::string>& rows,
               const std::vector<std::string>& cols, double lo, double hi, std::string_view title) {
    text(x0 + kCell * double(m.cols()) / 2, y0 - 16, title, "middle", 12);
    body_ << "<g class=\"heatmap\" data-title=\"" << escape(title) << "\">\n";
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c)
        body_ << "<rect x=\"" << num(x0 + kCell * double(c)) << "\" y=\"" << num(y0 + kCell * double(r))
              << "\" width=\"" << num(kCell) << "\" height=\"" << num(kCell) << "\" data-i=\"" << r
              << "\" data-j=\"" << c << "\" data-value=\""
              << (std::isfinite(m(r, c)) ? format_double(m(r, c)) : "nan") << "\" fill=\""
              << fill(m(r, c), lo, hi) << "\"/>\n";
    body_ << "</g>\n";
    for (std::size_t c = 0; c < cols.size(); ++c)
      text(x0 + kCell * (double(c) + 0.5), y0 - 4, cols[c]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      text(x0 - 4, y0 + kCell * (double(r) + 0.65), rows[r], "end");
  }

  void polyline(const std::vector<std::pair<double, double>>& points, std::string_view stroke,
                std::string_view cls, std::string_view dash = "") {
    body_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << " points=\"";
    for (std::size_t i = 0; i < points.size(); ++i)
      body_ << (i ? " " : "") << num(points[i].first) << ',' << num(points[i].second);
    body_ << "\"/>\n";
  }

  void frame(double x, double y, double w, double h) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
          << num(h) << "\" fill=\"none\" stroke=\"#444444\"/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
        << num(height_) << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_)
        << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

double heat_width(Index n) { return kCell * double(n); }

std::string entanglement_panel(const AssessmentReport& r) {
  const auto& e = r.entanglement;
  const auto& codes = r.feature_codes;
  const double side = heat_width(Index(codes.size()));
  const double cols = std::max<double>(1, double(e.scenarios.size()));
  Canvas canvas(kMargin + cols * (side + kGap), 2 * (side + kGap) + kMargin);
  for (std::size_t s = 0; s < e.scenarios.size(); ++s) {
    const double x = kMargin + double(s) * (side + kGap);
    canvas.heatmap(x, kMargin, e.raw[s], codes, codes, 0, 1, e.scenarios[s] + " raw");
    canvas.heatmap(x, kMargin + side + kGap, e.embedded[s], codes, codes, 0, 1, e.scenarios[s] + " embedded");
  }
  return canvas.str();
}

std::string reconstruction_panel(const AssessmentReport& r) {
  const auto& codes = r.feature_codes;
  const double side = heat_width(Index(codes.size()));
  Canvas canvas(side + 2 * kMargin, side + 2 * kMargin);
  canvas.heatmap(kMargin, kMargin, r.reconstruction.test_r2, codes, codes, 0, 1, "test R2 (source x target)");
  return canvas.str();
}

std::string dynamics_panel(const AssessmentReport& r) {
  const auto& d = r.dynamics;
  const double cols = std::max<double>(1, double(d.scenarios.size()));
  Canvas canvas(kMargin + cols * (kPlot + kGap), kPlot + 2 * kMargin + 20);
  for (std::size_t s = 0; s < d.scenarios.size(); ++s) {
    const auto& sc = d.scenarios[s];
    const double x0 = kMargin + double(s) * (kPlot + kGap);
    const double y0 = kMargin;
    canvas.text(x0 + kPlot / 2, y0 - 8, sc.scenario, "middle", 12);
    canvas.frame(x0, y0, kPlot, kPlot);

    // Raw and embedded share one scale so identical trajectories overlap.
    const auto axis = [](const Matrix& m, Index c) -> Vector {
      if (c < m.cols()) return m.col(c);
      return Vector::LinSpaced(m.rows(), 0.0, 1.0);
    };
    const Matrix* sides[] = {&sc.raw_trajectory, &sc.embedded_trajectory};
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const Matrix* m : sides) {
      if (m->rows() == 0) continue;
      const Vector xs = m->cols() >= 2 ? axis(*m, 0) : axis(*m, 1);
      const Vector ys = m->cols() >= 2 ? axis(*m, 1) : axis(*m, 0);
      xmin = std::min(xmin, xs.minCoeff());
      xmax = std::max(xmax, xs.maxCoeff());
      ymin = std::min(ymin, ys.minCoeff());
      ymax = std::max(ymax, ys.maxCoeff());
    }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;
    const auto project = [&](const Matrix& m) {
      std::vector<std::pair<double, double>> points;
      if (m.rows() == 0) return points;
      const Vector xs = m.cols() >= 2 ? axis(m, 0) : axis(m, 1);
      const Vector ys = m.cols() >= 2 ? axis(m, 1) : axis(m, 0);
      for (Index t = 0; t < m.rows(); ++t)
        points.emplace_back(x0 + (xs(t) - xmin) / (xmax - xmin) * kPlot,
                            y0 + kPlot - (ys(t) - ymin) / (ymax - ymin) * kPlot);
      return points;
    };
    canvas.polyline(project(sc.raw_trajectory), "#1f77b4", "raw");
    canvas.polyline(project(sc.embedded_trajectory), "#d62728", "embedded", "4 2");
    canvas.text(x0 + kPlot / 2, y0 + kPlot + 16,
                "smoothness raw " + num(sc.raw_smoothness) + " / emb " + num(sc.embedded_smoothness));
  }
  return canvas.str();
}

std::string scenarios_panel(const AssessmentReport& r) {
  const auto& s = r.scenario;
  const double side = heat_width(Index(s.scenarios.size()));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < s.scenarios.size(); ++i) labels.push_back(std::to_string(i + 1));
  Canvas canvas(2 * (side + kGap) + kMargin, side + 2 * kMargin + 16 * double(labels.size()));
  canvas.heatmap(kMargin, kMargin, s.raw_cosine, labels, labels, -1, 1, "raw cosine");
  canvas.heatmap(kMargin + side + kGap, kMargin, s.embedded_cosine, labels, labels, -1, 1, "embedded cosine");
  for (std::size_t i = 0; i < labels.size(); ++i)
    canvas.text(kMargin, kMargin + side + 20 + 16 * double(i), labels[i] + " = " + s.scenarios[i], "start");
  return canvas.str();
}

std::string decoding_panel(const AssessmentReport& r) {
  const auto& k = r.decoding;
  const auto& codes = r.feature_codes;
  const double side = heat_width(Index(codes.size()));
  Canvas canvas(2 * (side + kGap) + kMargin, side + 2 * kMargin);
  canvas.heatmap(kMargin, kMargin, k.raw_auc, codes, codes, 0.5, 1, "raw AUC");
  canvas.heatmap(kMargin + side + kGap, kMargin, k.embedded_auc, codes, codes, 0.5, 1, "embedded AUC");
  return canvas.str();
}

}  // namespace

std::vector<std::string> panel_names() {
  return {"entanglement", "reconstruction", "dynamics", "scenarios", "decoding"};
}

std::string render_svg(const AssessmentReport& report, std::string_view panel) {
  if (panel == "entanglement") return entanglement_panel(report);
  if (panel == "reconstruction") return reconstruction_panel(report);
  if (panel == "dynamics") return dynamics_panel(report);
  if (panel == "scenarios") return scenarios_panel(report);
  if (panel == "decoding") return decoding_panel(report);
  throw Error(ErrorCode::UnknownPanel, "unknown panel '" + std::string(panel) + "'");
}

}  // namespace embedprobe

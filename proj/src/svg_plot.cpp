#include "chpf/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace chpf {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 200.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kGap = 50.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Panel {
  double y0;
  double lo;
  double hi;
  std::int64_t f0;
  std::int64_t f1;

  [[nodiscard]] double px(double frame) const {
    const double span = std::max<double>(1.0, static_cast<double>(f1 - f0));
    return kLeft + (frame - static_cast<double>(f0)) / span * (kWidth - kLeft - kRight);
  }
  [[nodiscard]] double py(double v) const {
    const double t = (std::clamp(v, lo, hi) - lo) / (hi - lo);
    return y0 + kPanelHeight * (1.0 - t);
  }
};

void draw_panel(std::ostringstream& o, const Panel& p, const std::vector<Event>& events,
                const std::vector<std::pair<double, double>>& pts, const std::string& label,
                const char* color) {
  for (const auto& e : events) {
    const double a = p.px(static_cast<double>(e.first) - 0.5);
    const double b = p.px(static_cast<double>(e.last) + 0.5);
    const double x0 = std::clamp(a, kLeft, kWidth - kRight);
    const double x1 = std::clamp(b, kLeft, kWidth - kRight);
    if (x1 <= x0) continue;
    o << "<rect x=\"" << num(x0) << "\" y=\"" << num(p.y0) << "\" width=\"" << num(x1 - x0)
      << "\" height=\"" << num(kPanelHeight) << "\" fill=\"#f2d7a0\" fill-opacity=\"0.5\"/>\n";
  }
  o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(p.y0) << "\" width=\""
    << num(kWidth - kLeft - kRight) << "\" height=\"" << num(kPanelHeight)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = p.lo + (p.hi - p.lo) * k / 4.0;
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(p.py(v) + 4)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft) << "\" y=\"" << num(p.y0 - 6) << "\" font-size=\"12\">"
    << escape(label) << "</text>\n";
  if (pts.empty()) return;
  o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& [f, v] : pts) o << num(p.px(f)) << ',' << num(p.py(v)) << ' ';
  o << "\"/>\n";
}

}  // namespace

std::string render_trace_svg(const std::vector<RunTraceRow>& trace,
                             const std::vector<Event>& events, const std::string& title,
                             double error_cap) {
  const double cap = error_cap > 0.0 ? error_cap : 1.0;
  const std::int64_t f0 = trace.empty() ? 0 : trace.front().frame;
  const std::int64_t f1 = trace.empty() ? 1 : trace.back().frame;

  std::vector<std::pair<double, double>> err;
  std::vector<std::pair<double, double>> alpha;
  for (const auto& r : trace) {
    const double f = static_cast<double>(r.frame);
    err.emplace_back(f, std::isfinite(r.err_add) ? std::min(r.err_add, cap) : cap);
    alpha.emplace_back(f, r.alpha);
  }

  const double height = kTop + 2 * kPanelHeight + kGap + 40.0;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
    << num(height) << "\" font-family=\"sans-serif\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">"
    << escape(title) << "</text>\n";

  const Panel top{kTop, 0.0, cap, f0, f1};
  const Panel bottom{kTop + kPanelHeight + kGap, 0.0, 1.0, f0, f1};
  draw_panel(o, top, events, err, "err_add (m)", "#1f5fa8");
  draw_panel(o, bottom, events, alpha, "alpha", "#b03a2e");

  const double axis_y = bottom.y0 + kPanelHeight + 16;
  for (int k = 0; k <= 5; ++k) {
    const double f = static_cast<double>(f0) + static_cast<double>(f1 - f0) * k / 5.0;
    o << "<text x=\"" << num(bottom.px(f)) << "\" y=\"" << num(axis_y)
      << "\" font-size=\"10\" text-anchor=\"middle\">" << std::lround(f) << "</text>\n";
  }
  o << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(axis_y + 16)
    << "\" font-size=\"11\" text-anchor=\"middle\">frame</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace chpf

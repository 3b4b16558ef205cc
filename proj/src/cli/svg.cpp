#include "lacp/cli/svg.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lacp::svg {

namespace {

constexpr double kLeft = 64, kRight = 20, kTop = 36, kBottom = 52;

std::string escape(const std::string& s) {
  std::string out;
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

// Roughly five round-valued ticks covering [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return out;
}

}  // namespace

Figure::Figure(double width, double height) : width_(width), height_(height) {}

void Figure::set_labels(std::string x_label, std::string y_label) {
  x_label_ = std::move(x_label);
  y_label_ = std::move(y_label);
}

void Figure::scatter(std::span<const double> x, std::span<const double> y, std::string color, double radius) {
  if (x.size() != y.size()) throw InvalidArgument("svg: x/y length mismatch");
  series_.push_back({Series::Type::scatter, {x.begin(), x.end()}, {y.begin(), y.end()}, {}, std::move(color), radius});
}

void Figure::band(std::span<const double> x, std::span<const double> lower, std::span<const double> upper,
                  std::string color, double opacity) {
  if (x.size() != lower.size() || x.size() != upper.size()) throw InvalidArgument("svg: band length mismatch");
  series_.push_back({Series::Type::band, {x.begin(), x.end()}, {lower.begin(), lower.end()},
                     {upper.begin(), upper.end()}, std::move(color), opacity});
}

void Figure::line(std::span<const double> x, std::span<const double> y, std::string color, double width) {
  if (x.size() != y.size()) throw InvalidArgument("svg: x/y length mismatch");
  series_.push_back({Series::Type::line, {x.begin(), x.end()}, {y.begin(), y.end()}, {}, std::move(color), width});
}

std::string Figure::render() const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series_) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    for (double v : s.y2) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 <= 0) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 <= 0) y0 -= 0.5, y1 += 0.5;
  const double pad_y = 0.05 * (y1 - y0);
  y0 -= pad_y;
  y1 += pad_y;

  const double pw = width_ - kLeft - kRight, ph = height_ - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - (v - y0) / (y1 - y0)) * ph; };

  std::ostringstream out;
  out.precision(6);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
      << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
      << "<rect width=\"" << width_ << "\" height=\"" << height_ << "\" fill=\"white\"/>\n";

  for (const auto& s : series_) {
    switch (s.type) {
      case Series::Type::band: {
        out << "<polygon fill=\"" << s.color << "\" fill-opacity=\"" << s.size << "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << "," << py(s.y2[i]) << " ";
        for (std::size_t i = s.x.size(); i-- > 0;) out << px(s.x[i]) << "," << py(s.y[i]) << " ";
        out << "\"/>\n";
        break;
      }
      case Series::Type::line: {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"" << s.size << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << "," << py(s.y[i]) << " ";
        out << "\"/>\n";
        break;
      }
      case Series::Type::scatter: {
        out << "<g fill=\"" << s.color << "\" fill-opacity=\"0.6\">\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"" << s.size << "\"/>\n";
        }
        out << "</g>\n";
        break;
      }
    }
  }

  // Axes frame and ticks.
  out << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph << "\"/>\n";
  for (double t : ticks(x0, x1)) out << "<line x1=\"" << px(t) << "\" y1=\"" << kTop + ph << "\" x2=\"" << px(t) << "\" y2=\"" << kTop + ph + 5 << "\"/>\n";
  for (double t : ticks(y0, y1)) out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py(t) << "\" x2=\"" << kLeft << "\" y2=\"" << py(t) << "\"/>\n";
  out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (double t : ticks(x0, x1)) out << "<text x=\"" << px(t) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << t << "</text>\n";
  for (double t : ticks(y0, y1)) out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">" << t << "</text>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << height_ - 12 << "\" text-anchor=\"middle\">" << escape(x_label_) << "</text>\n"
      << "<text transform=\"translate(16," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label_) << "</text>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_) << "</text>\n"
      << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace lacp::svg

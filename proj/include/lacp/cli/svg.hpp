#pragma once

#include <span>
#include <string>
#include <vector>

namespace lacp::svg {

/// Minimal static scatter/band chart rendered to an SVG string.
class Figure {
 public:
  Figure(double width = 720, double height = 480);

  void set_title(std::string title) { title_ = std::move(title); }
  void set_labels(std::string x_label, std::string y_label);

  void scatter(std::span<const double> x, std::span<const double> y, std::string color, double radius = 2.0);
  /// Filled region between `lower` and `upper` over increasing `x`.
  void band(std::span<const double> x, std::span<const double> lower, std::span<const double> upper,
            std::string color, double opacity = 0.3);
  void line(std::span<const double> x, std::span<const double> y, std::string color, double width = 1.5);

  std::string render() const;

 private:
  struct Series {
    enum class Type { scatter, band, line } type;
    std::vector<double> x, y, y2;
    std::string color;
    double size;
  };

  double width_, height_;
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace lacp::svg

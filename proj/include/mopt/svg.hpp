#pragma once

#include <array>
#include <fstream>
#include <string>
#include <vector>

namespace mopt::svg {

// Minimal SVG canvas with a y-up world-coordinate viewport.
class Canvas {
 public:
  Canvas(double world_lo_x, double world_lo_y, double world_hi_x,
         double world_hi_y, int pixels = 640);

  void circle(double x, double y, double r, const std::string& fill,
              double opacity = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0);
  void line(double x0, double y0, double x1, double y1,
            const std::string& stroke, double width = 1.0);
  void polyline(const std::vector<std::array<double, 2>>& pts,
                const std::string& stroke, double width = 1.5,
                double opacity = 1.0);
  void text(double x, double y, const std::string& s, int px_size = 14);

  std::string render() const;
  void save(const std::string& path) const;

 private:
  double px(double x) const;
  double py(double y) const;
  double scale() const;

  double lo_x_, lo_y_, hi_x_, hi_y_;
  int pixels_;
  std::vector<std::string> body_;
};

// viridis-like three-stop color ramp for heatmaps, t in [0, 1]
std::string heat_color(double t);

std::string xml_escape(const std::string& s);

}  // namespace mopt::svg

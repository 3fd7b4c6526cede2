#include "mopt/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace mopt::svg {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& s) {
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

Canvas::Canvas(double world_lo_x, double world_lo_y, double world_hi_x,
               double world_hi_y, int pixels)
    : lo_x_(world_lo_x), lo_y_(world_lo_y), hi_x_(world_hi_x),
      hi_y_(world_hi_y), pixels_(pixels) {
  if (!(hi_x_ > lo_x_) || !(hi_y_ > lo_y_))
    throw std::invalid_argument("svg canvas: empty world box");
}

double Canvas::scale() const {
  return static_cast<double>(pixels_) / std::max(hi_x_ - lo_x_, hi_y_ - lo_y_);
}

double Canvas::px(double x) const { return (x - lo_x_) * scale(); }
double Canvas::py(double y) const { return (hi_y_ - y) * scale(); }

void Canvas::circle(double x, double y, double r, const std::string& fill,
                    double opacity) {
  body_.push_back("<circle cx=\"" + fmt(px(x)) + "\" cy=\"" + fmt(py(y)) +
                  "\" r=\"" + fmt(r * scale()) + "\" fill=\"" + fill +
                  "\" fill-opacity=\"" + fmt(opacity) + "\"/>");
}

void Canvas::rect(double x, double y, double w, double h,
                  const std::string& fill, double opacity) {
  body_.push_back("<rect x=\"" + fmt(px(x)) + "\" y=\"" + fmt(py(y + h)) +
                  "\" width=\"" + fmt(w * scale()) + "\" height=\"" +
                  fmt(h * scale()) + "\" fill=\"" + fill +
                  "\" fill-opacity=\"" + fmt(opacity) + "\"/>");
}

void Canvas::line(double x0, double y0, double x1, double y1,
                  const std::string& stroke, double width) {
  body_.push_back("<line x1=\"" + fmt(px(x0)) + "\" y1=\"" + fmt(py(y0)) +
                  "\" x2=\"" + fmt(px(x1)) + "\" y2=\"" + fmt(py(y1)) +
                  "\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) +
                  "\"/>");
}

void Canvas::polyline(const std::vector<std::array<double, 2>>& pts,
                      const std::string& stroke, double width, double opacity) {
  std::string attr = "<polyline fill=\"none\" stroke=\"" + stroke +
                     "\" stroke-width=\"" + fmt(width) +
                     "\" stroke-opacity=\"" + fmt(opacity) + "\" points=\"";
  for (const auto& p : pts)
    attr += fmt(px(p[0])) + "," + fmt(py(p[1])) + " ";
  attr += "\"/>";
  body_.push_back(std::move(attr));
}

void Canvas::text(double x, double y, const std::string& s, int px_size) {
  body_.push_back("<text x=\"" + fmt(px(x)) + "\" y=\"" + fmt(py(y)) +
                  "\" font-size=\"" + std::to_string(px_size) +
                  "\" font-family=\"sans-serif\">" + xml_escape(s) +
                  "</text>");
}

std::string Canvas::render() const {
  const double w = px(hi_x_);
  const double h = py(lo_y_);
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
         "\" height=\"" + fmt(h) + "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) +
         "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" fill=\"white\"/>\n";
  for (const auto& el : body_) {
    out += el;
    out += '\n';
  }
  out += "</svg>\n";
  return out;
}

void Canvas::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render();
}

std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  // dark blue -> teal -> yellow
  const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  const double s = t * 2.0;
  const int k = s < 1.0 ? 0 : 1;
  const double f = s - static_cast<double>(k);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(stops[k][0] + f * (stops[k + 1][0] - stops[k][0])),
                static_cast<int>(stops[k][1] + f * (stops[k + 1][1] - stops[k][1])),
                static_cast<int>(stops[k][2] + f * (stops[k + 1][2] - stops[k][2])));
  return buf;
}

}  // namespace mopt::svg

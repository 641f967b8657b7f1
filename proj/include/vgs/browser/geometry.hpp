#pragma once

#include <algorithm>

namespace vgs::browser {

struct Point {
  double x = 0;
  double y = 0;
};

// Axis-aligned box in page coordinates; the right and bottom edges are
// exclusive.
struct Rect {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double right() const noexcept { return x + w; }
  double bottom() const noexcept { return y + h; }
  bool empty() const noexcept { return w <= 0 || h <= 0; }
  Point center() const noexcept { return {x + w / 2, y + h / 2}; }

  bool contains(Point p) const noexcept { return p.x >= x && p.x < right() && p.y >= y && p.y < bottom(); }
  bool intersects(const Rect& o) const noexcept {
    return !empty() && !o.empty() && x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
  Rect united(const Rect& o) const noexcept {
    if (empty()) return o;
    if (o.empty()) return *this;
    const double l = std::min(x, o.x);
    const double t = std::min(y, o.y);
    return {l, t, std::max(right(), o.right()) - l, std::max(bottom(), o.bottom()) - t};
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Viewport {
  int width = 1280;
  int height = 1100;
  friend bool operator==(const Viewport&, const Viewport&) = default;
};

}  // namespace vgs::browser

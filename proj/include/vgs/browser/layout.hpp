#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vgs/browser/geometry.hpp"
#include "vgs/browser/raster.hpp"
#include "vgs/html/dom.hpp"

namespace vgs::browser {

// Layout metrics of the built-in renderer. Text uses a fixed advance per
// code point and fixed line height, scaled for large headings.
inline constexpr int kCharAdvance = 8;
inline constexpr int kLineHeight = 20;
inline constexpr int kDefaultImageSize = 100;

struct LayoutBox {
  const html::Node* node = nullptr;
  Rect rect;                    // border box; union of fragments for inline boxes
  std::vector<Rect> fragments;  // inline boxes only
  bool inline_level = false;
  int depth = 0;
  std::optional<Rgb> background;
};

struct TextFragment {
  Rect rect;
  std::string text;
  int scale = 1;
  bool link = false;
  bool bold = false;
};

// Block/inline flow layout of a parsed document at a fixed page width.
// Non-rendered and hidden subtrees produce no boxes.
class Layout {
 public:
  static Layout compute(const html::Document& doc, int page_width);

  int page_width() const noexcept { return page_width_; }
  int page_height() const noexcept { return page_height_; }

  const std::vector<LayoutBox>& boxes() const noexcept { return boxes_; }
  const LayoutBox* box(const html::Node* element) const;
  // Border box (bounding box of fragments for inline elements); absent for
  // elements that are not rendered.
  std::optional<Rect> rect_of(const html::Node* element) const;

  // Deepest element whose box (or one of its inline fragments) contains
  // `p`; later siblings win ties. Null when nothing is hit.
  const html::Node* hit_test(Point p) const;

  // Paints rows [y, y+height) of the page into a page_width x height raster.
  Raster paint(int y, int height) const;

 private:
  friend class LayoutBuilder;
  int page_width_ = 0;
  int page_height_ = 0;
  std::vector<LayoutBox> boxes_;
  std::vector<TextFragment> text_;
  std::unordered_map<const html::Node*, std::size_t> index_;
};

}  // namespace vgs::browser

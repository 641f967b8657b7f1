#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "vgs/browser/session.hpp"
#include "vgs/cli/cli.hpp"
#include "vgs/error.hpp"
#include "vgs/eval/metrics.hpp"
#include "vgs/html/serialize.hpp"
#include "vgs/html/tools.hpp"
#include "vgs/html/xpath.hpp"
#include "vgs/model/gateway.hpp"
#include "vgs/model/templates.hpp"

namespace py = pybind11;
using namespace vgs;

namespace {

py::object json_to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

model::Shape shape_named(const std::string& name) {
  if (name == "object") return model::Shape::Object;
  if (name == "array") return model::Shape::Array;
  if (name == "any") return model::Shape::Any;
  throw py::value_error("shape must be 'object', 'array' or 'any'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Visually grounded wrapper generation toolkit";

  py::register_exception<Error>(m, "VgsError");
  m.def("error_code", [](const std::string& message) { return message.substr(0, message.find(':')); },
        "The error code at the start of a VgsError message.");

  m.def(
      "simplify",
      [](const std::string& html) {
        const auto s = html::simplify(html);
        py::dict d;
        d["content"] = s.content;
        d["source_length"] = s.source_length;
        d["simplified_length"] = s.simplified_length;
        return d;
      },
      py::arg("html"));

  m.def(
      "local_segment",
      [](const std::string& html, const std::string& anchor_xpath, int d) {
        auto doc = html::Document::parse(html);
        const auto seg = html::local_segment(doc, anchor_xpath, d);
        std::vector<std::string> nodes;
        for (const auto* n : seg.nodes) nodes.push_back(html::absolute_xpath(*n));
        py::dict out;
        out["anchor_xpath"] = seg.anchor_xpath;
        out["distance"] = seg.distance;
        out["content"] = seg.content;
        out["nodes"] = nodes;
        return out;
      },
      py::arg("html"), py::arg("anchor_xpath"), py::arg("d") = html::kDefaultSegmentDistance);

  m.def(
      "evaluate_xpath",
      [](const std::string& html, const std::string& xpath) {
        return html::evaluate_xpath_strings(html::Document::parse(html), xpath);
      },
      py::arg("html"), py::arg("xpath"));

  m.def("is_valid_xpath", [](const std::string& xpath) { return html::is_valid_xpath(xpath); }, py::arg("xpath"));

  m.def(
      "absolute_xpaths",
      [](const std::string& html, const std::string& xpath) {
        const auto doc = html::Document::parse(html);
        std::vector<std::string> out;
        for (const auto& match : html::evaluate_xpath(doc, xpath)) {
          if (match.node && match.node->is_element()) out.push_back(html::absolute_xpath(*match.node));
        }
        return out;
      },
      py::arg("html"), py::arg("xpath"));

  m.def(
      "plan_regions",
      [](int page_height, int width, int height) {
        std::vector<std::tuple<int, int, int>> out;
        for (const auto& r : browser::plan_regions(page_height, {width, height})) {
          out.emplace_back(r.index, r.y_offset, r.height);
        }
        return out;
      },
      py::arg("page_height"), py::arg("width") = 1280, py::arg("height") = 1100,
      "(index, y_offset, height) for each screenshot region.");

  m.def(
      "page_height",
      [](const std::string& html, int width, int height) {
        browser::StaticPageSession page("about:blank", html, {width, height});
        return page.page_height();
      },
      py::arg("html"), py::arg("width") = 1280, py::arg("height") = 1100);

  m.def(
      "cell_metrics",
      [](const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
        const auto c = eval::cell_metrics(predicted, gold);
        return std::make_tuple(c.precision, c.recall, c.f1);
      },
      py::arg("predicted"), py::arg("gold"));

  m.def("template_ids", [] {
    std::vector<std::string> out;
    for (auto id : model::template_ids()) out.emplace_back(id);
    return out;
  });
  m.def(
      "render_template",
      [](const std::string& id, const model::Bindings& bindings) { return model::render_template(id, bindings); },
      py::arg("id"), py::arg("bindings"));

  m.def(
      "recover_json",
      [](const std::string& raw, const std::string& shape) -> py::object {
        auto j = model::recover_json(raw, shape_named(shape));
        if (!j) return py::none();
        return json_to_python(*j);
      },
      py::arg("raw"), py::arg("shape") = "object");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one vgs-wie subcommand; returns (exit code, stdout, stderr).");
}

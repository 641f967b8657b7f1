#include "vgs/eval/extraction.hpp"

#include "vgs/error.hpp"
#include "vgs/util/text.hpp"
#include "vgs/util/url.hpp"

namespace vgs::eval {

namespace {

bool selects_source_attribute(std::string_view xpath) {
  const std::string x = util::to_lower(util::trim(xpath));
  return util::ends_with(x, "@href") || util::ends_with(x, "@src");
}

}  // namespace

std::string normalize_value(std::string_view value) { return util::normalize_whitespace(value); }

PageExtraction extract_page(browser::PageSession& session, const pipeline::Wrapper& wrapper) {
  PageExtraction out;
  out.url = session.url();
  const std::string base = session.base_url();
  for (const auto& [attribute, xpath] : wrapper.entries) {
    auto& values = out.values[attribute];
    std::vector<std::string> raw;
    try {
      raw = session.evaluate_xpath(xpath);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::XPathSyntax) throw;
    }
    const bool resolve = selects_source_attribute(xpath);
    for (const auto& v : raw) {
      std::string n = normalize_value(v);
      if (resolve && !n.empty()) n = util::resolve_url(base, n);
      values.push_back(std::move(n));
    }
  }
  return out;
}

ExtractionResult apply_wrapper(const pipeline::Wrapper& wrapper, const Sample& sample, browser::Viewport viewport,
                               const browser::SessionOptions& options) {
  ExtractionResult out;
  out.sample_id = sample.id;
  for (const auto& [attribute, xpath] : wrapper.entries) out.attributes.push_back(attribute);
  for (const auto& url : sample.urls) {
    try {
      auto session = browser::load_page(url, viewport, options);
      out.pages.push_back(extract_page(*session, wrapper));
      session->close();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NavigationFailed && e.code() != ErrorCode::RenderTimeout) throw;
      PageExtraction failed;
      failed.url = url;
      failed.error = e.what();
      for (const auto& a : out.attributes) failed.values[a];
      out.pages.push_back(std::move(failed));
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const ExtractionResult& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["attributes"] = r.attributes;
  j["pages"] = nlohmann::ordered_json::array();
  for (const auto& p : r.pages) {
    nlohmann::ordered_json page;
    page["url"] = p.url;
    page["values"] = nlohmann::ordered_json::object();
    for (const auto& a : r.attributes) {
      auto it = p.values.find(a);
      page["values"][a] = it == p.values.end() ? std::vector<std::string>{} : it->second;
    }
    if (p.error) page["error"] = *p.error;
    j["pages"].push_back(std::move(page));
  }
  return j;
}

ExtractionResult extraction_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("pages") || !j["pages"].is_array()) {
    throw Error(ErrorCode::SchemaViolation, "extraction result needs a pages list");
  }
  ExtractionResult r;
  r.sample_id = j.value("sample_id", std::string{});
  if (j.contains("attributes")) r.attributes = j["attributes"].get<std::vector<std::string>>();
  for (const auto& p : j["pages"]) {
    PageExtraction page;
    page.url = p.value("url", std::string{});
    if (p.contains("values")) {
      for (const auto& [k, v] : p["values"].items()) page.values[k] = v.get<std::vector<std::string>>();
    }
    if (p.contains("error")) page.error = p["error"].get<std::string>();
    r.pages.push_back(std::move(page));
  }
  return r;
}

}  // namespace vgs::eval

#include <algorithm>
#include <deque>
#include <set>

#include "websight/browser_env.hpp"
#include "websight/error.hpp"

namespace websight {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& message) {
  throw Error(ErrorCode::kBadPageGraph, message);
}

Rect parse_rect(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 4) bad(where + ": rect must be [x1, y1, x2, y2]");
  for (const auto& v : value) {
    if (!v.is_number_integer()) bad(where + ": rect coordinates must be integers");
  }
  Rect r{value[0].get<int>(), value[1].get<int>(), value[2].get<int>(), value[3].get<int>()};
  if (r.x1 > r.x2 || r.y1 > r.y2) bad(where + ": rect corners out of order");
  return r;
}

Extent parse_extent(const json& value, const std::string& where) {
  if (!value.is_object()) bad(where + " must be {width, height}");
  Extent e{value.value("width", 0), value.value("height", 0)};
  if (e.width <= 0 || e.height <= 0) bad(where + " must be positive");
  return e;
}

json rect_json(const Rect& r) { return json::array({r.x1, r.y1, r.x2, r.y2}); }

}  // namespace

const Page* PageGraph::find(std::string_view id) const {
  auto it = pages.find(std::string(id));
  return it == pages.end() ? nullptr : &it->second;
}

const Page* PageGraph::find_by_url(std::string_view url) const {
  for (const auto& [id, page] : pages) {
    if (page.url == url) return &page;
  }
  return find(url);
}

std::vector<std::string> PageGraph::reachable_from_start() const {
  std::vector<std::string> order;
  std::set<std::string> seen{start_page};
  std::deque<std::string> queue{start_page};
  while (!queue.empty()) {
    const std::string id = queue.front();
    queue.pop_front();
    order.push_back(id);
    const Page* page = find(id);
    if (!page) continue;
    auto visit = [&](const std::string& next) {
      if (seen.insert(next).second) queue.push_back(next);
    };
    for (const auto& h : page->hotspots) visit(h.next_page_id);
    for (const auto& f : page->text_fields) {
      if (f.submit_page_id) visit(*f.submit_page_id);
    }
  }
  return order;
}

PageGraph parse_page_graph(const json& document) {
  if (!document.is_object()) bad("page graph must be a JSON object");
  if (document.value("schema_version", 1) != 1) bad("unsupported schema_version");

  PageGraph graph;
  if (document.contains("viewport")) graph.viewport = parse_extent(document["viewport"], "viewport");
  const json& pages = document.value("pages", json::array());
  if (!pages.is_array() || pages.empty()) bad("pages must be a nonempty array");

  for (const auto& p : pages) {
    if (!p.is_object() || !p.contains("id") || !p["id"].is_string()) {
      bad("every page needs a string id");
    }
    Page page;
    page.id = p["id"].get<std::string>();
    page.url = p.value("url", "sim://" + page.id);
    page.title = p.value("title", page.id);
    page.content = p.contains("content") ? parse_extent(p["content"], page.id + ".content")
                                         : graph.viewport;
    if (page.content.width < graph.viewport.width ||
        page.content.height < graph.viewport.height) {
      bad(page.id + ": content extent smaller than viewport");
    }
    auto inside = [&](const Rect& r, const std::string& where) {
      if (r.x1 < 0 || r.y1 < 0 || r.x2 >= page.content.width || r.y2 >= page.content.height) {
        bad(where + ": rect outside the page");
      }
    };
    for (const auto& h : p.value("hotspots", json::array())) {
      Hotspot hotspot;
      hotspot.rect = parse_rect(h.value("rect", json()), page.id + " hotspot");
      inside(hotspot.rect, page.id + " hotspot");
      hotspot.label = h.value("label", "");
      if (!h.contains("next") || !h["next"].is_string()) bad(page.id + ": hotspot without next");
      hotspot.next_page_id = h["next"].get<std::string>();
      page.hotspots.push_back(std::move(hotspot));
    }
    for (const auto& f : p.value("text_fields", json::array())) {
      TextField field;
      field.rect = parse_rect(f.value("rect", json()), page.id + " text field");
      inside(field.rect, page.id + " text field");
      field.label = f.value("label", "");
      if (f.contains("submit") && f["submit"].is_string()) {
        field.submit_page_id = f["submit"].get<std::string>();
      }
      page.text_fields.push_back(std::move(field));
    }
    const std::string id = page.id;
    if (!graph.pages.emplace(id, std::move(page)).second) bad("duplicate page id " + id);
  }

  graph.start_page = document.value("start", pages.front().value("id", ""));
  if (!graph.find(graph.start_page)) bad("start page '" + graph.start_page + "' missing");
  for (const auto& [id, page] : graph.pages) {
    for (const auto& h : page.hotspots) {
      if (!graph.find(h.next_page_id)) {
        bad(id + ": hotspot '" + h.label + "' points to missing page '" + h.next_page_id + "'");
      }
    }
    for (const auto& f : page.text_fields) {
      if (f.submit_page_id && !graph.find(*f.submit_page_id)) {
        bad(id + ": field '" + f.label + "' submits to missing page '" + *f.submit_page_id + "'");
      }
    }
  }
  return graph;
}

PageGraph load_page_graph(const std::string& path) {
  json document;
  try {
    document = json::parse(read_file(path));
  } catch (const json::exception& e) {
    bad(path + ": " + e.what());
  }
  return parse_page_graph(document);
}

json page_graph_to_json(const PageGraph& graph) {
  json pages = json::array();
  for (const auto& [id, page] : graph.pages) {
    json hotspots = json::array();
    for (const auto& h : page.hotspots) {
      hotspots.push_back({{"rect", rect_json(h.rect)}, {"label", h.label}, {"next", h.next_page_id}});
    }
    json fields = json::array();
    for (const auto& f : page.text_fields) {
      json field = {{"rect", rect_json(f.rect)}, {"label", f.label}};
      if (f.submit_page_id) field["submit"] = *f.submit_page_id;
      fields.push_back(field);
    }
    pages.push_back({{"id", id},
                     {"url", page.url},
                     {"title", page.title},
                     {"content", {{"width", page.content.width}, {"height", page.content.height}}},
                     {"hotspots", hotspots},
                     {"text_fields", fields}});
  }
  return {{"schema_version", 1},
          {"viewport", {{"width", graph.viewport.width}, {"height", graph.viewport.height}}},
          {"start", graph.start_page},
          {"pages", pages}};
}

}  // namespace websight

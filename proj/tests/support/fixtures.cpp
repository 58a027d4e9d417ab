#include "fixtures.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>

#include <unistd.h>

namespace websight::testing {

std::string plan_reply(const std::vector<std::string>& steps) {
  std::string out;
  for (const auto& s : steps) out += "<step> " + s + " </step>\n";
  return out;
}

std::string reason_reply(std::string_view reasoning, std::string_view directive) {
  return "<reasoning>" + std::string(reasoning) + "</reasoning>\n<action>" + std::string(directive) +
         "</action>";
}

std::string finished_reply(std::string_view answer) {
  return reason_reply("The answer is on screen.", "FINISHED " + std::string(answer));
}

std::string ground_reply(std::string_view thought, const ActionCommand& action) {
  return "Thought: " + std::string(thought) + "\nAction: " + serialize_action(action);
}

std::string click_reply(Point model_point) {
  return ground_reply("The target is visible.", ActionCommand{action::Click{model_point}});
}

std::string verdict_reply(Outcome outcome, bool complete, std::string_view why) {
  return "OUTCOME: " + std::string(to_string(outcome)) + "\nCOMPLETE: " + (complete ? "yes" : "no") +
         "\nWHY: " + std::string(why);
}

int oracle_pixel(int model, int model_extent, int pixels) {
  const double exact = static_cast<double>(model) * pixels / model_extent;
  const int rounded = static_cast<int>(std::floor(exact + 0.5));
  return std::min(std::max(rounded, 0), pixels - 1);
}

Point model_point_inside(const Rect& rect, Extent viewport, Extent model_extent) {
  auto best_axis = [](int lo, int hi, int extent, int pixels) {
    const double center = (lo + hi) / 2.0;
    int best = -1;
    double best_distance = std::numeric_limits<double>::max();
    for (int m = 0; m <= extent; ++m) {
      const int px = oracle_pixel(m, extent, pixels);
      if (px < lo || px > hi) continue;
      const double d = std::abs(px - center);
      if (d < best_distance) {
        best_distance = d;
        best = m;
      }
    }
    return best;
  };
  return {best_axis(rect.x1, rect.x2, model_extent.width, viewport.width),
          best_axis(rect.y1, rect.y2, model_extent.height, viewport.height), CoordSpace::kModel};
}

namespace {

Page make_page(std::string id, std::string title, Extent viewport) {
  Page page;
  page.url = "sim://" + id;
  page.id = std::move(id);
  page.title = std::move(title);
  page.content = viewport;
  return page;
}

}  // namespace

PageGraph five_page_graph() {
  PageGraph graph;
  graph.viewport = {1280, 800};
  graph.start_page = "home";
  Page home = make_page("home", "Shop home", graph.viewport);
  home.hotspots.push_back({{500, 300, 779, 359}, "results", "Search"});
  home.text_fields.push_back({{300, 200, 979, 259}, "Search box", "results"});
  Page results = make_page("results", "Results for mugs", graph.viewport);
  results.hotspots.push_back({{100, 150, 499, 249}, "product", "Blue mug"});
  Page product = make_page("product", "Blue mug", graph.viewport);
  product.hotspots.push_back({{900, 600, 1159, 679}, "cart", "Add to cart"});
  Page cart = make_page("cart", "Cart (1)", graph.viewport);
  cart.hotspots.push_back({{1000, 80, 1199, 139}, "done", "Checkout"});
  Page done = make_page("done", "Order placed", graph.viewport);
  for (Page* p : {&home, &results, &product, &cart, &done}) graph.pages.emplace(p->id, *p);
  return graph;
}

PageGraph click_back_graph() {
  PageGraph graph;
  graph.viewport = {1280, 800};
  graph.start_page = "home";
  Page home = make_page("home", "Search results: none", graph.viewport);
  home.hotspots.push_back({{200, 200, 499, 279}, "details", "Details"});
  Page details = make_page("details", "No results", graph.viewport);
  graph.pages.emplace(home.id, home);
  graph.pages.emplace(details.id, details);
  return graph;
}

PageGraph blank_graph() {
  PageGraph graph;
  graph.viewport = {1280, 800};
  graph.start_page = "blank";
  graph.pages.emplace("blank", make_page("blank", "Blank", graph.viewport));
  return graph;
}

std::string scratch_dir(std::string_view name) {
  static std::atomic<int> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("websight-test-" + std::to_string(::getpid())) /
                    (std::string(name) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

std::string blank_png(Extent viewport) {
  PageGraph graph = blank_graph();
  graph.viewport = viewport;
  graph.pages.at("blank").content = viewport;
  SimulatedEnvironment env(graph);
  return env.screenshot().encoded;
}

}  // namespace websight::testing

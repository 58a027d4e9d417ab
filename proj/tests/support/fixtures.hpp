#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "websight/action_grammar.hpp"
#include "websight/bench.hpp"
#include "websight/browser_env.hpp"
#include "websight/types.hpp"

namespace websight::testing {

// Model replies in each role's wire format.
std::string plan_reply(const std::vector<std::string>& steps);
std::string reason_reply(std::string_view reasoning, std::string_view directive);
std::string finished_reply(std::string_view answer);
std::string ground_reply(std::string_view thought, const ActionCommand& action);
std::string click_reply(Point model_point);
std::string verdict_reply(Outcome outcome, bool complete, std::string_view why);

// Pixel a model coordinate lands on: nearest pixel, ties up, clamped.
// Floating-point on purpose, so it shares no code with scale_coordinate.
int oracle_pixel(int model, int model_extent, int pixels);

// Model point nearest to the rect center whose pixel image is inside `rect`,
// found by scanning the whole model grid.
Point model_point_inside(const Rect& rect, Extent viewport,
                         Extent model_extent = kDefaultModelExtent);

// home -> results -> product -> cart -> done, with one labelled hotspot per
// transition plus a search field on home.
PageGraph five_page_graph();

// home <-> details; the click/back pattern.
PageGraph click_back_graph();

// One-page graph with nothing clickable.
PageGraph blank_graph();

// Fresh directory under the test scratch root.
std::string scratch_dir(std::string_view name);

// PNG of a blank page at `viewport`, for benchmark fixtures.
std::string blank_png(Extent viewport);

}  // namespace websight::testing

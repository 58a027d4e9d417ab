#include "websight/data_augment.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "websight/error.hpp"

namespace websight {

using nlohmann::json;

namespace {

const std::set<std::string, std::less<>> kPlaceholders = {"element", "type", "name", "purpose",
                                                         "function"};

const std::string& field_for(const UiAnnotation& entry, std::string_view placeholder) {
  if (placeholder == "element") return entry.element_type;
  if (placeholder == "type") return entry.ocr_text;
  if (placeholder == "name") return entry.name;
  if (placeholder == "purpose") return entry.purpose;
  return entry.expected_result;  // function
}

std::vector<std::string> placeholders_of(std::string_view pattern) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
    const std::size_t close = pattern.find('}', pos + 1);
    if (close == std::string_view::npos) break;
    names.emplace_back(pattern.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return names;
}

// Uniform draw in [0, bound) by rejection; stable across standard libraries.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t value = 0;
  do {
    value = rng();
  } while (value >= limit);
  return value % bound;
}

std::string first_string(const json& record, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (record.contains(key) && record[key].is_string()) return record[key].get<std::string>();
  }
  return {};
}

}  // namespace

std::string_view to_string(Platform platform) {
  switch (platform) {
    case Platform::kWeb: return "web";
    case Platform::kMobile: return "mobile";
    case Platform::kDesktop: return "desktop";
  }
  return "web";
}

std::optional<Platform> platform_from_string(std::string_view text) {
  if (text == "web") return Platform::kWeb;
  if (text == "mobile") return Platform::kMobile;
  if (text == "desktop") return Platform::kDesktop;
  return std::nullopt;
}

InstructionTemplate make_template(std::string pattern) {
  for (const auto& name : placeholders_of(pattern)) {
    if (!kPlaceholders.count(name)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown placeholder {" + name + "} in \"" + pattern + "\"");
    }
  }
  return {std::move(pattern)};
}

std::vector<InstructionTemplate> default_templates() {
  return {make_template("Click {element} to {purpose}"), make_template("Tap {type} for {function}"),
          make_template("Select {name}")};
}

std::vector<InstructionTemplate> load_templates(const std::string& path) {
  std::istringstream lines(read_file(path));
  std::vector<InstructionTemplate> templates;
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
      continue;
    }
    templates.push_back(make_template(line));
  }
  return templates;
}

std::vector<UiAnnotation> filter_web_subset(const std::vector<UiAnnotation>& entries,
                                            FilterSummary* summary) {
  std::vector<UiAnnotation> web;
  for (const auto& e : entries) {
    if (e.platform == Platform::kWeb) web.push_back(e);
  }
  if (summary) {
    summary->total = static_cast<int>(entries.size());
    summary->web = static_cast<int>(web.size());
    summary->non_web = summary->total - summary->web;
  }
  return web;
}

std::string render_template(const InstructionTemplate& tmpl, const UiAnnotation& entry) {
  std::string out;
  std::size_t i = 0;
  const std::string& p = tmpl.pattern;
  while (i < p.size()) {
    if (p[i] == '{') {
      const std::size_t close = p.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string name = p.substr(i + 1, close - i - 1);
        if (!kPlaceholders.count(name)) {
          throw Error(ErrorCode::kInvalidArgument, "unknown placeholder {" + name + "}");
        }
        const std::string& value = field_for(entry, name);
        if (value.find_first_not_of(" \t\r\n") == std::string::npos) {
          throw Error(ErrorCode::kMissingField,
                      "annotation " + entry.id + " has no value for {" + name + "}");
        }
        out += value;
        i = close + 1;
        continue;
      }
    }
    out += p[i++];
  }
  return out;
}

std::optional<Point> click_target(const BBox& bbox, Extent image_size, Extent model_extent) {
  const Point center{(bbox.x1 + bbox.x2) / 2, (bbox.y1 + bbox.y2) / 2, CoordSpace::kPixel};
  const Point guess = to_model_space(center, model_extent, image_size);
  auto inside = [&](Point m) {
    const Point back = scale_point(m, model_extent, image_size);
    return bbox.x1 <= back.x && back.x <= bbox.x2 && bbox.y1 <= back.y && back.y <= bbox.y2;
  };
  // Rounding can push a tiny box's center out; search the nearest model cells.
  for (int radius = 0; radius <= 2; ++radius) {
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != radius) continue;
        const Point m{guess.x + dx, guess.y + dy, CoordSpace::kModel};
        if (m.x < 0 || m.y < 0 || m.x > model_extent.width || m.y > model_extent.height) continue;
        if (inside(m)) return m;
      }
    }
  }
  return std::nullopt;
}

AugmentResult augment(const std::vector<UiAnnotation>& entries,
                      const std::vector<InstructionTemplate>& templates, int variants_per_entry,
                      std::uint64_t seed, Extent model_extent) {
  if (templates.empty()) throw Error(ErrorCode::kInvalidArgument, "no templates");
  if (variants_per_entry <= 0) throw Error(ErrorCode::kInvalidArgument, "variants must be positive");

  AugmentResult result;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t index = 0; index < entries.size(); ++index) {
    const UiAnnotation& entry = entries[index];
    std::vector<std::string> rendered;
    for (const auto& t : templates) {
      try {
        rendered.push_back(render_template(t, entry));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingField) throw;
      }
    }
    if (rendered.empty()) {
      result.notes.push_back({entry.id, ErrorCode::kNoApplicableTemplate,
                              "no template has all of its fields"});
      continue;
    }
    const std::optional<Point> target = click_target(entry.bbox, entry.image_size, model_extent);
    if (!target) {
      result.notes.push_back({entry.id, ErrorCode::kInvalidArgument,
                              "bbox too small for the model coordinate grid"});
      continue;
    }
    const std::string action = serialize_action(ActionCommand{action::Click{*target}});

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    const std::size_t take = std::min<std::size_t>(rendered.size(), variants_per_entry);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + draw_below(rng, rendered.size() - i);
      std::swap(rendered[i], rendered[j]);
      if (!seen.emplace(entry.image_ref, rendered[i]).second) continue;
      result.samples.push_back({entry.image_ref, rendered[i], action, entry.id});
    }
  }
  return result;
}

std::size_t emit_training_file(const std::vector<TrainingSample>& samples, const std::string& path) {
  std::string out;
  for (const auto& s : samples) {
    const json record = {
        {"schema_version", kTrainingSchemaVersion},
        {"source_annotation_id", s.source_annotation_id},
        {"image", s.image_ref},
        {"messages",
         json::array({{{"role", "user"},
                       {"content", json::array({{{"type", "image"}, {"image", s.image_ref}},
                                                {{"type", "text"}, {"text", s.instruction}}})}},
                      {{"role", "assistant"},
                       {"content", "Thought: " + s.instruction + "\nAction: " + s.target_action}}})}};
    out += record.dump();
    out += '\n';
  }
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  write_file(path, out);
  return samples.size();
}

std::vector<UiAnnotation> load_annotations(const std::string& path) {
  std::istringstream lines(read_file(path));
  std::vector<UiAnnotation> entries;
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(number);
    try {
      const json r = json::parse(line);
      UiAnnotation a;
      a.id = r.contains("id") ? (r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump())
                              : std::to_string(number);
      a.image_ref = first_string(r, {"image_ref", "image_path", "image"});
      const auto platform = platform_from_string(first_string(r, {"platform"}));
      if (!platform) throw Error(ErrorCode::kInvalidArgument, "unknown platform");
      a.platform = *platform;
      const json& size = r.contains("image_size") ? r["image_size"] : r.at("resolution");
      a.image_size = {size.at(0).get<int>(), size.at(1).get<int>()};
      const json& box = r.at("bbox");
      a.bbox = {static_cast<int>(box.at(0).get<double>()), static_cast<int>(box.at(1).get<double>()),
                static_cast<int>(box.at(2).get<double>()), static_cast<int>(box.at(3).get<double>())};
      if (a.image_size.width <= 0 || a.image_size.height <= 0 || a.bbox.x1 < 0 || a.bbox.y1 < 0 ||
          a.bbox.x1 > a.bbox.x2 || a.bbox.y1 > a.bbox.y2 || a.bbox.x2 >= a.image_size.width ||
          a.bbox.y2 >= a.image_size.height) {
        throw Error(ErrorCode::kInvalidArgument, "bbox outside the image");
      }
      a.element_type = first_string(r, {"element_type", "type"});
      a.ocr_text = first_string(r, {"ocr_text", "OCR", "ocr"});
      a.name = first_string(r, {"name"});
      a.purpose = first_string(r, {"purpose"});
      a.expected_result = first_string(r, {"expected_result", "expectation"});
      entries.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidArgument, where + ": " + e.what());
    }
  }
  return entries;
}

}  // namespace websight

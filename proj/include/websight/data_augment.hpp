#pragma once

// UI-annotation augmentation: keep the web subset of a labelled screenshot
// dataset and expand each element into templated click instructions.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "websight/action_grammar.hpp"
#include "websight/bench.hpp"
#include "websight/error.hpp"

namespace websight {

enum class Platform { kWeb, kMobile, kDesktop };
std::string_view to_string(Platform platform);
std::optional<Platform> platform_from_string(std::string_view text);

struct UiAnnotation {
  std::string id;
  std::string image_ref;
  Platform platform = Platform::kWeb;
  Extent image_size;
  BBox bbox;
  std::string element_type;     // "button"
  std::string ocr_text;         // visible text
  std::string name;             // "reminder button"
  std::string purpose;          // "set reminders"
  std::string expected_result;  // what activating the element leads to
};

// Placeholders: {element} element_type, {type} ocr_text, {name} name,
// {purpose} purpose, {function} expected_result.
struct InstructionTemplate {
  std::string pattern;
};

// Throws Error(kInvalidArgument) for placeholders outside the set above.
InstructionTemplate make_template(std::string pattern);

// "Click {element} to {purpose}", "Tap {type} for {function}", "Select {name}".
std::vector<InstructionTemplate> default_templates();

// One pattern per line; blank lines and lines starting with '#' are skipped.
std::vector<InstructionTemplate> load_templates(const std::string& path);

struct TrainingSample {
  std::string image_ref;
  std::string instruction;
  std::string target_action;  // canonical click in model space
  std::string source_annotation_id;
};

struct FilterSummary {
  int total = 0;
  int web = 0;
  int non_web = 0;
};

std::vector<UiAnnotation> filter_web_subset(const std::vector<UiAnnotation>& entries,
                                            FilterSummary* summary = nullptr);

// Throws Error(kMissingField) when a used placeholder's field is empty.
std::string render_template(const InstructionTemplate& tmpl, const UiAnnotation& entry);

struct AugmentNote {
  std::string annotation_id;
  ErrorCode code;
  std::string message;
};

struct AugmentResult {
  std::vector<TrainingSample> samples;
  std::vector<AugmentNote> notes;
};

// Per entry, picks up to `variants_per_entry` applicable templates without
// replacement using a generator seeded from (seed, entry position). The click
// target is the bbox center mapped into `model_extent`. Duplicate
// (image, instruction) pairs are dropped. Throws Error(kInvalidArgument) for
// empty `templates` or non-positive `variants_per_entry`.
AugmentResult augment(const std::vector<UiAnnotation>& entries,
                      const std::vector<InstructionTemplate>& templates, int variants_per_entry,
                      std::uint64_t seed, Extent model_extent = kDefaultModelExtent);

// Model-space point whose pixel image lies inside `bbox`, nearest to the bbox
// center; nullopt when the model grid is too coarse for the box.
std::optional<Point> click_target(const BBox& bbox, Extent image_size, Extent model_extent);

inline constexpr int kTrainingSchemaVersion = 1;

// Conversation-style JSONL; returns the number of records written.
// Throws Error(kIoFailure).
std::size_t emit_training_file(const std::vector<TrainingSample>& samples, const std::string& path);

// JSONL annotations. Canonical keys are the UiAnnotation field names with
// bbox [x1,y1,x2,y2] and image_size [w,h]; the published dataset's keys
// (type, OCR, expectation, resolution, image_path/image) are mapped too.
std::vector<UiAnnotation> load_annotations(const std::string& path);

}  // namespace websight

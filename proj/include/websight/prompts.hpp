#pragma once

// Canonical prompt texts, compiled in from resources/prompts/*.txt.
// Placeholders use `{name}` syntax.

#include <map>
#include <string>
#include <string_view>

namespace websight {
namespace prompts {

std::string_view planner_system();
std::string_view planner_user();
std::string_view planner_revision();
std::string_view reasoner_system();
std::string_view reasoner_user();
std::string_view grounder();
std::string_view judge();
std::string_view verifier_system();
std::string_view verifier_user();

}  // namespace prompts

// Single-pass `{name}` substitution. Placeholders without a value are left
// untouched, and substituted text is never rescanned.
std::string fill_template(std::string_view tmpl,
                          const std::map<std::string, std::string, std::less<>>& values);

}  // namespace websight

#pragma once

// Prompt texts. The files under prompts/ hold the same bytes; a unit test
// keeps the two in sync. Placeholders are {name}.

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace taxoforge::prompts {

inline constexpr std::string_view kGenerationSystem =
    R"(You are an expert in data management and knowledge modeling. You name the types of entities described by tables.)";

inline constexpr std::string_view kGenerationUser = R"(Task: Each row of the table below describes one entity. Identify the entity types of these entities.

Input: The table is serialized in CSV form. The first line lists the column headers and each following line is one row; commas separate the values. Cells longer than 50 tokens are cut to 50 tokens and end with "...".
```csv
{table}
```

Output: Answer solely with the names of the entity types, separated by commas. Do not add any explanation.)";

inline constexpr std::string_view kGenerationRepair = R"(Your previous answer could not be read as a list of entity type names:
{previous}

Answer again with solely the names of the entity types of the table below, written as one comma-separated line.
```csv
{table}
```)";

inline constexpr std::string_view kTaxonomySystem =
    R"(You are an expert in knowledge modeling. You organize entity types into is-a taxonomies.)";

inline constexpr std::string_view kDemonstration = R"(Write an example taxonomy of entity types for a domain of your choice. Build it from the top down, one layer at a time, and after each layer check that every entity type of the example has been placed; keep expanding until all of them are included. Write the finished taxonomy as an indented outline with one type per line, indenting each child two spaces deeper than its parent.)";

inline constexpr std::string_view kLayer = R"(Instruction: You are building an entity type taxonomy from the top down, one layer at a time. From the candidate list, select the entity types that are direct subtypes of the parent type given below. Use only names from the candidate list and attach them only to types already in the taxonomy. Write one edge per line in the form "Parent -> Child". If no candidate is a direct subtype, answer NONE.

Example taxonomy:
{demonstration}

Current taxonomy:
{outline}

Parent type: "{parent}"

Candidate list: {candidates})";

inline constexpr std::string_view kLayerRepair = R"(Your previous answer could not be parsed:
{previous}

Answer again using only lines of the form "Parent -> Child", or NONE.

{prompt})";

inline constexpr std::string_view kEdgeCheck = R"(Statement: {sentence}
Does the statement hold? Answer yes or no.)";

inline constexpr std::array<std::string_view, 3> kEdgeTemplates = {
    "{child} is a kind of {parent}.",
    "{child} is a type of {parent}.",
    "Every {child} is a {parent}.",
};

// File name under prompts/ for each text, for the sync test and for users
// who want to read them.
inline const std::map<std::string, std::string_view>& files() {
  static const std::map<std::string, std::string_view> m = {
      {"generation_system.txt", kGenerationSystem},
      {"generation_user.txt", kGenerationUser},
      {"generation_repair.txt", kGenerationRepair},
      {"taxonomy_system.txt", kTaxonomySystem},
      {"demonstration.txt", kDemonstration},
      {"layer.txt", kLayer},
      {"layer_repair.txt", kLayerRepair},
      {"edge_check.txt", kEdgeCheck},
  };
  return m;
}

// Single-pass substitution; substituted values are not rescanned.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace taxoforge::prompts

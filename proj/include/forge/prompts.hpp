#pragma once

#include <string>

#include "forge/error.hpp"
#include "forge/sample.hpp"

namespace forge {

// The two canonical prompt templates. Output is byte-stable for a fixed
// (task, instruction, description) triple; training-time export renders
// prompts from stored samples rather than baking them into the manifest.

namespace detail {

inline std::string box_prompt(const std::string& instruction, const std::string& description) {
  std::string s = "Output the bounding box in the image of the UI element corresponding to "
                  "the instruction \"" + instruction + "\"";
  if (!description.empty()) s += " and the description \"" + description + "\"";
  s += " with grounding.\n"
       "\n"
       "Requirements for the output:\n"
       "- Return only the bounding box coordinates (x0, y0, x1, y1)\n"
       "- Coordinates must be normalized to the range [0, 1]\n"
       "- Round each coordinate to three decimal places\n"
       "- Format the output as strictly (x0, y0, x1, y1) without any additional text.";
  return s;
}

inline std::string point_prompt(const std::string& instruction) {
  return "You are a GUI agent. Based on the UI screenshot provided, please locate the exact "
         "position of the element that matches the instruction given by the user.\n"
         "\n"
         "Requirements for the output:\n"
         "- Return only the point (x, y) representing the center of the target element\n"
         "- Coordinates must be normalized to the range [0, 1]\n"
         "- Round each coordinate to three decimal places\n"
         "- Format the output as strictly (x, y) without any additional text\n"
         "\n"
         "Instruction: " + instruction;
}

}  // namespace detail

/// Renders the canonical prompt for a task kind with the instruction
/// substituted. The optional description slot only exists for box
/// prediction; it is omitted entirely when empty.
inline std::string render_prompt(TaskKind task, const std::string& instruction,
                                 const std::string& description = "") {
  if (instruction.empty()) throw ValidationError("render_prompt: instruction must be non-empty");
  if (task == TaskKind::BoxPrediction) return detail::box_prompt(instruction, description);
  return detail::point_prompt(instruction);
}

}  // namespace forge

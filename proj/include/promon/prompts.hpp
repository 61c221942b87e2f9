#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promon::prompts {

// History slot value on the first turn (the template keeps an unconditional
// "History CoT:" line).
inline constexpr std::string_view kFirstTurnHistory = "None";

/// The fixed instruction block of the estimation prompt (everything above the
/// per-turn slots); used as the system role on the chat wire.
const std::string& estimation_system_text();

/// The full estimation prompt with the history, image placeholders, and
/// question slots filled. image_count <image> tags are emitted.
std::string render_estimation_prompt(std::string_view history_cot, int image_count,
                                     std::string_view question);

/// The per-turn user text split around the image placeholders, for wire
/// formats that interleave text and image parts.
struct EstimationUserParts {
  std::string before_images;  // ends just after "Images: "
  std::string after_images;   // starts with the newline before "Question:"
};
EstimationUserParts estimation_user_parts(std::string_view history_cot,
                                          std::string_view question);

/// Prompt asking a text model for a distractor task description that shares
/// the given initial steps and uses the listed environment objects.
std::string render_distractor_prompt(std::string_view task_description,
                                     const std::vector<std::string>& initial_steps,
                                     const std::vector<std::string>& objects);

/// Prompt asking a text model to write the training chain of thought for one
/// turn. progress_percent is the integer the reply must echo in its answer.
std::string render_cot_generation_prompt(std::string_view task_description,
                                         const std::vector<std::string>& completed_narrations,
                                         const std::vector<std::string>& uncompleted_narrations,
                                         int progress_percent);

/// Prompt asking a text model to turn a chain of thought into a JSON step
/// ledger ({"completed": [], "in_progress": [], "pending": []}).
std::string render_step_status_prompt(std::string_view cot_text);

}  // namespace promon::prompts

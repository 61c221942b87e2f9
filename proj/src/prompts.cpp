#include "promon/prompts.hpp"

#include "promon/util.hpp"

namespace promon::prompts {

namespace {

// clang-format off
const char kEstimationSystem[] =
"You are a professional assistant skilled in understanding temporal videos and estimating task progress.\n"
"You will be given a history chain of thought (CoT) summarizing completed and remaining steps, along with incremental egocentric video frames.\n"
"Your task is to:\n"
"1. Analyze the new frames to detect any completed actions or state changes.\n"
"2. Update the list of completed steps and revise the remaining steps accordingly. (Merge, split, or reorder steps if necessary)\n"
"3. Estimate the overall task completion progress as a percentage, based on the proportion of completed steps made toward the full task. (eg. finish 1 of 3 tasks, progress is 33~66)\n"
"Use the following output format:\n"
"<think>\n"
"[Updated chain of thought: clearly list revised completed steps and remaining steps.]\n"
"</think>\n"
"<answer>\n"
"[Task completion percentage based on the proportion of completed steps, an integer between 0 and 100]\n"
"</answer>\n";

const char kDistractorHeader[] =
"You are given a task description, a sequence of initial steps, and a set of available objects in the environment.\n"
"\n"
"Your goal is to generate a distractor task description that meets the following conditions:\n"
"1. The distractor task description must share the same initial steps.\n"
"2. The distractor task must ultimately be different from the original task.\n"
"3. The distractor should have the same number of substeps as the original description.\n"
"4. The distractor task should be constructed using one or more objects from the provided object list.\n"
"5. The distractor should be natural and plausible in the given environment.\n"
"\n"
"Only output the distractor task description, without any additional explanations or context.\n"
"\n"
"Example1:\n"
"Input:\n"
"- Original task description: Put a wine glass in the refrigerator.\n"
"- Initial steps: \n"
"    Turn around and go to the kitchen counter, to the right of the sink.\n"
"- Objects: Apple, SaltShaker, Mug, Pot, Cup, Egg, SoapBottle, Bread, DishSponge, Plate\n"
"\n"
"Output:\n"
"Place the apple from the counter onto the plate.\n"
"---\n"
"\n"
"Example2:\n"
"Input:\n"
"- Original task description: Put heated egg on kitchen table.\n"
"- Initial steps: \n"
"    walk to face sink\n"
"    pick up egg from sink\n"
"    walk to face microwave\n"
"- Objects: Bowl, Pan, Lettuce, PepperShaker, Cup, Egg, SoapBottle, Bread, DishSponge, ButterKnife, Apple, SaltShaker, Mug, Pot, Potato, Knife, Plate, Spoon, Fork, Tomato, Spatula\n"
"\n"
"Output:\n"
"Put the egg into the bowl and pick up the bowl.\n"
"\n"
"Now it's your turn:\n"
"\n";

const char kCotGenHeader[] =
"You will be given:\n"
"1. A **video** and a question about the **progress** of a **task** shown in the video.\n"
"2. A list of **completed narrations** and **uncompleted narrations**.\n"
"\n"
"Your job is to generate a human-style chain of thought describing the task's progress, based on your understanding of how the task is completed and the provided completed and uncompleted narrations.\n"
"\n"
"You must:\n"
"- Analyze what important steps have been completed and how they contribute to the overall task progress.\n"
"- Analyze what key steps remain uncompleted and how crucial they are for finishing the task.\n"
"- Give a final estimated progress percentage **based on the proportion of completed steps to the total number of steps.**\n"
"- Treat the narrations only as background guidance to simulate watching the video, and base your reasoning on the video content. Do not use any language implying reliance on the narrations or mentioning the phrase \"completed narrations\" or \"uncompleted narrations.\"\n"
"---\n"
"\n"
"Now begin your analysis:\n"
"\n";
// clang-format on

std::string joined_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    out += item;
    out += '\n';
  }
  if (!out.empty()) out.pop_back();
  return out;
}

std::string indented_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    out += "    ";
    out += item;
    out += '\n';
  }
  return out;
}

}  // namespace

const std::string& estimation_system_text() {
  static const std::string text = kEstimationSystem;
  return text;
}

std::string render_estimation_prompt(std::string_view history_cot, int image_count,
                                     std::string_view question) {
  EstimationUserParts parts = estimation_user_parts(history_cot, question);
  std::string out = estimation_system_text();
  out += '\n';
  out += parts.before_images;
  for (int i = 0; i < image_count; ++i) out += "<image>";
  out += parts.after_images;
  return out;
}

EstimationUserParts estimation_user_parts(std::string_view history_cot,
                                          std::string_view question) {
  EstimationUserParts parts;
  parts.before_images = "History CoT: ";
  parts.before_images += history_cot;
  parts.before_images += "\nImages: ";
  parts.after_images = "\nQuestion: ";
  parts.after_images += question;
  parts.after_images += "\nOutput: \n";
  return parts;
}

std::string render_distractor_prompt(std::string_view task_description,
                                     const std::vector<std::string>& initial_steps,
                                     const std::vector<std::string>& objects) {
  std::string out = kDistractorHeader;
  out += "Original task description: ";
  out += task_description;
  out += "\n- Initial steps: \n";
  out += indented_lines(initial_steps);
  out += "- Objects: ";
  out += util::join(objects, ", ");
  out += "\n\nOutput: \n";
  return out;
}

std::string render_cot_generation_prompt(std::string_view task_description,
                                         const std::vector<std::string>& completed_narrations,
                                         const std::vector<std::string>& uncompleted_narrations,
                                         int progress_percent) {
  const std::string progress = std::to_string(progress_percent);
  std::string out = kCotGenHeader;
  out += "Task:  \n";
  out += task_description;
  out += "\n\nCompleted Narrations:\n";
  out += joined_lines(completed_narrations);
  out += "\n\nUncompleted Narrations:\n";
  out += joined_lines(uncompleted_narrations);
  out += "\n\nProgress:\n";
  out += progress;
  out += "\n\nOutput:\n";
  out += "\nYour output should follow this format:\n<think>\n";
  out += "To determine the progress of the task \"";
  out += util::to_lower(task_description);
  out += "\", let's analyze the video:\n";
  out += "[Explain which actions were completed and their significance in moving toward the goal.]\n";
  out += "[Explain which key actions remain uncompleted and why they are crucial.]\n";
  out +=
      "[Conclude with a reasonable progress estimate **based on the proportion of completed "
      "steps to the total number of steps**.]\n";
  out += "</think>\n<answer>\n";
  out += "You must strictly output the same final progress percentage I provided above: ";
  out += progress;
  out += "\n</answer>\n";
  return out;
}

std::string render_step_status_prompt(std::string_view cot_text) {
  std::string out =
      "Extract the step status from the following task-progress reasoning.\n"
      "Reply with a single JSON object: {\"completed\": [], \"in_progress\": [], "
      "\"pending\": []}.\n"
      "Each array holds short step descriptions taken from the reasoning. "
      "Output only the JSON object.\n"
      "\nReasoning:\n";
  out += cot_text;
  out += '\n';
  return out;
}

}  // namespace promon::prompts

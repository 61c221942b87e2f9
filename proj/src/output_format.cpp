#include "promon/output_format.hpp"

#include <charconv>

#include "promon/util.hpp"

namespace promon {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

ParseFailure fail(ParseFailureReason reason, std::string detail) {
  return ParseFailure{reason, std::move(detail)};
}

}  // namespace

const char* to_string(ParseFailureReason r) {
  switch (r) {
    case ParseFailureReason::missing_think: return "missing_think";
    case ParseFailureReason::missing_answer: return "missing_answer";
    case ParseFailureReason::non_integer: return "non_integer";
    case ParseFailureReason::out_of_range: return "out_of_range";
    case ParseFailureReason::trailing_garbage: return "trailing_garbage";
  }
  return "unknown";
}

ParseResult parse_model_output(std::string_view raw) {
  const auto think_open = raw.find(kThinkOpen);
  if (think_open == std::string_view::npos) {
    return fail(ParseFailureReason::missing_think, "no <think> block");
  }
  if (!util::only_whitespace(raw.substr(0, think_open))) {
    return fail(ParseFailureReason::trailing_garbage, "content before <think>");
  }
  const auto body_start = think_open + kThinkOpen.size();
  const auto think_close = raw.find(kThinkClose, body_start);
  if (think_close == std::string_view::npos) {
    return fail(ParseFailureReason::missing_think, "unterminated <think> block");
  }
  const auto after_think = think_close + kThinkClose.size();

  const auto answer_open = raw.find(kAnswerOpen, after_think);
  if (answer_open == std::string_view::npos) {
    return fail(ParseFailureReason::missing_answer, "no <answer> block");
  }
  if (!util::only_whitespace(raw.substr(after_think, answer_open - after_think))) {
    return fail(ParseFailureReason::trailing_garbage, "content between blocks");
  }
  const auto answer_start = answer_open + kAnswerOpen.size();
  const auto answer_close = raw.find(kAnswerClose, answer_start);
  if (answer_close == std::string_view::npos) {
    return fail(ParseFailureReason::missing_answer, "unterminated <answer> block");
  }
  if (!util::only_whitespace(raw.substr(answer_close + kAnswerClose.size()))) {
    return fail(ParseFailureReason::trailing_garbage, "content after </answer>");
  }

  const std::string_view answer =
      util::trim(raw.substr(answer_start, answer_close - answer_start));
  if (answer.empty()) return fail(ParseFailureReason::non_integer, "empty answer");
  int value = 0;
  const auto [ptr, ec] = std::from_chars(answer.data(), answer.data() + answer.size(), value);
  if (ec != std::errc{} || ptr != answer.data() + answer.size()) {
    return fail(ParseFailureReason::non_integer,
                "answer is not an integer: " + std::string(answer));
  }
  if (value < 0 || value > 100) {
    return fail(ParseFailureReason::out_of_range,
                "answer " + std::to_string(value) + " outside [0, 100]");
  }

  return ParsedOutput{std::string(raw.substr(body_start, think_close - body_start)), value};
}

}  // namespace promon

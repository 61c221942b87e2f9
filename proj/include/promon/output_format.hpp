#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace promon {

enum class ParseFailureReason {
  missing_think,
  missing_answer,
  non_integer,
  out_of_range,
  trailing_garbage,
};

const char* to_string(ParseFailureReason r);

struct ParsedOutput {
  std::string cot_text;  // exactly what was inside the <think> block
  int progress = 0;      // the <answer> integer, in [0, 100]
};

struct ParseFailure {
  ParseFailureReason reason = ParseFailureReason::missing_think;
  std::string detail;
};

using ParseResult = std::variant<ParsedOutput, ParseFailure>;

/// Accepts exactly one <think>...</think> block followed by one
/// <answer>...</answer> block whose content is an integer in [0, 100];
/// whitespace is permitted around and between blocks, nothing else.
ParseResult parse_model_output(std::string_view raw);

inline bool parse_ok(const ParseResult& r) { return std::holds_alternative<ParsedOutput>(r); }

}  // namespace promon

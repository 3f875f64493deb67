#include "dci/prompting.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "dci/text.hpp"

namespace dci {

namespace {

// "None" must appear in the rendered prompt exactly once, so only the
// null-answer instruction may spell it out; the other parts refer to
// "the null answer" instead.
constexpr std::string_view kRulesPreamble =
    "You are shown one image and a numbered list of candidate class names. "
    "Decide which candidate, if any, names the main object in the image.";

constexpr std::string_view kNoneInstruction =
    "If no candidate matches the image, answer exactly \"None\".";

constexpr std::string_view kAntiLaziness =
    "Do not default to the null answer: whenever any candidate could "
    "plausibly match the image, pick the most probable one.";

constexpr std::string_view kFormatConstraints =
    "Your reply must be a single line containing either one candidate name "
    "copied verbatim from the list (same casing, same plurality, no extra "
    "words or punctuation) or the null answer.";

constexpr std::string_view kExemplar =
    "Example:\n"
    "Candidates:\n"
    "1. golden retriever\n"
    "2. sports car\n"
    "3. acoustic guitar\n"
    "Answer: sports car";

std::string numbered_candidates(const LabelSet& group) {
  std::string out = "Candidates:";
  for (std::size_t i = 0; i < group.size(); ++i) {
    out += '\n';
    out += std::to_string(i + 1);
    out += ". ";
    out += group[i];
  }
  return out;
}

void replace_all(std::string& text, std::string_view slot,
                 std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
  }
}

}  // namespace

PromptTemplate PromptTemplate::standard() {
  PromptTemplate t;
  t.rules_preamble = kRulesPreamble;
  t.none_instruction = kNoneInstruction;
  t.anti_laziness_clause = kAntiLaziness;
  t.format_constraints = kFormatConstraints;
  t.one_shot_exemplar = kExemplar;
  return t;
}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("PromptTemplate: cannot open template file '" +
                             path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  PromptTemplate t = standard();
  t.layout = buffer.str();
  if (t.layout.find("{CANDIDATES}") == std::string::npos) {
    throw std::runtime_error(
        "PromptTemplate: template file '" + path.string() +
        "' does not contain the {CANDIDATES} slot");
  }
  return t;
}

InferenceOutcome InferenceOutcome::match(std::string label) {
  return InferenceOutcome(OutcomeKind::kMatch, std::move(label));
}

InferenceOutcome InferenceOutcome::none() {
  return InferenceOutcome(OutcomeKind::kNoneAnswer, {});
}

InferenceOutcome InferenceOutcome::invalid(std::string raw_text) {
  return InferenceOutcome(OutcomeKind::kInvalid, std::move(raw_text));
}

const std::string& InferenceOutcome::label() const {
  if (kind_ != OutcomeKind::kMatch) {
    throw std::logic_error("InferenceOutcome::label: outcome is not a match");
  }
  return payload_;
}

const std::string& InferenceOutcome::raw_text() const {
  if (kind_ != OutcomeKind::kInvalid) {
    throw std::logic_error(
        "InferenceOutcome::raw_text: outcome is not invalid");
  }
  return payload_;
}

ParsePolicy::ParsePolicy(ParseMode m, int retries)
    : mode(m), max_retries(retries) {
  if (retries < 0 || retries > 10) {
    throw std::invalid_argument(
        "ParsePolicy: max_retries must be in [0, 10], got " +
        std::to_string(retries));
  }
}

std::string build_prompt(const PromptTemplate& t, const LabelSet& group) {
  if (group.empty()) {
    throw std::invalid_argument("build_prompt: candidate group is empty");
  }

  const std::string candidates = numbered_candidates(group);
  if (!t.layout.empty()) {
    std::string out = t.layout;
    replace_all(out, "{CANDIDATES}", candidates);
    replace_all(out, "{EXEMPLAR}", t.one_shot_exemplar);
    return out;
  }

  std::string out;
  out.reserve(512 + candidates.size());
  out += t.rules_preamble;
  out += "\n\n";
  out += candidates;
  out += "\n\n";
  out += t.none_instruction;
  out += '\n';
  out += t.anti_laziness_clause;
  out += '\n';
  out += t.format_constraints;
  out += "\n\n";
  out += t.one_shot_exemplar;
  out += "\n\nAnswer:";
  return out;
}

InferenceOutcome parse_response(std::string_view raw, const LabelSet& group,
                                const ParsePolicy& policy) {
  const std::string_view trimmed = text::trim(raw);

  if (policy.mode == ParseMode::kStrict) {
    for (const std::string& label : group) {
      if (trimmed == label) {
        return InferenceOutcome::match(label);
      }
    }
    if (text::iequals(trimmed, "None")) {
      return InferenceOutcome::none();
    }
    return InferenceOutcome::invalid(std::string(raw));
  }

  const std::string wanted = text::normalize_for_match(trimmed);
  const std::string* matched = nullptr;
  std::size_t match_count = 0;
  for (const std::string& label : group) {
    if (text::normalize_for_match(label) == wanted) {
      ++match_count;
      matched = &label;
    }
  }
  if (match_count == 1) {
    return InferenceOutcome::match(*matched);
  }
  if (match_count == 0 && wanted == "none") {
    return InferenceOutcome::none();
  }
  return InferenceOutcome::invalid(std::string(raw));
}

}  // namespace dci

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "dci/label_space.hpp"

namespace dci {

/// Conquer-phase prompt template.
///
/// The composed rendering order is fixed: rules preamble, numbered candidate
/// list, null-answer instruction, anti-laziness clause, format constraints,
/// one-shot exemplar, answer cue. A raw `layout` (loaded from a file with
/// {CANDIDATES} and {EXEMPLAR} slots) replaces the composed form entirely.
///
/// Rendering any non-empty group yields a prompt that lists every candidate
/// exactly once, contains the literal token "None" exactly once and embeds
/// the exemplar.
struct PromptTemplate {
  std::string rules_preamble;
  std::string none_instruction;
  std::string anti_laziness_clause;
  std::string format_constraints;
  std::string one_shot_exemplar;

  /// Raw layout override; empty means "compose from the parts above".
  std::string layout;

  /// The wording shipped with this repository.
  static PromptTemplate standard();

  /// Loads a raw layout file. {CANDIDATES} is required, {EXEMPLAR} optional.
  static PromptTemplate from_file(const std::filesystem::path& path);
};

enum class OutcomeKind { kMatch, kNoneAnswer, kInvalid };

/// Parsed model answer: a candidate from the queried group, the null
/// answer, or an invalid reply kept verbatim.
class InferenceOutcome {
 public:
  static InferenceOutcome match(std::string label);
  static InferenceOutcome none();
  static InferenceOutcome invalid(std::string raw_text);

  OutcomeKind kind() const noexcept { return kind_; }
  bool is_match() const noexcept { return kind_ == OutcomeKind::kMatch; }
  bool is_none() const noexcept { return kind_ == OutcomeKind::kNoneAnswer; }
  bool is_invalid() const noexcept { return kind_ == OutcomeKind::kInvalid; }

  /// Matched label; only valid for kMatch.
  const std::string& label() const;
  /// Raw reply text; only valid for kInvalid.
  const std::string& raw_text() const;

  friend bool operator==(const InferenceOutcome& a, const InferenceOutcome& b) {
    return a.kind_ == b.kind_ && a.payload_ == b.payload_;
  }

 private:
  InferenceOutcome(OutcomeKind kind, std::string payload)
      : kind_(kind), payload_(std::move(payload)) {}

  OutcomeKind kind_;
  std::string payload_;
};

enum class ParseMode { kStrict, kNormalized };

/// How raw replies are matched against candidates, and how many times an
/// invalid reply is re-queried before being coerced to the null answer.
struct ParsePolicy {
  ParseMode mode = ParseMode::kStrict;
  int max_retries = 2;

  ParsePolicy() = default;
  ParsePolicy(ParseMode m, int retries);
};

/// Renders the prompt for one candidate group. Throws on an empty group.
std::string build_prompt(const PromptTemplate& t, const LabelSet& group);

/// Classifies a raw reply against the queried group.
///
/// Strict mode: trims, then exact (case-sensitive) equality against each
/// candidate, then case-insensitive equality with "None"; anything else is
/// invalid. Normalized mode additionally lowercases, collapses internal
/// whitespace and strips trailing punctuation on both sides; exactly one
/// matching candidate is required.
InferenceOutcome parse_response(std::string_view raw, const LabelSet& group,
                                const ParsePolicy& policy);

}  // namespace dci

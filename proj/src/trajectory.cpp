#include "refineloop/trajectory.hpp"

#include <algorithm>
#include <cctype>

namespace refineloop {

namespace {

constexpr std::array<std::string_view, kActionTagCount> kTagNames = {
    "think", "search", "documents", "refine", "answer"};

bool is_ws_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
  });
}

struct TagToken {
  std::size_t pos = 0;     // offset of '<'
  std::size_t end = 0;     // offset one past '>'
  bool closing = false;
  bool known = false;
  ActionTag tag = ActionTag::think;
  std::string name;
};

// Finds the next tag-shaped token at or after `from`: '<' '/'? [A-Za-z][A-Za-z0-9_]* '>'.
std::optional<TagToken> next_tag_token(std::string_view raw, std::size_t from) {
  for (std::size_t i = from; i < raw.size(); ++i) {
    if (raw[i] != '<') continue;
    std::size_t j = i + 1;
    bool closing = false;
    if (j < raw.size() && raw[j] == '/') {
      closing = true;
      ++j;
    }
    std::size_t name_start = j;
    if (j >= raw.size() || !std::isalpha(static_cast<unsigned char>(raw[j]))) continue;
    while (j < raw.size() &&
           (std::isalnum(static_cast<unsigned char>(raw[j])) || raw[j] == '_')) {
      ++j;
    }
    if (j >= raw.size() || raw[j] != '>') continue;
    TagToken tok;
    tok.pos = i;
    tok.end = j + 1;
    tok.closing = closing;
    tok.name = std::string(raw.substr(name_start, j - name_start));
    if (auto t = tag_from_name(tok.name)) {
      tok.known = true;
      tok.tag = *t;
    }
    return tok;
  }
  return std::nullopt;
}

}  // namespace

std::string_view tag_name(ActionTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::string open_tag(ActionTag tag) {
  return "<" + std::string(tag_name(tag)) + ">";
}

std::string close_tag(ActionTag tag) {
  return "</" + std::string(tag_name(tag)) + ">";
}

std::optional<ActionTag> tag_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kActionTagCount; ++i) {
    if (kTagNames[i] == name) return static_cast<ActionTag>(i);
  }
  return std::nullopt;
}

std::string_view termination_reason_name(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::answered: return "answered";
    case TerminationReason::length_budget: return "length_budget";
    case TerminationReason::search_budget_then_no_answer:
      return "search_budget_then_no_answer";
    case TerminationReason::malformed: return "malformed";
  }
  return "answered";
}

std::optional<TerminationReason> termination_reason_from_name(std::string_view name) {
  if (name == "answered") return TerminationReason::answered;
  if (name == "length_budget") return TerminationReason::length_budget;
  if (name == "search_budget_then_no_answer")
    return TerminationReason::search_budget_then_no_answer;
  if (name == "malformed") return TerminationReason::malformed;
  return std::nullopt;
}

std::size_t Trajectory::count(ActionTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(steps.begin(), steps.end(), [tag](const Step& s) { return s.tag == tag; }));
}

Trajectory parse_trajectory(std::string_view raw, std::string_view question, ParseMode mode) {
  Trajectory out;
  out.question = std::string(question);

  const bool strict = mode == ParseMode::strict;
  std::size_t pos = 0;
  bool seen_answer = false;

  auto handle_free_text = [&](std::string_view segment, std::size_t at) {
    if (segment.empty() || is_ws_only(segment)) return;
    if (seen_answer) {
      if (strict) throw ParseError(ParseErrorKind::AnswerNotLast, "text after answer block", at);
      return;  // lenient: dropped
    }
    if (out.steps.empty()) {
      out.steps.push_back(
          Step{ActionTag::think, std::string(segment), StepOrigin::policy});
      return;
    }
    if (strict) {
      throw ParseError(ParseErrorKind::StrayText, "free text between blocks", at);
    }
    // lenient: dropped
  };

  while (pos < raw.size()) {
    std::optional<TagToken> tok = next_tag_token(raw, pos);
    if (!tok) {
      handle_free_text(raw.substr(pos), pos);
      break;
    }
    handle_free_text(raw.substr(pos, tok->pos - pos), pos);

    if (!tok->known) {
      if (strict) {
        throw ParseError(ParseErrorKind::UnknownTag, "unknown tag <" + tok->name + ">", tok->pos);
      }
      pos = tok->end;  // lenient: skipped like free text
      continue;
    }
    if (tok->closing) {
      throw ParseError(ParseErrorKind::UnbalancedTag,
                       "close tag </" + tok->name + "> without open", tok->pos);
    }

    // Inside an open block: scan forward for the matching close tag. Unknown
    // tags inside content are allowed in lenient mode only.
    std::size_t content_start = tok->end;
    std::size_t scan = content_start;
    std::optional<TagToken> inner;
    while (true) {
      inner = next_tag_token(raw, scan);
      if (!inner) {
        throw ParseError(ParseErrorKind::UnbalancedTag,
                         "open tag <" + tok->name + "> without close", tok->pos);
      }
      if (!inner->known) {
        if (strict) {
          throw ParseError(ParseErrorKind::UnknownTag, "unknown tag <" + inner->name + ">",
                           inner->pos);
        }
        scan = inner->end;
        continue;
      }
      break;
    }
    if (!inner->closing) {
      throw ParseError(ParseErrorKind::NestedTag,
                       "tag <" + inner->name + "> nested inside <" + tok->name + ">", inner->pos);
    }
    if (inner->tag != tok->tag) {
      throw ParseError(ParseErrorKind::UnbalancedTag,
                       "open tag <" + tok->name + "> closed by </" + inner->name + ">", tok->pos);
    }

    if (seen_answer) {
      if (strict) {
        throw ParseError(ParseErrorKind::AnswerNotLast, "block after answer block", tok->pos);
      }
      pos = inner->end;  // lenient: dropped
      continue;
    }

    Step step;
    step.tag = tok->tag;
    step.content = std::string(raw.substr(content_start, inner->pos - content_start));
    step.origin = (tok->tag == ActionTag::documents) ? StepOrigin::engine : StepOrigin::policy;
    out.steps.push_back(std::move(step));
    if (tok->tag == ActionTag::answer) seen_answer = true;
    pos = inner->end;
  }

  if (!out.steps.empty() && out.steps.back().tag == ActionTag::answer) {
    out.terminated = true;
    out.termination_reason = TerminationReason::answered;
  }
  return out;
}

DerivedOutputs derive_outputs(const Trajectory& trajectory) {
  DerivedOutputs out;
  for (const Step& step : trajectory.steps) {
    out.counts[static_cast<std::size_t>(step.tag)] += 1;
    if (step.tag == ActionTag::refine) {
      if (!out.refine_concat.empty()) out.refine_concat.push_back(' ');
      out.refine_concat += step.content;
    }
  }
  if (trajectory.terminated &&
      trajectory.termination_reason == TerminationReason::answered &&
      !trajectory.steps.empty() && trajectory.steps.back().tag == ActionTag::answer) {
    out.final_answer = trajectory.steps.back().content;
  }
  return out;
}

std::string serialize_trajectory(const Trajectory& trajectory) {
  std::string out;
  for (const Step& step : trajectory.steps) {
    out += open_tag(step.tag);
    out += step.content;
    out += close_tag(step.tag);
  }
  return out;
}

std::vector<Step> salvage_steps(std::string_view raw) {
  std::vector<Step> steps;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::optional<TagToken> tok = next_tag_token(raw, pos);
    if (!tok) break;
    if (!tok->known || tok->closing) {
      pos = tok->end;
      continue;
    }
    // Require the very next known tag token to be the matching close.
    std::size_t scan = tok->end;
    std::optional<TagToken> inner;
    while (true) {
      inner = next_tag_token(raw, scan);
      if (!inner) break;
      if (!inner->known) {
        scan = inner->end;
        continue;
      }
      break;
    }
    if (!inner) break;
    if (!inner->closing || inner->tag != tok->tag) {
      pos = tok->end;
      continue;
    }
    Step step;
    step.tag = tok->tag;
    step.content = std::string(raw.substr(tok->end, inner->pos - tok->end));
    step.origin = (tok->tag == ActionTag::documents) ? StepOrigin::engine : StepOrigin::policy;
    steps.push_back(std::move(step));
    pos = inner->end;
  }
  return steps;
}

bool contains_tag_literal(std::string_view text) {
  for (std::size_t i = 0; i < kActionTagCount; ++i) {
    ActionTag tag = static_cast<ActionTag>(i);
    if (text.find(open_tag(tag)) != std::string_view::npos) return true;
    if (text.find(close_tag(tag)) != std::string_view::npos) return true;
  }
  return false;
}

}  // namespace refineloop

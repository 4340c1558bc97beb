#include "refineloop/rollout.hpp"

#include <stdexcept>

#include "refineloop/text.hpp"

namespace refineloop {

namespace {

constexpr std::string_view kPromptHead =
    "You are a helpful assistant who is good at answering questions with multi-turn search "
    "engine calling. To answer questions, you must first reason through the available "
    "information using <think> and </think>. If you identify missing knowledge, you may issue "
    "a search request using <search> query </search> at any time. The retrieval system will "
    "provide you with the three most relevant documents enclosed in <documents> and "
    "</documents>. ";

constexpr std::string_view kRefineSentence =
    "After each search, you need to summarize and refine the existing documents in <refine> "
    "and </refine>. ";

constexpr std::string_view kPromptTail =
    "You may send multiple search requests if needed. Once you have sufficient information, "
    "provide a concise final answer using <answer> and </answer>.\n";

// Extracts the query of the search block that `text` ends with (text ends in
// "</search>"). Returns false when there is no matching open tag.
bool last_search_content(std::string_view text, std::string& out) {
  constexpr std::string_view kOpen = "<search>";
  constexpr std::string_view kClose = "</search>";
  if (text.size() < kClose.size() ||
      text.substr(text.size() - kClose.size()) != kClose) {
    return false;
  }
  std::size_t open = text.rfind(kOpen);
  if (open == std::string_view::npos) return false;
  std::size_t start = open + kOpen.size();
  std::size_t end = text.size() - kClose.size();
  if (text.substr(start, end - start).find(kClose) != std::string_view::npos) return false;
  out = std::string(text.substr(start, end - start));
  return true;
}

}  // namespace

std::string build_prompt(const std::string& question, TemplateMode mode) {
  if (question.empty()) throw std::invalid_argument("question must be non-empty");
  std::string prompt(kPromptHead);
  if (mode == TemplateMode::refine) prompt += kRefineSentence;
  prompt += kPromptTail;
  prompt += "<user> Question: " + question + " </user>";
  return prompt;
}

TrajectoryLogRecord RolloutRecord::to_log_record(const QaExample& example) const {
  TrajectoryLogRecord rec;
  rec.id = example.id;
  rec.question = example.question;
  rec.gold_answers = example.gold_answers;
  rec.steps = trajectory.steps;
  rec.termination_reason =
      trajectory.termination_reason.value_or(TerminationReason::length_budget);
  return rec;
}

RolloutRecord run_rollout(const Policy& policy, const RetrievalIndex& index,
                          const QaExample& example, const RolloutConfig& cfg,
                          const RetrievalConfig& rcfg, std::uint64_t seed) {
  RolloutRecord rec;
  rec.example_id = example.id;
  rec.seed = seed;

  const std::string prompt = build_prompt(example.question, cfg.template_mode);
  std::unique_ptr<PolicySession> session = policy.start(prompt, seed);

  std::string transcript;
  std::string text_so_far = prompt;
  bool answered = false;
  bool forged_documents = false;

  while (true) {
    int remaining = cfg.max_response_tokens - rec.policy_tokens;
    if (remaining <= 0) break;

    GenerationRequest req;
    req.prompt = text_so_far;
    req.stop_sequences = {"</search>", "</answer>"};
    req.max_new_tokens = remaining;
    req.temperature = cfg.temperature;
    PolicySample sample = session->generate(req);

    rec.policy_tokens += static_cast<int>(count_ws_tokens(sample.text));
    transcript += sample.text;
    text_so_far += sample.text;

    if (sample.text.find(open_tag(ActionTag::documents)) != std::string::npos ||
        sample.text.find(close_tag(ActionTag::documents)) != std::string::npos) {
      forged_documents = true;
      break;
    }

    if (sample.stop_hit == "</search>") {
      rec.searches_requested += 1;
      std::string query_text;
      if (!last_search_content(transcript, query_text)) {
        forged_documents = true;  // stray close tag; handled as malformed below
        break;
      }
      std::string block;
      if (rec.searches_requested <= cfg.max_search_actions) {
        std::vector<Document> docs;
        try {
          docs = index.query(query_text, rcfg);
        } catch (const RetrievalError& e) {
          if (e.kind() != RetrievalErrorKind::EmptyQuery) throw;
        }
        rec.retrieved.push_back(docs);
        rec.retrieval_calls += 1;
        block = render_documents_block(docs, rcfg);
      } else {
        rec.sentinel_blocks += 1;
        block = std::string(kBudgetSentinel);
      }
      std::string injected = open_tag(ActionTag::documents) + block +
                             close_tag(ActionTag::documents);
      session->observe(injected);
      transcript += injected;
      text_so_far += injected;
      continue;
    }
    if (sample.stop_hit == "</answer>") {
      answered = true;
      break;
    }
    // No stop sequence: the policy stopped emitting or hit the segment cap.
    break;
  }

  rec.stream = session->stream();

  try {
    if (forged_documents) throw ParseError(ParseErrorKind::UnknownTag, "forged block", 0);
    rec.trajectory = parse_trajectory(transcript, example.question, ParseMode::strict);
    if (answered && rec.trajectory.terminated) {
      // reason already set to answered by the parser
    } else if (rec.searches_requested > cfg.max_search_actions) {
      rec.trajectory.terminated = true;
      rec.trajectory.termination_reason = TerminationReason::search_budget_then_no_answer;
    } else {
      rec.trajectory.terminated = true;
      rec.trajectory.termination_reason = TerminationReason::length_budget;
    }
  } catch (const ParseError&) {
    rec.trajectory = Trajectory{};
    rec.trajectory.question = example.question;
    rec.trajectory.steps = salvage_steps(transcript);
    rec.trajectory.terminated = true;
    if (rec.policy_tokens >= cfg.max_response_tokens) {
      rec.trajectory.termination_reason = TerminationReason::length_budget;
    } else {
      rec.trajectory.termination_reason = TerminationReason::malformed;
    }
  }
  return rec;
}

std::vector<RolloutRecord> run_group(const Policy& policy, const RetrievalIndex& index,
                                     const QaExample& example, const RolloutConfig& cfg,
                                     const RetrievalConfig& rcfg, std::uint64_t seed) {
  std::vector<RolloutRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.group_size));
  for (int i = 0; i < cfg.group_size; ++i) {
    out.push_back(run_rollout(policy, index, example, cfg, rcfg, seed + static_cast<std::uint64_t>(i)));
  }
  return out;
}

}  // namespace refineloop

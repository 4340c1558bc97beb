#include "refineloop/policy.hpp"

#include <deque>

#include "refineloop/text.hpp"

namespace refineloop {

PolicySample generate(const Policy& policy, const GenerationRequest& req, std::uint64_t seed) {
  return policy.start(req.prompt, seed)->generate(req);
}

std::optional<std::string> question_from_prompt(std::string_view prompt) {
  constexpr std::string_view kMarker = "Question: ";
  std::size_t start = prompt.rfind(kMarker);
  if (start == std::string_view::npos) return std::nullopt;
  start += kMarker.size();
  std::size_t end = prompt.find(" </user>", start);
  if (end == std::string_view::npos) end = prompt.size();
  return std::string(prompt.substr(start, end - start));
}

namespace {

class ScriptedSession : public PolicySession {
 public:
  explicit ScriptedSession(std::vector<std::string> segments)
      : queue_(segments.begin(), segments.end()) {}

  PolicySample generate(const GenerationRequest& req) override {
    PolicySample sample;
    if (queue_.empty()) return sample;  // script exhausted: empty segment, no stop
    std::string segment = std::move(queue_.front());
    queue_.pop_front();

    // Halt at the first stop sequence; re-queue whatever follows it.
    std::size_t cut = std::string::npos;
    std::string hit;
    for (const std::string& stop : req.stop_sequences) {
      std::size_t at = segment.find(stop);
      if (at == std::string::npos) continue;
      if (cut == std::string::npos || at < cut ||
          (at == cut && stop.size() > hit.size())) {
        cut = at;
        hit = stop;
      }
    }
    if (cut != std::string::npos) {
      std::size_t end = cut + hit.size();
      if (end < segment.size()) queue_.push_front(segment.substr(end));
      sample.text = segment.substr(0, end);
      sample.stop_hit = hit;
    } else {
      sample.text = std::move(segment);
    }
    if (count_ws_tokens(sample.text) > static_cast<std::size_t>(req.max_new_tokens)) {
      sample.text = truncate_ws_tokens(sample.text, static_cast<std::size_t>(req.max_new_tokens));
      sample.stop_hit.reset();
    }
    return sample;
  }

  void observe(std::string_view) override {}

 private:
  std::deque<std::string> queue_;
};

}  // namespace

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> segments)
    : provider_([segments = std::move(segments)](const std::string&) { return segments; }) {}

ScriptedPolicy::ScriptedPolicy(
    std::function<std::vector<std::string>(const std::string& question)> provider)
    : provider_(std::move(provider)) {}

std::unique_ptr<PolicySession> ScriptedPolicy::start(const std::string& prompt,
                                                     std::uint64_t) const {
  std::string question = question_from_prompt(prompt).value_or(prompt);
  return std::make_unique<ScriptedSession>(provider_(question));
}

}  // namespace refineloop

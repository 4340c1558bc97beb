#include "refineloop/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "refineloop/errors.hpp"

namespace refineloop {

using nlohmann::json;

namespace {

json step_to_json(const Step& step) {
  return json{{"tag", std::string(tag_name(step.tag))},
              {"content", step.content},
              {"origin", step.origin == StepOrigin::engine ? "engine" : "policy"}};
}

Step step_from_json(const json& j) {
  Step step;
  auto tag = tag_from_name(j.at("tag").get<std::string>());
  if (!tag) throw CliError(CliErrorKind::IoError, "unknown step tag in log");
  step.tag = *tag;
  step.content = j.at("content").get<std::string>();
  step.origin = j.at("origin").get<std::string>() == "engine" ? StepOrigin::engine
                                                              : StepOrigin::policy;
  return step;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(CliErrorKind::IoError, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CliError(CliErrorKind::IoError, "cannot write " + path);
  return out;
}

}  // namespace

Trajectory TrajectoryLogRecord::to_trajectory() const {
  Trajectory t;
  t.question = question;
  t.steps = steps;
  t.terminated = true;
  t.termination_reason = termination_reason;
  return t;
}

std::vector<QaExample> load_dataset(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<QaExample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    QaExample ex;
    ex.id = j.at("id").get<std::string>();
    ex.question = j.at("question").get<std::string>();
    ex.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    ex.split = j.value("split", std::string{});
    if (ex.gold_answers.empty())
      throw CliError(CliErrorKind::IoError, "example " + ex.id + " has no gold answers");
    out.push_back(std::move(ex));
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<QaExample>& examples) {
  std::ofstream out = open_out(path);
  for (const QaExample& ex : examples) {
    json j{{"id", ex.id},
           {"question", ex.question},
           {"gold_answers", ex.gold_answers},
           {"split", ex.split}};
    out << j.dump() << "\n";
  }
}

std::vector<TrajectoryLogRecord> load_trajectory_log(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<TrajectoryLogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TrajectoryLogRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.question = j.at("question").get<std::string>();
    rec.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    for (const json& js : j.at("steps")) rec.steps.push_back(step_from_json(js));
    auto reason = termination_reason_from_name(j.at("termination_reason").get<std::string>());
    if (!reason) throw CliError(CliErrorKind::IoError, "unknown termination_reason in log");
    rec.termination_reason = *reason;
    out.push_back(std::move(rec));
  }
  return out;
}

void save_trajectory_log(const std::string& path,
                         const std::vector<TrajectoryLogRecord>& records) {
  std::ofstream out = open_out(path);
  for (const TrajectoryLogRecord& rec : records) {
    json steps = json::array();
    for (const Step& s : rec.steps) steps.push_back(step_to_json(s));
    json j{{"id", rec.id},
           {"question", rec.question},
           {"gold_answers", rec.gold_answers},
           {"steps", steps},
           {"termination_reason", std::string(termination_reason_name(rec.termination_reason))}};
    out << j.dump() << "\n";
  }
}

}  // namespace refineloop

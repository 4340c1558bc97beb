#pragma once

#include <string>
#include <vector>

#include "refineloop/trajectory.hpp"

namespace refineloop {

struct QaExample {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
  std::string split;
};

/// One rollout as written to / read from a trajectory log (JSONL).
struct TrajectoryLogRecord {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
  std::vector<Step> steps;
  TerminationReason termination_reason = TerminationReason::answered;

  Trajectory to_trajectory() const;
};

std::vector<QaExample> load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<QaExample>& examples);

std::vector<TrajectoryLogRecord> load_trajectory_log(const std::string& path);
void save_trajectory_log(const std::string& path, const std::vector<TrajectoryLogRecord>& records);

}  // namespace refineloop

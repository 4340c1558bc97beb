#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "refineloop/dataset.hpp"
#include "refineloop/errors.hpp"
#include "refineloop/retrieval.hpp"

namespace refineloop {

struct WorldSpec {
  int n_entities = 50;
  int n_relations = 6;
  std::vector<std::pair<int, double>> hop_probs = {{1, 0.5}, {2, 0.5}};
  int n_distractors_per_fact = 2;
  std::uint64_t seed = 7;
  int n_train_questions = 200;
  int n_test_questions = 100;
  double edge_prob = 0.5;
};

struct Fact {
  int subject = 0;
  int relation = 0;
  int object = 0;
};

struct World {
  WorldSpec spec;
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<Fact> facts;                 // functional: one object per (subject, relation)
  std::vector<std::vector<int>> edges;     // edges[subject][relation] = object or -1
  std::vector<Document> corpus;
  std::vector<QaExample> train;
  std::vector<QaExample> test;

  std::string fact_sentence(const Fact& f) const;
};

/// Relations in question order, outermost first: "What is the r[0] of the
/// r[1] of ... E?". Resolution runs innermost-first.
struct QuestionShape {
  std::vector<std::string> relations_outer_first;
  std::string head_entity;

  int hops() const { return static_cast<int>(relations_outer_first.size()); }
};

std::string render_question(const QuestionShape& shape);
std::optional<QuestionShape> parse_question(std::string_view question);

World generate_world(const WorldSpec& spec);

/// Follows the fact chain; must equal the stored gold for generated questions.
std::string oracle_solve(const World& world, const QaExample& example);

/// Policy text segments that solve the question through the full rollout
/// stack: one search per hop, a refine quoting the true fact, then the gold
/// answer. Never reads the injected documents.
std::vector<std::string> oracle_script(const World& world, const QaExample& example);

/// For every generated question of depth >= 2, no single document mentions
/// both the head entity and the gold answer.
bool check_hop_necessity(const World& world);

void save_world(const std::string& dir, const World& world);
World load_world(const std::string& dir);

}  // namespace refineloop

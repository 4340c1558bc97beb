#include "refineloop/synthkb.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "refineloop/text.hpp"

namespace refineloop {

using nlohmann::json;

namespace {

const std::vector<std::string> kGreek = {
    "alpha", "beta",  "gamma",   "delta", "epsilon", "zeta", "eta",     "theta",
    "iota",  "kappa", "lambda",  "mu",    "nu",      "xi",   "omicron", "pi",
    "rho",   "sigma", "tau",     "upsilon", "phi",   "chi",  "psi",     "omega"};

const std::vector<std::string> kDigitWords = {"one", "two",   "three", "four", "five",
                                              "six", "seven", "eight", "nine", "ten"};

const std::vector<std::string> kRelAdjectives = {"prime",  "senior",   "chief",  "grand",
                                                 "first",  "silver",   "northern", "ancient"};

const std::vector<std::string> kRelNouns = {"mentor",  "patron",  "rival",   "editor",
                                            "sponsor", "advisor", "founder", "curator"};

constexpr std::string_view kQuestionPrefix = "What is the ";

std::string padded(const std::string& s) { return " " + s + " "; }

bool mentions(const std::string& normalized_doc, const std::string& normalized_name) {
  return padded(normalized_doc).find(padded(normalized_name)) != std::string::npos;
}

}  // namespace

std::string World::fact_sentence(const Fact& f) const {
  return "The " + relations[static_cast<std::size_t>(f.relation)] + " of " +
         entities[static_cast<std::size_t>(f.subject)] + " is " +
         entities[static_cast<std::size_t>(f.object)] + ".";
}

std::string render_question(const QuestionShape& shape) {
  std::string q(kQuestionPrefix);
  for (std::size_t i = 0; i < shape.relations_outer_first.size(); ++i) {
    if (i) q += "the ";
    q += shape.relations_outer_first[i];
    q += " of ";
  }
  q += shape.head_entity;
  q += "?";
  return q;
}

std::optional<QuestionShape> parse_question(std::string_view question) {
  if (!starts_with(question, kQuestionPrefix)) return std::nullopt;
  std::string_view rest = question.substr(kQuestionPrefix.size());
  if (rest.empty() || rest.back() != '?') return std::nullopt;
  rest.remove_suffix(1);

  QuestionShape shape;
  constexpr std::string_view kOf = " of ";
  std::size_t pos = 0;
  while (true) {
    std::size_t at = rest.find(kOf, pos);
    if (at == std::string_view::npos) break;
    std::string_view part = rest.substr(pos, at - pos);
    if (!shape.relations_outer_first.empty()) {
      if (!starts_with(part, "the ")) return std::nullopt;
      part.remove_prefix(4);
    }
    if (part.empty()) return std::nullopt;
    shape.relations_outer_first.emplace_back(part);
    pos = at + kOf.size();
  }
  if (shape.relations_outer_first.empty()) return std::nullopt;
  std::string_view entity = rest.substr(pos);
  if (entity.empty()) return std::nullopt;
  shape.head_entity = std::string(entity);
  return shape;
}

World generate_world(const WorldSpec& spec) {
  if (spec.n_entities < 2 ||
      spec.n_entities > static_cast<int>(kGreek.size() * kDigitWords.size())) {
    throw WorldError(WorldErrorKind::SpecInfeasible, "n_entities out of range");
  }
  if (spec.n_relations < 1 ||
      spec.n_relations > static_cast<int>(kRelAdjectives.size() * kRelNouns.size())) {
    throw WorldError(WorldErrorKind::SpecInfeasible, "n_relations out of range");
  }
  double prob_sum = 0.0;
  int max_hops = 0;
  for (const auto& [h, p] : spec.hop_probs) {
    if (h < 1 || h > 3 || p < 0.0) {
      throw WorldError(WorldErrorKind::SpecInfeasible, "hop_probs must cover depths 1..3");
    }
    prob_sum += p;
    if (p > 0.0) max_hops = std::max(max_hops, h);
  }
  if (std::abs(prob_sum - 1.0) > 1e-9 || max_hops == 0) {
    throw WorldError(WorldErrorKind::SpecInfeasible, "hop_probs must sum to 1");
  }

  World world;
  world.spec = spec;
  std::mt19937_64 rng(spec.seed);

  // Entity / relation names from shuffled word products.
  std::vector<std::pair<int, int>> entity_slots;
  for (std::size_t a = 0; a < kGreek.size(); ++a) {
    for (std::size_t b = 0; b < kDigitWords.size(); ++b) {
      entity_slots.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  std::shuffle(entity_slots.begin(), entity_slots.end(), rng);
  for (int i = 0; i < spec.n_entities; ++i) {
    auto [a, b] = entity_slots[static_cast<std::size_t>(i)];
    world.entities.push_back("entity " + kGreek[static_cast<std::size_t>(a)] + " " +
                             kDigitWords[static_cast<std::size_t>(b)]);
  }
  std::vector<std::pair<int, int>> relation_slots;
  for (std::size_t a = 0; a < kRelAdjectives.size(); ++a) {
    for (std::size_t b = 0; b < kRelNouns.size(); ++b) {
      relation_slots.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
  }
  std::shuffle(relation_slots.begin(), relation_slots.end(), rng);
  for (int i = 0; i < spec.n_relations; ++i) {
    auto [a, b] = relation_slots[static_cast<std::size_t>(i)];
    world.relations.push_back(kRelAdjectives[static_cast<std::size_t>(a)] + " " +
                              kRelNouns[static_cast<std::size_t>(b)]);
  }

  // Functional fact graph.
  world.edges.assign(static_cast<std::size_t>(spec.n_entities),
                     std::vector<int>(static_cast<std::size_t>(spec.n_relations), -1));
  for (int e = 0; e < spec.n_entities; ++e) {
    for (int r = 0; r < spec.n_relations; ++r) {
      double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
      if (u >= spec.edge_prob) continue;
      int object = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.n_entities - 1));
      if (object >= e) ++object;
      world.edges[static_cast<std::size_t>(e)][static_cast<std::size_t>(r)] = object;
      world.facts.push_back(Fact{e, r, object});
    }
  }
  if (world.facts.empty()) {
    throw WorldError(WorldErrorKind::SpecInfeasible, "edge_prob produced an empty graph");
  }

  // One document per fact plus surface-similar distractors that never mention
  // a second entity.
  int doc_counter = 0;
  for (const Fact& fact : world.facts) {
    const std::string& subj = world.entities[static_cast<std::size_t>(fact.subject)];
    const std::string& rel = world.relations[static_cast<std::size_t>(fact.relation)];
    Document doc;
    doc.id = "fact-" + std::to_string(doc_counter);
    doc.title = subj + " " + rel;
    doc.body = world.fact_sentence(fact);
    world.corpus.push_back(std::move(doc));
    for (int d = 0; d < spec.n_distractors_per_fact; ++d) {
      const std::string& g = kGreek[rng() % kGreek.size()];
      const std::string& w = kDigitWords[rng() % kDigitWords.size()];
      std::string body;
      switch (rng() % 3) {
        case 0:
          body = "The " + rel + " of " + subj + " is discussed in volume " + g + " " + w + ".";
          break;
        case 1:
          body = "Records about the " + rel + " of " + subj + " remain under review in section " +
                 g + ".";
          break;
        default:
          body = "The " + rel + " of " + subj + " is mentioned in chapter " + w + ".";
          break;
      }
      Document dd;
      dd.id = "distract-" + std::to_string(doc_counter) + "-" + std::to_string(d);
      dd.title = subj + " " + rel + " notes " + std::to_string(d + 1);
      dd.body = std::move(body);
      world.corpus.push_back(std::move(dd));
    }
    ++doc_counter;
  }

  // Normalized doc texts for the head/gold co-occurrence rejection below.
  std::vector<std::string> normalized_docs;
  normalized_docs.reserve(world.corpus.size());
  for (const Document& d : world.corpus) {
    normalized_docs.push_back(normalize_answer(d.title + " " + d.body));
  }

  auto co_occurs = [&](const std::string& a, const std::string& b) {
    std::string na = normalize_answer(a);
    std::string nb = normalize_answer(b);
    for (const std::string& doc : normalized_docs) {
      if (mentions(doc, na) && mentions(doc, nb)) return true;
    }
    return false;
  };

  // Question sampling: random chain walks, rejecting duplicates and, for
  // depth >= 2, chains whose head and terminus co-occur in some document.
  std::vector<double> hop_cdf;
  std::vector<int> hop_vals;
  {
    double acc = 0.0;
    for (const auto& [h, p] : spec.hop_probs) {
      acc += p;
      hop_vals.push_back(h);
      hop_cdf.push_back(acc);
    }
  }
  auto draw_hops = [&]() {
    double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    for (std::size_t i = 0; i < hop_cdf.size(); ++i) {
      if (u < hop_cdf[i]) return hop_vals[i];
    }
    return hop_vals.back();
  };

  std::unordered_set<std::string> seen_questions;
  const int total_questions = spec.n_train_questions + spec.n_test_questions;
  std::vector<QaExample> all;
  long attempts = 0;
  const long max_attempts = 2000L * std::max(total_questions, 1);
  while (static_cast<int>(all.size()) < total_questions) {
    if (++attempts > max_attempts) {
      throw WorldError(WorldErrorKind::SpecInfeasible,
                       "could not sample enough distinct questions; graph too sparse");
    }
    int hops = draw_hops();
    int head = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.n_entities));
    int cur = head;
    std::vector<int> rels;
    bool ok = true;
    for (int h = 0; h < hops; ++h) {
      std::vector<int> options;
      for (int r = 0; r < spec.n_relations; ++r) {
        if (world.edges[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)] >= 0) {
          options.push_back(r);
        }
      }
      if (options.empty()) {
        ok = false;
        break;
      }
      int r = options[rng() % options.size()];
      rels.push_back(r);
      cur = world.edges[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)];
    }
    if (!ok) continue;
    if (hops >= 2 && co_occurs(world.entities[static_cast<std::size_t>(head)],
                               world.entities[static_cast<std::size_t>(cur)])) {
      continue;
    }
    QuestionShape shape;
    shape.head_entity = world.entities[static_cast<std::size_t>(head)];
    for (auto it = rels.rbegin(); it != rels.rend(); ++it) {
      shape.relations_outer_first.push_back(world.relations[static_cast<std::size_t>(*it)]);
    }
    std::string text = render_question(shape);
    if (!seen_questions.insert(text).second) continue;
    QaExample ex;
    ex.question = std::move(text);
    ex.gold_answers = {world.entities[static_cast<std::size_t>(cur)]};
    ex.split = std::to_string(hops) + "hop";
    all.push_back(std::move(ex));
  }

  for (int i = 0; i < total_questions; ++i) {
    QaExample& ex = all[static_cast<std::size_t>(i)];
    if (i < spec.n_train_questions) {
      ex.id = "q-train-" + std::to_string(i);
      world.train.push_back(ex);
    } else {
      ex.id = "q-test-" + std::to_string(i - spec.n_train_questions);
      world.test.push_back(ex);
    }
  }
  return world;
}

std::string oracle_solve(const World& world, const QaExample& example) {
  std::optional<QuestionShape> shape = parse_question(example.question);
  if (!shape) {
    throw WorldError(WorldErrorKind::UnknownQuestion,
                     "unparseable question: " + example.question);
  }
  auto entity_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < world.entities.size(); ++i) {
      if (world.entities[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  auto relation_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < world.relations.size(); ++i) {
      if (world.relations[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  int cur = entity_id(shape->head_entity);
  if (cur < 0) {
    throw WorldError(WorldErrorKind::UnknownQuestion, "unknown entity: " + shape->head_entity);
  }
  for (auto it = shape->relations_outer_first.rbegin();
       it != shape->relations_outer_first.rend(); ++it) {
    int r = relation_id(*it);
    if (r < 0) throw WorldError(WorldErrorKind::UnknownQuestion, "unknown relation: " + *it);
    int next = world.edges[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)];
    if (next < 0) {
      throw WorldError(WorldErrorKind::UnknownQuestion,
                       "no fact for " + *it + " of " + world.entities[static_cast<std::size_t>(cur)]);
    }
    cur = next;
  }
  return world.entities[static_cast<std::size_t>(cur)];
}

std::vector<std::string> oracle_script(const World& world, const QaExample& example) {
  std::optional<QuestionShape> shape = parse_question(example.question);
  if (!shape) {
    throw WorldError(WorldErrorKind::UnknownQuestion,
                     "unparseable question: " + example.question);
  }
  auto entity_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < world.entities.size(); ++i) {
      if (world.entities[i] == name) return static_cast<int>(i);
    }
    throw WorldError(WorldErrorKind::UnknownQuestion, "unknown entity: " + name);
  };
  auto relation_id = [&](const std::string& name) {
    for (std::size_t i = 0; i < world.relations.size(); ++i) {
      if (world.relations[i] == name) return static_cast<int>(i);
    }
    throw WorldError(WorldErrorKind::UnknownQuestion, "unknown relation: " + name);
  };

  std::vector<std::string> segments;
  int cur = entity_id(shape->head_entity);
  std::string first = "<think>I will resolve the chain one fact at a time.</think><search>" +
                      shape->relations_outer_first.back() + " of " +
                      world.entities[static_cast<std::size_t>(cur)] + "</search>";
  segments.push_back(std::move(first));

  const int hops = shape->hops();
  for (int h = 0; h < hops; ++h) {
    const std::string& rel_name =
        shape->relations_outer_first[static_cast<std::size_t>(hops - 1 - h)];
    int r = relation_id(rel_name);
    int next = world.edges[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)];
    if (next < 0) {
      throw WorldError(WorldErrorKind::UnknownQuestion,
                       "no fact for " + rel_name + " of " +
                           world.entities[static_cast<std::size_t>(cur)]);
    }
    std::string refine =
        "<refine>" + world.fact_sentence(Fact{cur, r, next}) + "</refine>";
    cur = next;
    if (h + 1 < hops) {
      const std::string& next_rel =
          shape->relations_outer_first[static_cast<std::size_t>(hops - 2 - h)];
      refine += "<search>" + next_rel + " of " +
                world.entities[static_cast<std::size_t>(cur)] + "</search>";
    } else {
      refine += "<answer>" + world.entities[static_cast<std::size_t>(cur)] + "</answer>";
    }
    segments.push_back(std::move(refine));
  }
  return segments;
}

bool check_hop_necessity(const World& world) {
  std::vector<std::string> normalized_docs;
  normalized_docs.reserve(world.corpus.size());
  for (const Document& d : world.corpus) {
    normalized_docs.push_back(normalize_answer(d.title + " " + d.body));
  }
  auto violates = [&](const QaExample& ex) {
    std::optional<QuestionShape> shape = parse_question(ex.question);
    if (!shape || shape->hops() < 2) return false;
    std::string head = normalize_answer(shape->head_entity);
    std::string gold = normalize_answer(ex.gold_answers.front());
    for (const std::string& doc : normalized_docs) {
      if (mentions(doc, head) && mentions(doc, gold)) return true;
    }
    return false;
  };
  for (const QaExample& ex : world.train) {
    if (violates(ex)) return false;
  }
  for (const QaExample& ex : world.test) {
    if (violates(ex)) return false;
  }
  return true;
}

void save_world(const std::string& dir, const World& world) {
  save_corpus(dir + "/corpus.jsonl", world.corpus);
  save_dataset(dir + "/train.jsonl", world.train);
  save_dataset(dir + "/test.jsonl", world.test);

  json facts = json::array();
  for (const Fact& f : world.facts) facts.push_back({f.subject, f.relation, f.object});
  json hop_probs = json::array();
  for (const auto& [h, p] : world.spec.hop_probs) hop_probs.push_back({h, p});
  json j{{"format", "refineloop-world"},
         {"version", 1},
         {"spec",
          {{"n_entities", world.spec.n_entities},
           {"n_relations", world.spec.n_relations},
           {"hop_probs", hop_probs},
           {"n_distractors_per_fact", world.spec.n_distractors_per_fact},
           {"seed", world.spec.seed},
           {"n_train_questions", world.spec.n_train_questions},
           {"n_test_questions", world.spec.n_test_questions},
           {"edge_prob", world.spec.edge_prob}}},
         {"entities", world.entities},
         {"relations", world.relations},
         {"facts", facts}};
  std::ofstream out(dir + "/world.json");
  if (!out) throw CliError(CliErrorKind::IoError, "cannot write " + dir + "/world.json");
  out << j.dump(2) << "\n";
}

World load_world(const std::string& dir) {
  std::ifstream in(dir + "/world.json");
  if (!in) throw CliError(CliErrorKind::IoError, "cannot open " + dir + "/world.json");
  json j = json::parse(in);
  if (j.value("format", std::string{}) != "refineloop-world") {
    throw CliError(CliErrorKind::IoError, "unrecognized world.json");
  }
  World world;
  const json& s = j.at("spec");
  world.spec.n_entities = s.at("n_entities").get<int>();
  world.spec.n_relations = s.at("n_relations").get<int>();
  for (const json& hp : s.at("hop_probs")) {
    world.spec.hop_probs.emplace_back(hp.at(0).get<int>(), hp.at(1).get<double>());
  }
  world.spec.n_distractors_per_fact = s.at("n_distractors_per_fact").get<int>();
  world.spec.seed = s.at("seed").get<std::uint64_t>();
  world.spec.n_train_questions = s.at("n_train_questions").get<int>();
  world.spec.n_test_questions = s.at("n_test_questions").get<int>();
  world.spec.edge_prob = s.at("edge_prob").get<double>();
  world.entities = j.at("entities").get<std::vector<std::string>>();
  world.relations = j.at("relations").get<std::vector<std::string>>();
  world.edges.assign(world.entities.size(), std::vector<int>(world.relations.size(), -1));
  for (const json& f : j.at("facts")) {
    Fact fact{f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()};
    world.edges[static_cast<std::size_t>(fact.subject)][static_cast<std::size_t>(fact.relation)] =
        fact.object;
    world.facts.push_back(fact);
  }
  world.corpus = load_corpus(dir + "/corpus.jsonl");
  world.train = load_dataset(dir + "/train.jsonl");
  world.test = load_dataset(dir + "/test.jsonl");
  return world;
}

}  // namespace refineloop

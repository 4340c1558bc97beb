#include "refineloop/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "refineloop/text.hpp"

namespace refineloop {

using nlohmann::json;

RetrievalIndex RetrievalIndex::build(std::vector<Document> corpus, double k1, double b) {
  if (corpus.empty()) throw RetrievalError(RetrievalErrorKind::EmptyCorpus, "empty corpus");
  RetrievalIndex index;
  index.k1_ = k1;
  index.b_ = b;
  index.docs_ = std::move(corpus);
  std::sort(index.docs_.begin(), index.docs_.end(),
            [](const Document& a, const Document& b2) { return a.id < b2.id; });
  for (std::size_t i = 1; i < index.docs_.size(); ++i) {
    if (index.docs_[i].id == index.docs_[i - 1].id) {
      throw RetrievalError(RetrievalErrorKind::DuplicateDocId,
                           "duplicate doc id: " + index.docs_[i].id);
    }
  }
  index.build_postings();
  return index;
}

void RetrievalIndex::build_postings() {
  doc_lengths_.resize(docs_.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    std::vector<std::string> tokens = tokenize_alnum(docs_[i].title + " " + docs_[i].body);
    doc_lengths_[i] = tokens.size();
    total += tokens.size();
    std::unordered_map<std::string, std::uint32_t> tf;
    for (std::string& t : tokens) tf[std::move(t)] += 1;
    for (auto& [term, count] : tf) {
      postings_[term].emplace_back(static_cast<std::uint32_t>(i), count);
    }
  }
  avg_doc_length_ = docs_.empty() ? 0.0 : static_cast<double>(total) / docs_.size();
  // Docs are processed in id order, so postings come out sorted already;
  // keep the sort as a guard for the load path.
  for (auto& [term, list] : postings_) {
    std::sort(list.begin(), list.end());
  }
}

std::vector<ScoredDoc> RetrievalIndex::query_scored(std::string_view q, int top_k) const {
  std::vector<std::string> terms = tokenize_alnum(q);
  if (terms.empty()) throw RetrievalError(RetrievalErrorKind::EmptyQuery, "query has no tokens");

  // Unique terms in first-occurrence order.
  std::vector<std::string> unique;
  std::unordered_set<std::string> seen;
  for (std::string& t : terms) {
    if (seen.insert(t).second) unique.push_back(std::move(t));
  }

  const double n = static_cast<double>(docs_.size());
  std::unordered_map<std::uint32_t, double> scores;
  for (const std::string& term : unique) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    const double df = static_cast<double>(list.size());
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    for (const auto& [doc_pos, tf] : list) {
      const double dl = static_cast<double>(doc_lengths_[doc_pos]);
      const double denom = tf + k1_ * (1.0 - b_ + b_ * dl / avg_doc_length_);
      scores[doc_pos] += idf * (tf * (k1_ + 1.0)) / denom;
    }
  }

  std::vector<std::pair<std::uint32_t, double>> ranked(scores.begin(), scores.end());
  std::sort(ranked.begin(), ranked.end(), [this](const auto& a, const auto& b2) {
    if (a.second != b2.second) return a.second > b2.second;
    return docs_[a.first].id < docs_[b2.first].id;
  });
  if (top_k >= 0 && ranked.size() > static_cast<std::size_t>(top_k)) {
    ranked.resize(static_cast<std::size_t>(top_k));
  }
  std::vector<ScoredDoc> out;
  out.reserve(ranked.size());
  for (const auto& [doc_pos, score] : ranked) {
    out.push_back(ScoredDoc{&docs_[doc_pos], score});
  }
  return out;
}

std::vector<Document> RetrievalIndex::query(std::string_view q, const RetrievalConfig& cfg) const {
  std::vector<ScoredDoc> scored = query_scored(q, cfg.top_k);
  std::vector<Document> out;
  out.reserve(scored.size());
  for (const ScoredDoc& s : scored) out.push_back(*s.doc);
  return out;
}

std::size_t RetrievalIndex::postings_size(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

void RetrievalIndex::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw RetrievalError(RetrievalErrorKind::BadIndexFile, "cannot write " + path);
  json header{{"format", "refineloop-index"},
              {"version", 1},
              {"k1", k1_},
              {"b", b_},
              {"doc_count", docs_.size()},
              {"avg_doc_length", avg_doc_length_}};
  out << header.dump() << "\n";
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    json j{{"doc", {{"id", docs_[i].id}, {"title", docs_[i].title}, {"body", docs_[i].body}}},
           {"len", doc_lengths_[i]}};
    out << j.dump() << "\n";
  }
  // Terms sorted for a reproducible file.
  std::vector<std::string> terms;
  terms.reserve(postings_.size());
  for (const auto& [term, _] : postings_) terms.push_back(term);
  std::sort(terms.begin(), terms.end());
  for (const std::string& term : terms) {
    json entries = json::array();
    for (const auto& [pos, tf] : postings_.at(term)) entries.push_back({pos, tf});
    json j{{"term", term}, {"post", entries}};
    out << j.dump() << "\n";
  }
}

RetrievalIndex RetrievalIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RetrievalError(RetrievalErrorKind::BadIndexFile, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw RetrievalError(RetrievalErrorKind::BadIndexFile, "empty index file");
  }
  json header = json::parse(line);
  if (header.value("format", std::string{}) != "refineloop-index" ||
      header.value("version", 0) != 1) {
    throw RetrievalError(RetrievalErrorKind::BadIndexFile, "unrecognized index header");
  }
  RetrievalIndex index;
  index.k1_ = header.at("k1").get<double>();
  index.b_ = header.at("b").get<double>();
  index.avg_doc_length_ = header.at("avg_doc_length").get<double>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("doc")) {
      const json& d = j.at("doc");
      index.docs_.push_back(Document{d.at("id").get<std::string>(),
                                     d.at("title").get<std::string>(),
                                     d.at("body").get<std::string>()});
      index.doc_lengths_.push_back(j.at("len").get<std::size_t>());
    } else if (j.contains("term")) {
      auto& list = index.postings_[j.at("term").get<std::string>()];
      for (const json& e : j.at("post")) {
        list.emplace_back(e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>());
      }
      std::sort(list.begin(), list.end());
    }
  }
  if (index.docs_.empty()) {
    throw RetrievalError(RetrievalErrorKind::BadIndexFile, "index file has no documents");
  }
  return index;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RetrievalError(RetrievalErrorKind::BadIndexFile, "cannot open " + path);
  std::vector<Document> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    out.push_back(Document{j.at("id").get<std::string>(), j.value("title", std::string{}),
                           j.at("text").get<std::string>()});
  }
  return out;
}

void save_corpus(const std::string& path, const std::vector<Document>& corpus) {
  std::ofstream out(path);
  if (!out) throw RetrievalError(RetrievalErrorKind::BadIndexFile, "cannot write " + path);
  for (const Document& d : corpus) {
    json j{{"id", d.id}, {"title", d.title}, {"text", d.body}};
    out << j.dump() << "\n";
  }
}

std::string render_documents_block(const std::vector<Document>& docs,
                                   const RetrievalConfig& cfg) {
  if (docs.empty()) return std::string(kNoResultsSentinel);
  std::string block;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) block.push_back('\n');
    block += "[Doc " + std::to_string(i + 1) + ": " + docs[i].title + "] " + docs[i].body;
  }
  return truncate_ws_tokens(block, static_cast<std::size_t>(cfg.doc_token_budget));
}

}  // namespace refineloop

#include "adhoc/prelabel/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "adhoc/classify/tokenizer.hpp"
#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

void Bm25Params::validate() const {
  if (!(k1 > 0.0)) throw ConfigError("bm25.k1 must be > 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25.b must lie in [0, 1]");
  if (!(score_threshold >= 0.0)) throw ConfigError("bm25.score_threshold must be >= 0");
}

Bm25Index Bm25Index::build(const Corpus& corpus) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (const Sentence* s : corpus.sentences()) docs.emplace_back(s->id, s->text);
  return build(docs);
}

Bm25Index Bm25Index::build(std::span<const std::pair<std::string, std::string>> documents) {
  Bm25Index index;
  double total = 0.0;
  for (const auto& [id, text] : documents) {
    if (!index.id_index_.emplace(id, index.ids_.size()).second) {
      throw ValidationError("duplicate document id " + id);
    }
    index.ids_.push_back(id);
    std::map<int, std::size_t> counts;
    const auto tokens = tokenize(text);
    for (const auto& tok : tokens) {
      auto [it, inserted] = index.terms_.emplace(tok, static_cast<int>(index.terms_.size()));
      if (inserted) index.df_.push_back(0);
      ++counts[it->second];
    }
    for (const auto& [term, _] : counts) ++index.df_[static_cast<std::size_t>(term)];
    index.tf_.emplace_back(counts.begin(), counts.end());
    index.lengths_.push_back(tokens.size());
    total += static_cast<double>(tokens.size());
  }
  index.average_length_ = documents.empty() ? 0.0 : total / static_cast<double>(documents.size());
  return index;
}

std::optional<int> Bm25Index::term_id(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  if (it == terms_.end()) return std::nullopt;
  return it->second;
}

std::size_t Bm25Index::document_frequency(std::string_view term) const {
  auto t = term_id(term);
  return t ? df_[static_cast<std::size_t>(*t)] : 0;
}

std::size_t Bm25Index::term_frequency(std::size_t doc, std::string_view term) const {
  auto t = term_id(term);
  if (!t) return 0;
  const auto& row = tf_.at(doc);
  auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(*t, std::size_t{0}));
  return it != row.end() && it->first == *t ? it->second : 0;
}

std::size_t Bm25Index::index_of(std::string_view id) const {
  auto it = id_index_.find(std::string(id));
  if (it == id_index_.end()) throw NotFoundError("unknown sentence " + std::string(id));
  return it->second;
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(size());
  const double df = static_cast<double>(document_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::score(std::span<const std::string> query, std::size_t doc,
                        const Bm25Params& params) const {
  if (doc >= size()) throw NotFoundError("sentence index out of range");
  const double len = static_cast<double>(lengths_[doc]);
  const double norm =
      average_length_ > 0.0 ? 1.0 - params.b + params.b * len / average_length_ : 1.0;
  double total = 0.0;
  for (const auto& term : query) {
    const double tf = static_cast<double>(term_frequency(doc, term));
    if (tf == 0.0) continue;
    total += idf(term) * tf * (params.k1 + 1.0) / (tf + params.k1 * norm);
  }
  return total;
}

std::vector<std::string> topic_query(const Topic& topic) {
  std::vector<std::string> query;
  std::set<std::string> seen;
  for (const auto& kw : topic.keywords) {
    for (auto& tok : tokenize(kw)) {
      if (seen.insert(tok).second) query.push_back(std::move(tok));
    }
  }
  return query;
}

std::vector<PreLabel> prelabel_corpus(const Corpus& corpus, const Taxonomy& taxonomy,
                                      const Bm25Params& params) {
  params.validate();
  std::vector<std::vector<std::string>> queries;
  for (const Topic& t : taxonomy.topics()) {
    auto q = topic_query(t);
    if (q.empty()) throw ConfigError("topic '" + t.name + "' has an empty keyword query");
    queries.push_back(std::move(q));
  }
  const Bm25Index index = Bm25Index::build(corpus);
  std::vector<PreLabel> out;
  out.reserve(index.size());
  for (std::size_t d = 0; d < index.size(); ++d) {
    PreLabel p{index.id(d), std::nullopt, 0.0};
    TopicId best = -1;
    for (TopicId t = 0; t < kNumTopics; ++t) {
      const double s = index.score(queries[static_cast<std::size_t>(t)], d, params);
      if (best < 0 || s > p.score) {
        best = t;
        p.score = s;
      }
    }
    if (p.score > params.score_threshold) p.topic = best;
    out.push_back(std::move(p));
  }
  return out;
}

std::map<std::string, LabelSet> announcement_prelabels(const Corpus& corpus,
                                                       std::span<const PreLabel> prelabels) {
  std::map<std::string, LabelSet> out;
  for (const Announcement& a : corpus.announcements()) out[a.id];
  for (const PreLabel& p : prelabels) {
    const Announcement& a = corpus.announcement_of(p.sentence_id);
    if (p.topic) out[a.id].insert(*p.topic);
  }
  return out;
}

std::string prelabels_csv(std::span<const PreLabel> prelabels) {
  std::ostringstream out;
  csv::write_row(out, {"sentence_id", "topic_id", "score"});
  for (const PreLabel& p : prelabels) {
    csv::write_row(out, {p.sentence_id, p.topic ? std::to_string(*p.topic) : "none",
                         format_double(p.score)});
  }
  return out.str();
}

std::vector<PreLabel> read_prelabels_csv(std::istream& in) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || *header != csv::Row{"sentence_id", "topic_id", "score"}) {
    throw ValidationError("pre-label file must start with header sentence_id,topic_id,score");
  }
  std::vector<PreLabel> out;
  while (auto row = reader.next()) {
    if (row->size() != 3) {
      throw ValidationError("pre-label line " + std::to_string(reader.line()) +
                            ": expected 3 fields");
    }
    PreLabel p;
    p.sentence_id = (*row)[0];
    if ((*row)[1] != "none") {
      const auto t = parse_int((*row)[1]);
      if (t < 0 || t >= kNumTopics) throw ValidationError("pre-label topic id out of range");
      p.topic = static_cast<TopicId>(t);
    }
    p.score = parse_double((*row)[2]);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace adhoc

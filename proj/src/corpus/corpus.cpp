#include "adhoc/corpus/corpus.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adhoc/core/digest.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

using nlohmann::json;

std::string_view to_string(Source s) {
  return s == Source::primary_provider ? "primary_provider" : "register";
}

Source parse_source(std::string_view text) {
  if (text == "primary_provider") return Source::primary_provider;
  if (text == "register") return Source::register_;
  throw ValidationError("unknown source '" + std::string(text) +
                        "', expected primary_provider or register");
}

std::string make_sentence_id(std::string_view announcement_id, std::size_t ordinal) {
  return std::string(announcement_id) + "#" + std::to_string(ordinal);
}

Corpus::Corpus(std::vector<Announcement> announcements)
    : announcements_(std::move(announcements)) {
  for (std::size_t a = 0; a < announcements_.size(); ++a) {
    const Announcement& ann = announcements_[a];
    if (ann.sentences.empty()) {
      throw ValidationError("announcement " + ann.id + " has no sentences");
    }
    if (!announcement_index_.emplace(ann.id, a).second) {
      throw ValidationError("duplicate announcement id " + ann.id);
    }
    for (std::size_t s = 0; s < ann.sentences.size(); ++s) {
      const Sentence& sen = ann.sentences[s];
      if (sen.ordinal != s || sen.announcement_id != ann.id || sen.text.empty()) {
        throw ValidationError("announcement " + ann.id + " has inconsistent sentence " +
                              std::to_string(s));
      }
      if (!sentence_index_.emplace(sen.id, std::make_pair(a, s)).second) {
        throw ValidationError("duplicate sentence id " + sen.id);
      }
    }
  }
}

const Announcement* Corpus::find_announcement(std::string_view id) const {
  auto it = announcement_index_.find(std::string(id));
  return it == announcement_index_.end() ? nullptr : &announcements_[it->second];
}

const Sentence* Corpus::find_sentence(std::string_view id) const {
  auto it = sentence_index_.find(std::string(id));
  if (it == sentence_index_.end()) return nullptr;
  return &announcements_[it->second.first].sentences[it->second.second];
}

const Announcement& Corpus::announcement_of(std::string_view sentence_id) const {
  auto it = sentence_index_.find(std::string(sentence_id));
  if (it == sentence_index_.end()) {
    throw NotFoundError("unknown sentence " + std::string(sentence_id));
  }
  return announcements_[it->second.first];
}

std::vector<const Sentence*> Corpus::sentences() const {
  std::vector<const Sentence*> out;
  out.reserve(sentence_index_.size());
  for (const Announcement& a : announcements_) {
    for (const Sentence& s : a.sentences) out.push_back(&s);
  }
  return out;
}

namespace {

std::string required_string(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw ValidationError(std::string("missing or non-string field '") + key + "'");
  }
  std::string v = trim(it->get<std::string>());
  if (v.empty()) throw ValidationError(std::string("empty field '") + key + "'");
  return v;
}

Announcement parse_record(const json& rec, const IngestOptions& options) {
  if (!rec.is_object()) throw ValidationError("record is not an object");
  Announcement a;
  a.id = required_string(rec, "id");
  a.firm_id = required_string(rec, "firm_id");
  a.published_at = Date::parse(required_string(rec, "date"));
  a.source = parse_source(required_string(rec, "source"));
  if (options.min_date && a.published_at < *options.min_date) {
    throw ValidationError("date " + a.published_at.to_string() + " before corpus range");
  }
  if (options.max_date && a.published_at > *options.max_date) {
    throw ValidationError("date " + a.published_at.to_string() + " after corpus range");
  }

  const bool has_text = rec.contains("text");
  const bool has_sentences = rec.contains("sentences");
  if (has_text == has_sentences) {
    throw ValidationError("record needs exactly one of 'text' or 'sentences'");
  }
  std::vector<std::string> texts;
  if (has_sentences) {
    const json& list = rec.at("sentences");
    if (!list.is_array()) throw ValidationError("'sentences' is not an array");
    for (const json& s : list) {
      if (!s.is_string()) throw ValidationError("sentence is not a string");
      std::string t = trim(s.get<std::string>());
      if (t.empty()) throw ValidationError("empty sentence");
      texts.push_back(std::move(t));
    }
  } else {
    if (!rec.at("text").is_string()) throw ValidationError("'text' is not a string");
    texts = options.segmenter.split(rec.at("text").get<std::string>());
  }
  if (texts.empty()) throw ValidationError("announcement has no sentences");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    a.sentences.push_back({make_sentence_id(a.id, i), a.id, i, std::move(texts[i])});
  }
  return a;
}

std::string cross_source_key(const Announcement& a) {
  return a.firm_id + "\x1f" + a.published_at.to_string() + "\x1f" +
         sha256_hex(a.sentences.front().text);
}

}  // namespace

IngestResult ingest_corpus(std::istream& records, const Taxonomy& taxonomy,
                           const IngestOptions& options) {
  if (taxonomy.topics().size() != static_cast<std::size_t>(kNumTopics)) {
    throw ConfigError("taxonomy must have 20 topics");
  }
  IngestResult result;
  std::vector<Announcement> kept;
  std::unordered_map<std::string, std::size_t> by_id;
  std::unordered_map<std::string, std::size_t> by_content;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(records, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Announcement a;
    try {
      a = parse_record(json::parse(line), options);
    } catch (const json::exception& e) {
      result.rejections.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      continue;
    } catch (const ValidationError& e) {
      result.rejections.push_back({line_no, e.what()});
      continue;
    }

    const std::string content_key = cross_source_key(a);
    std::size_t slot = kept.size();
    if (auto it = by_id.find(a.id); it != by_id.end()) {
      slot = it->second;
    } else if (auto jt = by_content.find(content_key); jt != by_content.end()) {
      slot = jt->second;
    }

    if (slot == kept.size()) {
      by_id.emplace(a.id, slot);
      by_content.emplace(content_key, slot);
      kept.push_back(std::move(a));
      continue;
    }
    // The primary provider wins; otherwise the first record seen is kept.
    Announcement& existing = kept[slot];
    if (a.source == Source::primary_provider && existing.source != Source::primary_provider) {
      result.duplicates.emplace_back(existing.id, a.id);
      by_id.emplace(a.id, slot);
      by_content.emplace(content_key, slot);
      existing = std::move(a);
    } else {
      result.duplicates.emplace_back(a.id, existing.id);
      by_id.emplace(a.id, slot);
    }
  }

  if (kept.empty()) throw ValidationError("corpus is empty after ingestion");
  result.corpus = Corpus(std::move(kept));
  return result;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Announcement& a : corpus.announcements()) {
    json sentences = json::array();
    for (const Sentence& s : a.sentences) sentences.push_back(s.text);
    json rec = {{"id", a.id},
                {"firm_id", a.firm_id},
                {"date", a.published_at.to_string()},
                {"source", std::string(to_string(a.source))},
                {"sentences", std::move(sentences)}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Corpus load_corpus(std::istream& canonical) {
  IngestResult r = ingest_corpus(canonical, Taxonomy::builtin());
  if (!r.rejections.empty()) {
    throw ValidationError("corpus line " + std::to_string(r.rejections.front().line) + ": " +
                          r.rejections.front().reason);
  }
  return std::move(r.corpus);
}

std::string_view to_string(Level level) {
  return level == Level::sentence ? "sentence" : "document";
}

Level parse_level(std::string_view text) {
  if (text == "sentence") return Level::sentence;
  if (text == "document") return Level::document;
  throw ValidationError("level must be 'sentence' or 'document', got '" + std::string(text) + "'");
}

LabelSet aggregate_to_document(std::span<const LabelSet> sentence_labels) {
  LabelSet out;
  for (LabelSet s : sentence_labels) out |= s;
  return out;
}

std::vector<LabelSet> document_labels(const Corpus& corpus, const SentenceLabels& labels) {
  std::vector<LabelSet> out;
  out.reserve(corpus.announcements().size());
  for (const Announcement& a : corpus.announcements()) {
    std::vector<LabelSet> per_sentence;
    for (const Sentence& s : a.sentences) {
      auto it = labels.find(s.id);
      per_sentence.push_back(it == labels.end() ? LabelSet{} : it->second);
    }
    out.push_back(aggregate_to_document(per_sentence));
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus, const SentenceLabels& labels) {
  for (const auto& [id, _] : labels) {
    if (!corpus.find_sentence(id)) throw NotFoundError("labelled sentence " + id + " not in corpus");
  }
  std::vector<double> sentences_per_ann, ones, labels_per_sentence, labels_per_doc;
  std::vector<double> sentence_topic(kNumTopics, 0.0), doc_topic(kNumTopics, 0.0);

  const std::vector<LabelSet> docs = document_labels(corpus, labels);
  for (std::size_t a = 0; a < corpus.announcements().size(); ++a) {
    const Announcement& ann = corpus.announcements()[a];
    sentences_per_ann.push_back(static_cast<double>(ann.sentences.size()));
    ones.push_back(1.0);
    for (const Sentence& s : ann.sentences) {
      auto it = labels.find(s.id);
      const LabelSet ls = it == labels.end() ? LabelSet{} : it->second;
      labels_per_sentence.push_back(ls.size());
      for (TopicId t : ls.topics()) sentence_topic[static_cast<std::size_t>(t)] += 1.0;
    }
    labels_per_doc.push_back(docs[a].size());
    for (TopicId t : docs[a].topics()) doc_topic[static_cast<std::size_t>(t)] += 1.0;
  }

  CorpusStats st;
  st.sentence = {stats::summarize(sentences_per_ann), stats::summarize(labels_per_sentence),
                 stats::summarize(sentence_topic)};
  st.document = {stats::summarize(ones), stats::summarize(labels_per_doc),
                 stats::summarize(doc_topic)};
  return st;
}

namespace {

struct NamedSummary {
  const char* level;
  const char* measure;
  const stats::Summary* summary;
};

std::vector<NamedSummary> named(const CorpusStats& s) {
  return {{"sentence", "texts_per_announcement", &s.sentence.texts_per_announcement},
          {"sentence", "labels_per_text", &s.sentence.labels_per_text},
          {"sentence", "labels_per_topic", &s.sentence.labels_per_topic},
          {"document", "texts_per_announcement", &s.document.texts_per_announcement},
          {"document", "labels_per_text", &s.document.labels_per_text},
          {"document", "labels_per_topic", &s.document.labels_per_topic}};
}

}  // namespace

std::string corpus_stats_csv(const CorpusStats& stats) {
  std::ostringstream out;
  out << "level,measure,count,mean,std,min,p25,p50,p75,max\n";
  for (const auto& n : named(stats)) {
    const auto& s = *n.summary;
    out << n.level << ',' << n.measure << ',' << s.count << ',' << format_double(s.mean) << ','
        << format_double(s.std) << ',' << format_double(s.min) << ',' << format_double(s.p25)
        << ',' << format_double(s.p50) << ',' << format_double(s.p75) << ','
        << format_double(s.max) << '\n';
  }
  return out.str();
}

std::string corpus_stats_json(const CorpusStats& stats) {
  json doc = json::object();
  for (const auto& n : named(stats)) {
    const auto& s = *n.summary;
    doc[n.level][n.measure] = {{"count", s.count}, {"mean", s.mean}, {"std", s.std},
                               {"min", s.min},     {"p25", s.p25},   {"p50", s.p50},
                               {"p75", s.p75},     {"max", s.max}};
  }
  return doc.dump(2) + "\n";
}

PairCounts cooccurrence_counts(std::span<const LabelSet> document_labels) {
  PairCounts counts;
  for (LabelSet doc : document_labels) {
    const std::vector<TopicId> ts = doc.topics();
    for (std::size_t i = 0; i < ts.size(); ++i) {
      for (std::size_t j = i + 1; j < ts.size(); ++j) ++counts[{ts[i], ts[j]}];
    }
  }
  return counts;
}

}  // namespace adhoc

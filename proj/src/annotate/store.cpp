#include "adhoc/annotate/store.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "adhoc/core/error.hpp"

namespace adhoc {
namespace {

std::int64_t system_millis() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

AnnotationStore::AnnotationStore(const Corpus& corpus, std::vector<Annotator> annotators,
                                 Clock clock)
    : corpus_(corpus), annotators_(std::move(annotators)), clock_(std::move(clock)) {
  if (!clock_) clock_ = system_millis;
  std::set<std::string> ids, tokens;
  for (const auto& a : annotators_) {
    if (!ids.insert(a.id).second) throw ConfigError("duplicate annotator id " + a.id);
    if (!a.token.empty() && !tokens.insert(a.token).second) {
      throw ConfigError("duplicate annotator token");
    }
  }
}

const Annotator& AnnotationStore::annotator(std::string_view id) const {
  for (const auto& a : annotators_) {
    if (a.id == id) return a;
  }
  throw NotFoundError("unknown annotator " + std::string(id));
}

const Annotator* AnnotationStore::annotator_by_token(std::string_view token) const {
  if (token.empty()) return nullptr;
  for (const auto& a : annotators_) {
    if (a.token == token) return &a;
  }
  return nullptr;
}

void AnnotationStore::open_phase(PhasePlan plan) {
  plan.validate();
  auto check = [&](const std::string& id) {
    if (!corpus_.find_announcement(id)) throw NotFoundError("planned announcement " + id + " not in corpus");
  };
  for (const auto& id : plan.shared_announcements) check(id);
  for (const auto& [annotator_id, list] : plan.unique_assignments) {
    annotator(annotator_id);
    for (const auto& id : list) check(id);
  }
  std::unique_lock lock(mutex_);
  const int phase = plan.phase;
  plans_[phase] = std::move(plan);
  open_[phase] = true;
}

void AnnotationStore::close_phase(int phase) {
  std::unique_lock lock(mutex_);
  if (!plans_.count(phase)) throw NotFoundError("phase " + std::to_string(phase) + " was never opened");
  open_[phase] = false;
}

bool AnnotationStore::is_open(int phase) const {
  std::shared_lock lock(mutex_);
  auto it = open_.find(phase);
  return it != open_.end() && it->second;
}

const PhasePlan& AnnotationStore::plan(int phase) const {
  std::shared_lock lock(mutex_);
  auto it = plans_.find(phase);
  if (it == plans_.end()) throw NotFoundError("no plan for phase " + std::to_string(phase));
  return it->second;
}

std::optional<int> AnnotationStore::open_phase_of(const std::string& announcement_id,
                                                  const std::string& annotator_id) const {
  for (const auto& [phase, plan] : plans_) {
    if (!open_.at(phase)) continue;
    const auto& shared = plan.shared_announcements;
    if (std::find(shared.begin(), shared.end(), announcement_id) != shared.end()) return phase;
    auto it = plan.unique_assignments.find(annotator_id);
    if (it != plan.unique_assignments.end() &&
        std::find(it->second.begin(), it->second.end(), announcement_id) != it->second.end()) {
      return phase;
    }
  }
  return std::nullopt;
}

AnnotationRecord AnnotationStore::store_locked(AnnotationRecord record) {
  auto& versions = records_[{record.sentence_id, record.annotator_id}];
  record.version = static_cast<int>(versions.size()) + 1;
  versions.push_back(record);
  if (journal_.is_open()) {
    journal_ << record.to_json().dump() << '\n';
    journal_.flush();
  }
  return record;
}

AnnotationRecord AnnotationStore::record_annotation(AnnotationRecord record) {
  check_irrelevant_exclusivity(record);
  const Sentence* sentence = corpus_.find_sentence(record.sentence_id);
  if (!sentence) throw NotFoundError("unknown sentence " + record.sentence_id);
  annotator(record.annotator_id);
  if (record.comment && record.comment->empty()) record.comment.reset();

  std::unique_lock lock(mutex_);
  if (!open_phase_of(sentence->announcement_id, record.annotator_id)) {
    throw ValidationError("sentence " + record.sentence_id + " is not assigned to " +
                          record.annotator_id + " in an open phase");
  }
  record.recorded_at = clock_();
  return store_locked(std::move(record));
}

std::optional<AnnotationRecord> AnnotationStore::latest(std::string_view sentence_id,
                                                        std::string_view annotator_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find({std::string(sentence_id), std::string(annotator_id)});
  if (it == records_.end() || it->second.empty()) return std::nullopt;
  return it->second.back();
}

std::vector<AnnotationRecord> AnnotationStore::history(std::string_view sentence_id,
                                                       std::string_view annotator_id) const {
  std::shared_lock lock(mutex_);
  auto it = records_.find({std::string(sentence_id), std::string(annotator_id)});
  return it == records_.end() ? std::vector<AnnotationRecord>{} : it->second;
}

std::vector<AnnotationRecord> AnnotationStore::latest_records() const {
  std::shared_lock lock(mutex_);
  std::vector<AnnotationRecord> out;
  for (const auto& [key, versions] : records_) out.push_back(versions.back());
  return out;
}

std::vector<std::string> AnnotationStore::assignment(int phase,
                                                     std::string_view annotator_id) const {
  const PhasePlan& p = plan(phase);
  std::vector<std::string> out = p.shared_announcements;
  auto it = p.unique_assignments.find(std::string(annotator_id));
  if (it != p.unique_assignments.end()) out.insert(out.end(), it->second.begin(), it->second.end());
  return out;
}

std::optional<std::pair<int, std::string>> AnnotationStore::next_announcement(
    std::string_view annotator_id) const {
  annotator(annotator_id);
  std::vector<int> phases;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [phase, open] : open_) {
      if (open) phases.push_back(phase);
    }
  }
  for (int phase : phases) {
    for (const auto& ann_id : assignment(phase, annotator_id)) {
      const Announcement* a = corpus_.find_announcement(ann_id);
      for (const Sentence& s : a->sentences) {
        if (!latest(s.id, annotator_id)) return std::make_pair(phase, ann_id);
      }
    }
  }
  return std::nullopt;
}

Progress AnnotationStore::progress(std::string_view annotator_id) const {
  annotator(annotator_id);
  Progress p;
  std::vector<int> phases;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [phase, _] : plans_) phases.push_back(phase);
  }
  for (int phase : phases) {
    for (const auto& ann_id : assignment(phase, annotator_id)) {
      const Announcement* a = corpus_.find_announcement(ann_id);
      ++p.assigned_announcements;
      std::size_t done = 0;
      for (const Sentence& s : a->sentences) {
        ++p.assigned_sentences;
        if (latest(s.id, annotator_id)) ++done;
      }
      p.labeled_sentences += done;
      if (done == a->sentences.size()) ++p.completed_announcements;
    }
  }
  return p;
}

AnnotationMatrix AnnotationStore::export_annotations(int phase, Level level,
                                                     bool allow_partial) const {
  if (is_open(phase) && !allow_partial) {
    throw ValidationError("phase " + std::to_string(phase) +
                          " is still open; pass allow_partial to export it");
  }
  plan(phase);
  AnnotationMatrix m;
  m.level = level;
  for (const Annotator& annotator : annotators_) {
    for (const auto& ann_id : assignment(phase, annotator.id)) {
      const Announcement* a = corpus_.find_announcement(ann_id);
      LabelSet doc;
      bool any = false;
      for (const Sentence& s : a->sentences) {
        auto r = latest(s.id, annotator.id);
        if (!r) continue;
        any = true;
        if (level == Level::sentence) {
          m.rows.push_back({s.id, annotator.id, r->labels, r->irrelevant, r->comment.value_or("")});
        } else {
          doc |= r->labels;
        }
      }
      if (level == Level::document && any) m.rows.push_back({a->id, annotator.id, doc, false, ""});
    }
  }
  return m;
}

void AnnotationStore::attach_journal(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  if (std::ifstream in(path); in) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      AnnotationRecord r;
      try {
        r = AnnotationRecord::from_json(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError("journal line " + std::to_string(n) + ": " + e.what());
      }
      check_irrelevant_exclusivity(r);
      records_[{r.sentence_id, r.annotator_id}].push_back(std::move(r));
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  journal_.open(path, std::ios::app);
  if (!journal_) throw Error(ErrorKind::internal, "cannot open journal " + path.string());
}

}  // namespace adhoc

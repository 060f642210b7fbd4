#include "adhoc/corpus/topic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "adhoc/core/error.hpp"

namespace adhoc {
namespace {

void check_topic(TopicId t) {
  if (t < 0 || t >= kNumTopics) {
    throw ValidationError("topic id " + std::to_string(t) + " outside 0.." +
                          std::to_string(kNumTopics - 1));
  }
}

}  // namespace

LabelSet LabelSet::from_bits(std::uint32_t bits) {
  if (bits & ~kAllBits) throw ValidationError("label bitmask sets bits beyond topic 19");
  LabelSet s;
  s.bits_ = bits;
  return s;
}

LabelSet LabelSet::of(std::initializer_list<TopicId> topics) {
  LabelSet s;
  for (TopicId t : topics) s.insert(t);
  return s;
}

bool LabelSet::contains(TopicId t) const {
  check_topic(t);
  return (bits_ >> t) & 1u;
}

void LabelSet::insert(TopicId t) {
  check_topic(t);
  bits_ |= 1u << t;
}

void LabelSet::erase(TopicId t) {
  check_topic(t);
  bits_ &= ~(1u << t);
}

std::vector<TopicId> LabelSet::topics() const {
  std::vector<TopicId> out;
  for (TopicId t = 0; t < kNumTopics; ++t) {
    if ((bits_ >> t) & 1u) out.push_back(t);
  }
  return out;
}

Taxonomy::Taxonomy(std::vector<Topic> topics) : topics_(std::move(topics)) {
  if (topics_.size() != static_cast<std::size_t>(kNumTopics)) {
    throw ConfigError("taxonomy must define exactly 20 topics, got " +
                      std::to_string(topics_.size()));
  }
  std::sort(topics_.begin(), topics_.end(),
            [](const Topic& a, const Topic& b) { return a.id < b.id; });
  std::set<std::string> names;
  for (std::size_t i = 0; i < topics_.size(); ++i) {
    const Topic& t = topics_[i];
    if (t.id != static_cast<TopicId>(i)) {
      throw ConfigError("taxonomy topic ids must be unique and dense 0..19");
    }
    if (t.name.empty()) throw ConfigError("topic " + std::to_string(t.id) + " has no name");
    if (!names.insert(t.name).second) throw ConfigError("duplicate topic name " + t.name);
    if (t.keywords.empty()) {
      throw ConfigError("topic '" + t.name + "' has an empty keyword list");
    }
  }
}

const Topic& Taxonomy::at(TopicId id) const {
  check_topic(id);
  return topics_[static_cast<std::size_t>(id)];
}

TopicId Taxonomy::find(std::string_view name) const {
  for (const Topic& t : topics_) {
    if (t.name == name) return t.id;
  }
  throw NotFoundError("unknown topic '" + std::string(name) + "'");
}

Taxonomy Taxonomy::from_json(const nlohmann::json& doc) {
  try {
    std::vector<Topic> topics;
    for (const auto& item : doc.at("topics")) {
      Topic t;
      t.id = item.at("id").get<int>();
      t.name = item.at("name").get<std::string>();
      t.description = item.value("description", "");
      t.keywords = item.at("keywords").get<std::vector<std::string>>();
      topics.push_back(std::move(t));
    }
    return Taxonomy(std::move(topics));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed taxonomy: ") + e.what());
  }
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open taxonomy file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("taxonomy " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Taxonomy::to_json() const {
  nlohmann::json topics = nlohmann::json::array();
  for (const Topic& t : topics_) {
    topics.push_back({{"id", t.id},
                      {"name", t.name},
                      {"description", t.description},
                      {"keywords", t.keywords}});
  }
  return {{"topics", topics}};
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy taxonomy(std::vector<Topic>{
      {0, "Earnings", "Earnings announcement, regular reporting on quarterly or annual results",
       {"earnings", "EBT", "EBIT", "EBITDA", "R&D", "DB1", "growth", "increase", "profit", "loss",
        "sales", "half year", "year", "quarter", "figures", "announce", "comparison",
        "previous year"}},
      {1, "SEO", "Capital increase/reduction by issuing additional shares",
       {"capital increase", "capital decrease", "subscription right", "shares", "subscribed",
        "placed", "increase", "issue price", "investors", "acquire", "note", "note taking",
        "volume"}},
      {2, "Management", "Any changes in management (board of directors, supervisory board, etc.)",
       {"chairman of the board", "CEO", "appointed", "office", "member", "supervisory board",
        "resign", "depart", "successor"}},
      {3, "Guidance", "A company's forecast of its own profit or loss in the near future",
       {"forecast", "expectation", "result", "profit", "loss", "EBIT", "should", "assume",
        "expect"}},
      {4, "Profit Warning", "Surprising deterioration in earnings/earnings forecast",
       {"loss", "negative", "reduce", "impairment", "EBIT"}},
      {5, "M&A",
       "New/expansion investment in company or own investment in other company, incl. acquisition",
       {"takeover", "acquires", "purchase price", "acquisition", "shares", "synergy",
        "synergy effects"}},
      {6, "Dividend", "Announcement dividend/dividend amount (incl. corrections and expectations)",
       {"dividend", "entitled to dividend", "distribution", "profits", "entitled to profit",
        "euros per share"}},
      {7, "Restructuring",
       "Restructuring measures (processes, organization, capital structure, operational "
       "restructuring)",
       {"restructuring", "restructure", "reorganization", "debt relief", "operational",
        "divestment", "credit receivable reduced", "secure financing", "bridge financing"}},
      {8, "Debt", "Company issues/returns loan/bond",
       {"bond", "convertible bond", "corporate bond", "debenture", "convertible debenture",
        "volume", "loan", "repayment", "interest", "interest rate", "coupon", "maturity",
        "liabilities"}},
      {9, "Law",
       "Company is involved in litigation, court case/investigation (case opened/closed, "
       "litigation accruals, sued)",
       {"court", "convicted", "order", "dismissed", "prosecution", "proceedings",
        "investigative proceedings", "action", "granted", "appeal", "objection", "judgment",
        "complaint", "damages", "authority review", "litigation provisions"}},
      {10, "Large Scale Project", "Completion of major project/order for the company",
       {"major order", "contract", "volume"}},
      {11, "Squeeze Out",
       "Majority shareholder applies for squeeze out, incl. progress of proceedings",
       {"squeeze-out", "squeeze", "cash compensation", "transfer of shares",
        "remaining shareholders", "majority shareholder", "minority shareholder"}},
      {12, "Bankruptcy Filing", "Company or third party has filed/will file for bankruptcy",
       {"bankruptcy application", "bankruptcy", "apply", "insolvency", "local court"}},
      {13, "Bankruptcy Proceedings",
       "Information about concrete progress of bankruptcy proceedings is published",
       {"bankruptcy plan", "bankruptcy administrator", "bankruptcy proceedings",
        "self-administration"}},
      {14, "Delay", "Mandatory report is postponed or not published at all/does not take place",
       {"delay", "IFRS", "cancel", "postpone", "annual financial statements"}},
      {15, "Split", "Company carries out stock split",
       {"split", "share split", "ratio", "new split", "bonus share", "additional share"}},
      {16, "Pharma Good", "Drug approval/announcement/study success",
       {"approval", "market approval", "FDA", "study", "results", "treatment", "drug",
        "diagnosis", "therapy", "active ingredient", "clinical", "trial", "application"}},
      {17, "Buyback", "Repurchase of own shares",
       {"buyback", "share buyback program", "redeem", "reduction of share capital"}},
      {18, "Real Invest", "Buying or selling assets such as land, factories, machinery, etc.",
       {"acquires", "sells", "build", "office building", "factory building", "factory",
        "land parcel", "construction", "production area", "usable area", "new", "land",
        "location"}},
      {19, "Delisting", "Permanent removal of a stock from a stock exchange",
       {"delisting", "revocation", "shares", "offer to purchase", "termination of listing",
        "stock exchange", "terminate"}},
  });
  return taxonomy;
}

}  // namespace adhoc

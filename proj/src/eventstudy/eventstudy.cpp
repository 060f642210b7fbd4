#include "adhoc/eventstudy/eventstudy.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"
#include "adhoc/core/stats.hpp"

namespace adhoc {

std::optional<std::size_t> ReturnPanel::trading_index(Date d) const {
  auto it = std::lower_bound(calendar.begin(), calendar.end(), d);
  if (it == calendar.end()) return std::nullopt;
  return static_cast<std::size_t>(it - calendar.begin());
}

void ReturnPanel::validate() const {
  if (calendar.empty()) throw ValidationError("return panel has an empty calendar");
  if (market.size() != calendar.size() || riskfree.size() != calendar.size()) {
    throw ValidationError("market and risk-free series must cover the calendar");
  }
  for (std::size_t i = 1; i < calendar.size(); ++i) {
    if (!(calendar[i - 1] < calendar[i])) throw ValidationError("calendar must be strictly increasing");
  }
  for (const auto& [firm, series] : firms) {
    if (series.size() != calendar.size()) {
      throw ValidationError("firm '" + firm + "' series is not aligned to the calendar");
    }
  }
}

namespace {

std::map<Date, double> read_series(std::istream& in, const std::string& what) {
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || *header != csv::Row{"date", "return"}) {
    throw ValidationError(what + " file must start with header date,return");
  }
  std::map<Date, double> out;
  while (auto row = reader.next()) {
    if (row->size() != 2) {
      throw ValidationError(what + " line " + std::to_string(reader.line()) + ": expected 2 fields");
    }
    const Date d = Date::parse((*row)[0]);
    if (!out.emplace(d, parse_double((*row)[1])).second) {
      throw ValidationError(what + " has duplicate date " + d.to_string());
    }
  }
  return out;
}

}  // namespace

ReturnPanel load_return_panel(std::istream& firm_returns, std::istream& market,
                              std::istream& riskfree) {
  const auto m = read_series(market, "market");
  const auto f = read_series(riskfree, "risk-free");
  if (m.empty()) throw ValidationError("market series is empty");
  ReturnPanel panel;
  for (const auto& [d, v] : m) {
    auto it = f.find(d);
    if (it == f.end()) throw ValidationError("risk-free series lacks trading day " + d.to_string());
    panel.calendar.push_back(d);
    panel.market.push_back(v);
    panel.riskfree.push_back(it->second);
  }
  if (f.size() != m.size()) throw ValidationError("risk-free series has days outside the market calendar");

  csv::Reader reader(firm_returns);
  const auto header = reader.next();
  if (!header || *header != csv::Row{"firm_id", "date", "return"}) {
    throw ValidationError("firm return file must start with header firm_id,date,return");
  }
  while (auto row = reader.next()) {
    const std::string where = "firm returns line " + std::to_string(reader.line());
    if (row->size() != 3) throw ValidationError(where + ": expected 3 fields");
    const Date d = Date::parse((*row)[1]);
    auto it = std::lower_bound(panel.calendar.begin(), panel.calendar.end(), d);
    if (it == panel.calendar.end() || *it != d) {
      throw ValidationError(where + ": " + d.to_string() + " is not a market trading day");
    }
    auto& series = panel.firms[(*row)[0]];
    if (series.empty()) series.resize(panel.calendar.size());
    auto& slot = series[static_cast<std::size_t>(it - panel.calendar.begin())];
    if (slot) throw ValidationError(where + ": duplicate return for " + (*row)[0]);
    slot = parse_double((*row)[2]);
  }
  panel.validate();
  return panel;
}

std::string firm_returns_csv(const ReturnPanel& panel) {
  std::ostringstream out;
  csv::write_row(out, {"firm_id", "date", "return"});
  for (const auto& [firm, series] : panel.firms) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i]) csv::write_row(out, {firm, panel.calendar[i].to_string(), format_double(*series[i])});
    }
  }
  return out.str();
}

std::string series_csv(const std::vector<Date>& calendar, const std::vector<double>& values) {
  std::ostringstream out;
  csv::write_row(out, {"date", "return"});
  for (std::size_t i = 0; i < calendar.size(); ++i) {
    csv::write_row(out, {calendar[i].to_string(), format_double(values.at(i))});
  }
  return out.str();
}

std::vector<EventSpec> read_events_csv(std::istream& in) {
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || *header != csv::Row{"firm_id", "date", "topics"}) {
    throw ValidationError("event file must start with header firm_id,date,topics");
  }
  std::vector<EventSpec> events;
  while (auto row = reader.next()) {
    const std::string where = "events line " + std::to_string(reader.line());
    if (row->size() != 3) throw ValidationError(where + ": expected 3 fields");
    const long long bits = parse_int((*row)[2]);
    if (bits < 0 || bits > static_cast<long long>(LabelSet::kAllBits)) {
      throw ValidationError(where + ": topic bitmask out of range");
    }
    events.push_back({(*row)[0], Date::parse((*row)[1]),
                      LabelSet::from_bits(static_cast<std::uint32_t>(bits))});
  }
  return events;
}

std::string events_csv(std::span<const EventSpec> events) {
  std::ostringstream out;
  csv::write_row(out, {"firm_id", "date", "topics"});
  for (const auto& e : events) {
    csv::write_row(out, {e.firm_id, e.date.to_string(), std::to_string(e.labels.bits())});
  }
  return out.str();
}

void EventStudyOptions::validate() const {
  if (min_observations < 1) throw ConfigError("eventstudy.min_observations must be positive");
  if (window < min_observations) throw ConfigError("eventstudy.window must be at least min_observations");
}

namespace {

struct ResolvedEvent {
  const EventSpec* spec;
  std::size_t day;
};

struct Regression {
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  std::size_t dof = 0;
};

std::optional<Regression> ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto k = x.cols();
  if (n <= k) return std::nullopt;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k) return std::nullopt;
  Regression r;
  r.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * r.beta;
  r.dof = static_cast<std::size_t>(n - k);
  const double sigma2 = resid.squaredNorm() / static_cast<double>(r.dof);
  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  r.se = (sigma2 * xtx_inv.diagonal()).cwiseMax(0.0).cwiseSqrt();
  return r;
}

void t_test(double estimate, double se, std::size_t dof, double& t, double& p) {
  if (se == 0.0) {
    t = estimate == 0.0 ? 0.0 : std::copysign(INFINITY, estimate);
    p = estimate == 0.0 ? 1.0 : 0.0;
    return;
  }
  t = estimate / se;
  const boost::math::students_t dist(static_cast<double>(dof));
  p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

class FirmStudy {
public:
  FirmStudy(const ReturnPanel& panel, const std::vector<std::optional<double>>& returns,
            const EventStudyOptions& options, EventStudyResult& out)
      : panel_(panel), returns_(returns), options_(options), out_(out) {}

  void run(std::vector<ResolvedEvent> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const ResolvedEvent& a, const ResolvedEvent& b) { return a.day < b.day; });
    for (const auto& e : events) {
      by_day_[e.day].push_back(e.spec);
      event_days_.insert(e.day);
    }
    for (const auto& [day, specs] : by_day_) {
      if (specs.size() > 1) {
        out_.warnings.push_back("firm " + specs.front()->firm_id + ": " +
                                std::to_string(specs.size()) + " events on " +
                                panel_.calendar[day].to_string() + " share one dummy");
      }
    }
    std::vector<std::size_t> days(event_days_.begin(), event_days_.end());
    std::size_t i = 0;
    while (i < days.size()) {
      const std::size_t first = days[i];
      const std::size_t history = history_count(first);
      if (history < options_.min_observations) {
        exclude(first, "insufficient_history", history);
        ++i;
        continue;
      }
      std::vector<std::size_t> group{first};
      if (options_.joint) {
        while (i + 1 < days.size() && days[i + 1] - group.back() <= options_.window) {
          group.push_back(days[++i]);
        }
      }
      ++i;
      fit_group(group, history);
    }
  }

private:
  std::size_t window_start(std::size_t day) const {
    return day >= options_.window ? day - options_.window : 0;
  }

  // A day enters a regression when the firm traded and it is not another
  // event's day outside the regression.
  bool usable(std::size_t day, const std::vector<std::size_t>& group) const {
    if (!returns_[day]) return false;
    if (event_days_.count(day) == 0) return true;
    return std::find(group.begin(), group.end(), day) != group.end();
  }

  std::size_t history_count(std::size_t day) const {
    std::size_t n = 0;
    for (std::size_t d = window_start(day); d < day; ++d) n += usable(d, {}) ? 1 : 0;
    return n;
  }

  void exclude(std::size_t day, const std::string& reason, std::size_t obs) {
    for (const EventSpec* s : by_day_.at(day)) out_.exclusions.push_back({s->firm_id, s->date, reason, obs});
  }

  void fit_group(const std::vector<std::size_t>& group, std::size_t history) {
    std::vector<std::size_t> sample;
    for (std::size_t d = window_start(group.front()); d <= group.back(); ++d) {
      if (usable(d, group)) sample.push_back(d);
    }
    const auto n = static_cast<Eigen::Index>(sample.size());
    const auto k = static_cast<Eigen::Index>(2 + group.size());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, k);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const std::size_t d = sample[static_cast<std::size_t>(r)];
      y(r) = *returns_[d] - panel_.riskfree[d];
      x(r, 0) = 1.0;
      x(r, 1) = panel_.market[d] - panel_.riskfree[d];
      for (std::size_t j = 0; j < group.size(); ++j) {
        if (group[j] == d) x(r, static_cast<Eigen::Index>(2 + j)) = 1.0;
      }
    }
    const auto reg = ols(x, y);
    if (!reg) {
      for (std::size_t day : group) exclude(day, "degenerate_fit", sample.size());
      return;
    }
    for (std::size_t j = 0; j < group.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(2 + j);
      const auto& specs = by_day_.at(group[j]);
      for (const EventSpec* s : specs) {
        EventFit f;
        f.firm_id = s->firm_id;
        f.event_date = s->date;
        f.trading_date = panel_.calendar[group[j]];
        f.labels = s->labels;
        f.alpha0 = reg->beta(0);
        f.alpha1 = reg->beta(1);
        f.alpha2 = reg->beta(col);
        f.se = reg->se(col);
        t_test(f.alpha2, f.se, reg->dof, f.t, f.p);
        f.n_obs = sample.size();
        f.history_obs = history;
        f.events_in_regression = group.size();
        f.merged = specs.size() > 1;
        out_.fits.push_back(std::move(f));
      }
    }
  }

  const ReturnPanel& panel_;
  const std::vector<std::optional<double>>& returns_;
  const EventStudyOptions& options_;
  EventStudyResult& out_;
  std::map<std::size_t, std::vector<const EventSpec*>> by_day_;
  std::set<std::size_t> event_days_;
};

}  // namespace

EventStudyResult run_event_study(const ReturnPanel& panel, std::span<const EventSpec> events,
                                 const EventStudyOptions& options) {
  options.validate();
  panel.validate();
  EventStudyResult result;
  std::map<std::string, std::vector<ResolvedEvent>> per_firm;
  for (const EventSpec& e : events) {
    auto firm = panel.firms.find(e.firm_id);
    if (firm == panel.firms.end()) {
      result.exclusions.push_back({e.firm_id, e.date, "unknown_firm", 0});
      continue;
    }
    const auto day = panel.trading_index(e.date);
    if (!day) {
      result.exclusions.push_back({e.firm_id, e.date, "after_calendar_end", 0});
      continue;
    }
    if (!firm->second[*day]) {
      result.exclusions.push_back({e.firm_id, e.date, "no_event_return", 0});
      continue;
    }
    per_firm[e.firm_id].push_back({&e, *day});
  }
  for (auto& [firm, list] : per_firm) {
    FirmStudy(panel, panel.firms.at(firm), options, result).run(std::move(list));
  }
  return result;
}

std::string event_fits_csv(std::span<const EventFit> fits) {
  std::ostringstream out;
  csv::write_row(out, {"firm_id", "date", "trading_date", "topics", "alpha0", "alpha1", "alpha2", "se",
                       "t", "p", "n_obs", "history_obs", "events_in_regression", "merged"});
  for (const auto& f : fits) {
    csv::write_row(out, {f.firm_id, f.event_date.to_string(), f.trading_date.to_string(),
                         std::to_string(f.labels.bits()), format_double(f.alpha0),
                         format_double(f.alpha1), format_double(f.alpha2), format_double(f.se),
                         format_double(f.t), format_double(f.p), std::to_string(f.n_obs),
                         std::to_string(f.history_obs), std::to_string(f.events_in_regression),
                         f.merged ? "1" : "0"});
  }
  return out.str();
}

std::string exclusions_csv(std::span<const EventExclusion> exclusions) {
  std::ostringstream out;
  csv::write_row(out, {"firm_id", "date", "reason", "observations"});
  for (const auto& e : exclusions) {
    csv::write_row(out, {e.firm_id, e.event_date.to_string(), e.reason, std::to_string(e.observations)});
  }
  return out.str();
}

std::vector<EventFit> read_event_fits_csv(std::istream& in) {
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || header->size() != 14 || (*header)[0] != "firm_id" || (*header)[6] != "alpha2") {
    throw ValidationError("event fit file has an unexpected header");
  }
  std::vector<EventFit> fits;
  while (auto row = reader.next()) {
    if (row->size() != 14) {
      throw ValidationError("event fits line " + std::to_string(reader.line()) + ": expected 14 fields");
    }
    const auto& r = *row;
    EventFit f;
    f.firm_id = r[0];
    f.event_date = Date::parse(r[1]);
    f.trading_date = Date::parse(r[2]);
    f.labels = LabelSet::from_bits(static_cast<std::uint32_t>(parse_int(r[3])));
    f.alpha0 = parse_double(r[4]);
    f.alpha1 = parse_double(r[5]);
    f.alpha2 = parse_double(r[6]);
    f.se = parse_double(r[7]);
    f.t = parse_double(r[8]);
    f.p = parse_double(r[9]);
    f.n_obs = static_cast<std::size_t>(parse_int(r[10]));
    f.history_obs = static_cast<std::size_t>(parse_int(r[11]));
    f.events_in_regression = static_cast<std::size_t>(parse_int(r[12]));
    f.merged = r[13] == "1";
    fits.push_back(std::move(f));
  }
  return fits;
}

bool is_significant(double p, double level) { return level > 0.0 && p <= level; }

std::vector<SignificanceRow> significance_split(std::span<const EventFit> fits, double level) {
  if (!(level >= 0.0 && level <= 1.0)) throw ValidationError("significance level must lie in [0, 1]");
  std::array<SignificanceRow, kNumTopics> rows{};
  for (const auto& f : fits) {
    const bool sig = is_significant(f.p, level);
    for (TopicId t : f.labels.topics()) {
      auto& r = rows[static_cast<std::size_t>(t)];
      ++r.events;
      if (sig && f.alpha2 > 0) ++r.positive;
      if (sig && f.alpha2 < 0) ++r.negative;
    }
  }
  std::vector<SignificanceRow> out;
  for (int t = 0; t < kNumTopics; ++t) {
    auto r = rows[static_cast<std::size_t>(t)];
    if (r.events == 0) continue;
    r.topic = t;
    r.positive_share = static_cast<double>(r.positive) / static_cast<double>(r.events);
    r.negative_share = static_cast<double>(r.negative) / static_cast<double>(r.events);
    out.push_back(r);
  }
  return out;
}

std::vector<DistributionRow> topic_distribution(std::span<const EventFit> fits) {
  std::array<std::vector<double>, kNumTopics> groups;
  for (const auto& f : fits) {
    for (TopicId t : f.labels.topics()) groups[static_cast<std::size_t>(t)].push_back(f.alpha2);
  }
  std::vector<DistributionRow> out;
  for (int t = 0; t < kNumTopics; ++t) {
    auto& g = groups[static_cast<std::size_t>(t)];
    if (g.empty()) continue;
    std::sort(g.begin(), g.end());
    out.push_back({t, g.size(), stats::nearest_rank(g, 5), stats::nearest_rank(g, 25),
                   stats::nearest_rank(g, 50), stats::nearest_rank(g, 75), stats::nearest_rank(g, 95)});
  }
  return out;
}

std::string significance_csv(std::span<const SignificanceRow> rows, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, {"topic", "events", "significant_positive", "significant_negative",
                       "positive_share", "negative_share"});
  for (const auto& r : rows) {
    csv::write_row(out, {taxonomy.name(r.topic), std::to_string(r.events), std::to_string(r.positive),
                         std::to_string(r.negative), format_double(r.positive_share),
                         format_double(r.negative_share)});
  }
  return out.str();
}

std::string distribution_csv(std::span<const DistributionRow> rows, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, {"topic", "events", "p5", "p25", "p50", "p75", "p95"});
  for (const auto& r : rows) {
    csv::write_row(out, {taxonomy.name(r.topic), std::to_string(r.events), format_double(r.p5),
                         format_double(r.p25), format_double(r.p50), format_double(r.p75),
                         format_double(r.p95)});
  }
  return out.str();
}

}  // namespace adhoc

#pragma once

#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adhoc/core/date.hpp"
#include "adhoc/corpus/topic.hpp"

namespace adhoc {

// Daily firm returns aligned to the market calendar. The market and
// risk-free series share the calendar; a firm's missing day is nullopt.
struct ReturnPanel {
  std::vector<Date> calendar;
  std::vector<double> market;
  std::vector<double> riskfree;
  std::map<std::string, std::vector<std::optional<double>>> firms;

  // Index of the first trading day on or after `d`.
  std::optional<std::size_t> trading_index(Date d) const;
  void validate() const;
};

// firm CSV `firm_id,date,return`; market and risk-free CSV `date,return`.
ReturnPanel load_return_panel(std::istream& firm_returns, std::istream& market,
                              std::istream& riskfree);
std::string firm_returns_csv(const ReturnPanel& panel);
std::string series_csv(const std::vector<Date>& calendar, const std::vector<double>& values);

struct EventSpec {
  std::string firm_id;
  Date date;
  LabelSet labels;
};

// `firm_id,date,topics` with topics as an integer bitmask (bit t = topic t).
std::vector<EventSpec> read_events_csv(std::istream& in);
std::string events_csv(std::span<const EventSpec> events);

struct EventStudyOptions {
  std::size_t window = 250;  // trading days before the event
  std::size_t min_observations = 73;
  // Events of one firm whose windows overlap share one regression with a
  // dummy per event; false fits each event alone.
  bool joint = true;

  void validate() const;
};

struct EventFit {
  std::string firm_id;
  Date event_date;
  Date trading_date;
  LabelSet labels;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
  std::size_t n_obs = 0;         // regression sample size
  std::size_t history_obs = 0;   // observations before the earliest event
  std::size_t events_in_regression = 1;
  bool merged = false;  // shares its dummy with another event on the same day
};

struct EventExclusion {
  std::string firm_id;
  Date event_date;
  std::string reason;  // insufficient_history, unknown_firm, after_calendar_end, no_event_return, degenerate_fit
  std::size_t observations = 0;
};

struct EventStudyResult {
  std::vector<EventFit> fits;
  std::vector<EventExclusion> exclusions;
  std::vector<std::string> warnings;
};

// OLS of (r_i - r_f) on an intercept, (r_m - r_f) and event-day dummies,
// with classical standard errors and t(n - k) p-values. A non-trading event
// date moves to the next trading day; several events on one day share a
// single dummy.
EventStudyResult run_event_study(const ReturnPanel& panel, std::span<const EventSpec> events,
                                 const EventStudyOptions& options = {});

std::string event_fits_csv(std::span<const EventFit> fits);
std::string exclusions_csv(std::span<const EventExclusion> exclusions);
std::vector<EventFit> read_event_fits_csv(std::istream& in);

// Two-sided p at or below `level`; level 0 marks nothing.
bool is_significant(double p, double level);

struct SignificanceRow {
  TopicId topic = 0;
  std::size_t events = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  double positive_share = 0.0;
  double negative_share = 0.0;
};

// One row per topic present in the fits; an event counts toward every
// topic in its label set.
std::vector<SignificanceRow> significance_split(std::span<const EventFit> fits, double level = 0.10);

struct DistributionRow {
  TopicId topic = 0;
  std::size_t events = 0;
  double p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0;
};

// Nearest-rank percentiles of alpha2 per topic.
std::vector<DistributionRow> topic_distribution(std::span<const EventFit> fits);

std::string significance_csv(std::span<const SignificanceRow> rows, const Taxonomy& taxonomy);
std::string distribution_csv(std::span<const DistributionRow> rows, const Taxonomy& taxonomy);

}  // namespace adhoc

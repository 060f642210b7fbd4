#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "adhoc/corpus/corpus.hpp"
#include "adhoc/eventstudy/eventstudy.hpp"

namespace adhoc {

struct PanelEvent {
  std::string firm_id;
  int year = 0;
  double abnormal_return = 0.0;
  LabelSet labels;
};

// Year from the calendar year of the announcement date.
std::vector<PanelEvent> panel_events(std::span<const EventFit> fits);

using TopicPair = std::pair<TopicId, TopicId>;

struct PanelDesign {
  std::vector<std::string> columns;  // 20 topic dummies, then retained pairs
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::size_t> firm;  // cluster index per row
  std::vector<std::size_t> year;
  std::vector<std::string> firm_ids;
  std::vector<int> years;
  std::vector<TopicPair> retained_pairs;
  PairCounts pair_support;
};

// All 190 unordered pairs are considered; a pair is kept when at least
// `min_pair_support` events carry both topics. Interaction columns are the
// AND of their parents.
PanelDesign build_design(std::span<const PanelEvent> events, const Taxonomy& taxonomy,
                         bool interactions = true, std::size_t min_pair_support = 20);

enum class ClusterMode { two_way, firm, year };
std::string_view to_string(ClusterMode mode);
ClusterMode parse_cluster_mode(std::string_view text);

struct FeOptions {
  ClusterMode clusters = ClusterMode::two_way;
  double tolerance = 1e-10;
  std::size_t max_iterations = 10000;
};

// Alternating firm and year demeaning of every column until the largest
// change in a sweep falls below `tolerance`.
Eigen::MatrixXd within_transform(const Eigen::MatrixXd& m, std::span<const std::size_t> firm,
                                 std::span<const std::size_t> year, double tolerance,
                                 std::size_t max_iterations, std::size_t* iterations = nullptr);

// Cluster-robust covariance with the G/(G-1) * (N-1)/(N-K) correction.
// `bread` is (X'X)^-1.
Eigen::MatrixXd cluster_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                                   const Eigen::MatrixXd& bread, std::span<const std::size_t> groups);

struct PanelCoefficient {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double t = 0.0;
  double p = 1.0;
};

struct PanelResult {
  std::vector<PanelCoefficient> coefficients;
  double within_r2 = 0.0;
  std::size_t n_obs = 0;
  std::size_t n_regressors = 0;
  std::vector<std::string> dropped_columns;
  std::vector<TopicPair> retained_pairs;
  std::vector<std::string> warnings;
  ClusterMode clusters = ClusterMode::two_way;
  std::size_t firm_clusters = 0;
  std::size_t year_clusters = 0;
  std::size_t demeaning_iterations = 0;

  const PanelCoefficient* find(std::string_view name) const;
};

// Two-way fixed effects absorbed by demeaning, OLS on the transformed data
// and clustered standard errors; p-values from t with (fewest clusters - 1)
// degrees of freedom. Collinear columns are dropped and named. A dimension
// with a single cluster falls back to one-way clustering on the other.
// Throws DegenerateError when nothing is estimable.
PanelResult fit_fe(const PanelDesign& design, const FeOptions& options = {});

// Coefficient and p-value columns for both specifications plus the
// within-R2, observation and regressor counts.
std::string panel_table_csv(const PanelResult& without_interactions,
                            const PanelResult& with_interactions);
nlohmann::json panel_result_json(const PanelResult& result);

// One row per retained pair; estimates with p above `level` are blanked.
std::string interaction_matrix_csv(const PanelResult& with_interactions, const Taxonomy& taxonomy,
                                   double level = 0.10);

}  // namespace adhoc

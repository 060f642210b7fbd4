#include "adhoc/panel/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

using nlohmann::json;

std::vector<PanelEvent> panel_events(std::span<const EventFit> fits) {
  std::vector<PanelEvent> out;
  out.reserve(fits.size());
  for (const auto& f : fits) out.push_back({f.firm_id, f.event_date.year(), f.alpha2, f.labels});
  return out;
}

namespace {

template <typename T>
std::vector<std::size_t> dense_index(const std::vector<T>& keys, std::vector<T>& levels) {
  levels = keys;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::size_t> idx;
  idx.reserve(keys.size());
  for (const auto& k : keys) {
    idx.push_back(static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), k) - levels.begin()));
  }
  return idx;
}

std::size_t group_count(std::span<const std::size_t> groups) {
  std::size_t n = 0;
  for (std::size_t g : groups) n = std::max(n, g + 1);
  return n;
}

}  // namespace

PanelDesign build_design(std::span<const PanelEvent> events, const Taxonomy& taxonomy,
                         bool interactions, std::size_t min_pair_support) {
  if (events.empty()) throw ValidationError("panel has no observations");
  PanelDesign d;
  std::vector<std::string> firm_keys;
  std::vector<int> year_keys;
  std::vector<LabelSet> labels;
  for (const auto& e : events) {
    firm_keys.push_back(e.firm_id);
    year_keys.push_back(e.year);
    labels.push_back(e.labels);
  }
  d.firm = dense_index(firm_keys, d.firm_ids);
  d.year = dense_index(year_keys, d.years);
  d.pair_support = cooccurrence_counts(labels);

  for (int t = 0; t < kNumTopics; ++t) d.columns.push_back(taxonomy.name(t));
  if (interactions) {
    for (const auto& [pair, count] : d.pair_support) {
      if (count >= min_pair_support) d.retained_pairs.push_back(pair);
    }
    for (const auto& [a, b] : d.retained_pairs) {
      d.columns.push_back(taxonomy.name(a) + ":" + taxonomy.name(b));
    }
  }

  const auto n = static_cast<Eigen::Index>(events.size());
  d.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(d.columns.size()));
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = events[static_cast<std::size_t>(i)];
    d.y(i) = e.abnormal_return;
    for (TopicId t : e.labels.topics()) d.x(i, t) = 1.0;
    for (std::size_t p = 0; p < d.retained_pairs.size(); ++p) {
      const auto& [a, b] = d.retained_pairs[p];
      if (e.labels.contains(a) && e.labels.contains(b)) d.x(i, kNumTopics + static_cast<Eigen::Index>(p)) = 1.0;
    }
  }
  return d;
}

std::string_view to_string(ClusterMode mode) {
  switch (mode) {
    case ClusterMode::two_way: return "two_way";
    case ClusterMode::firm: return "firm";
    case ClusterMode::year: return "year";
  }
  return "two_way";
}

ClusterMode parse_cluster_mode(std::string_view text) {
  if (text == "two_way") return ClusterMode::two_way;
  if (text == "firm") return ClusterMode::firm;
  if (text == "year") return ClusterMode::year;
  throw ConfigError("cluster mode must be 'two_way', 'firm' or 'year', got '" + std::string(text) + "'");
}

Eigen::MatrixXd within_transform(const Eigen::MatrixXd& m, std::span<const std::size_t> firm,
                                 std::span<const std::size_t> year, double tolerance,
                                 std::size_t max_iterations, std::size_t* iterations) {
  if (firm.size() != static_cast<std::size_t>(m.rows()) || year.size() != firm.size()) {
    throw ValidationError("cluster indices do not match the number of rows");
  }
  const std::size_t n_firm = group_count(firm);
  const std::size_t n_year = group_count(year);
  std::vector<double> firm_n(n_firm, 0.0);
  std::vector<double> year_n(n_year, 0.0);
  for (std::size_t i = 0; i < firm.size(); ++i) {
    firm_n[firm[i]] += 1.0;
    year_n[year[i]] += 1.0;
  }
  Eigen::MatrixXd out = m;
  auto sweep = [&](std::span<const std::size_t> groups, const std::vector<double>& counts) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(counts.size()), out.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) sums.row(static_cast<Eigen::Index>(groups[static_cast<std::size_t>(i)])) += out.row(i);
    double change = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const auto g = static_cast<Eigen::Index>(groups[static_cast<std::size_t>(i)]);
      const Eigen::RowVectorXd mean = sums.row(g) / counts[static_cast<std::size_t>(g)];
      change = std::max(change, mean.cwiseAbs().maxCoeff());
      out.row(i) -= mean;
    }
    return change;
  };
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    const double change = std::max(sweep(firm, firm_n), sweep(year, year_n));
    if (change < tolerance) {
      if (iterations) *iterations = it;
      return out;
    }
  }
  throw Error(ErrorKind::internal, "fixed-effect demeaning did not converge within " +
                                       std::to_string(max_iterations) + " sweeps");
}

Eigen::MatrixXd cluster_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals,
                                   const Eigen::MatrixXd& bread, std::span<const std::size_t> groups) {
  const std::size_t g_count = group_count(groups);
  const auto k = x.cols();
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g_count), k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    scores.row(static_cast<Eigen::Index>(groups[static_cast<std::size_t>(i)])) += residuals(i) * x.row(i);
  }
  const Eigen::MatrixXd meat = scores.transpose() * scores;
  const double g = static_cast<double>(g_count);
  const double n = static_cast<double>(x.rows());
  const double c = g / (g - 1.0) * (n - 1.0) / (n - static_cast<double>(k));
  return c * bread * meat * bread;
}

const PanelCoefficient* PanelResult::find(std::string_view name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

PanelResult fit_fe(const PanelDesign& d, const FeOptions& options) {
  const auto n = d.x.rows();
  if (n == 0) throw ValidationError("panel has no observations");
  PanelResult r;
  r.n_obs = static_cast<std::size_t>(n);
  r.retained_pairs = d.retained_pairs;
  r.firm_clusters = d.firm_ids.size();
  r.year_clusters = d.years.size();
  if (r.firm_clusters < 2 && r.year_clusters < 2) {
    throw ValidationError("panel needs at least 2 firms or 2 years");
  }

  Eigen::MatrixXd joint(n, d.x.cols() + 1);
  joint.col(0) = d.y;
  joint.rightCols(d.x.cols()) = d.x;
  const Eigen::MatrixXd within =
      within_transform(joint, d.firm, d.year, options.tolerance, options.max_iterations,
                       &r.demeaning_iterations);
  const Eigen::VectorXd y = within.col(0);

  // Modified Gram-Schmidt screen for columns absorbed by the fixed effects
  // or spanned by earlier columns.
  std::vector<Eigen::Index> kept;
  std::vector<Eigen::VectorXd> basis;
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
    Eigen::VectorXd v = within.col(j + 1);
    const double raw = d.x.col(j).norm();
    for (const auto& q : basis) v -= q.dot(v) * q;
    const double norm = v.norm();
    if (raw == 0.0 || norm <= 1e-9 * std::max(raw, 1.0)) {
      r.dropped_columns.push_back(d.columns[static_cast<std::size_t>(j)]);
      continue;
    }
    basis.push_back(v / norm);
    kept.push_back(j);
  }
  if (kept.empty()) {
    throw DegenerateError("no estimable regressors after the within transformation");
  }
  if (kept.size() >= static_cast<std::size_t>(n)) {
    throw DegenerateError("more regressors than observations");
  }
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) x.col(static_cast<Eigen::Index>(j)) = within.col(kept[j] + 1);
  const auto k = x.cols();
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::VectorXd beta = bread * (x.transpose() * y);
  const Eigen::VectorXd resid = y - x * beta;
  const double sst = y.squaredNorm();
  r.within_r2 = sst > 0.0 ? 1.0 - resid.squaredNorm() / sst : 0.0;
  r.n_regressors = kept.size();

  Eigen::MatrixXd cov;
  Eigen::MatrixXd one_way_max;  // fallback diagonal for negative two-way variances
  std::size_t dof_clusters = 0;
  const bool firm_ok = r.firm_clusters >= 2;
  const bool year_ok = r.year_clusters >= 2;
  if (options.clusters == ClusterMode::two_way && firm_ok && year_ok) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
    std::vector<std::size_t> both;
    both.reserve(d.firm.size());
    for (std::size_t i = 0; i < d.firm.size(); ++i) {
      both.push_back(cells.emplace(std::pair(d.firm[i], d.year[i]), cells.size()).first->second);
    }
    const Eigen::MatrixXd vf = cluster_covariance(x, resid, bread, d.firm);
    const Eigen::MatrixXd vy = cluster_covariance(x, resid, bread, d.year);
    cov = vf + vy - cluster_covariance(x, resid, bread, both);
    one_way_max = vf.cwiseMax(vy);
    dof_clusters = std::min(r.firm_clusters, r.year_clusters);
    r.clusters = ClusterMode::two_way;
  } else {
    const bool by_firm = options.clusters == ClusterMode::year ? !year_ok : firm_ok;
    const bool requested = options.clusters == (by_firm ? ClusterMode::firm : ClusterMode::year);
    if (!requested) {
      r.warnings.push_back(std::string("single cluster in the ") + (firm_ok ? "year" : "firm") +
                           " dimension; clustering by " + (by_firm ? "firm" : "year") + " only");
    }
    cov = cluster_covariance(x, resid, bread, by_firm ? d.firm : d.year);
    dof_clusters = by_firm ? r.firm_clusters : r.year_clusters;
    r.clusters = by_firm ? ClusterMode::firm : ClusterMode::year;
  }

  const boost::math::students_t dist(static_cast<double>(dof_clusters - 1));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    PanelCoefficient c;
    c.name = d.columns[static_cast<std::size_t>(kept[j])];
    c.estimate = beta(jj);
    double var = cov(jj, jj);
    if (var < 0.0) {
      r.warnings.push_back("negative two-way variance for " + c.name +
                           "; using the larger one-way variance");
      var = one_way_max(jj, jj);
    }
    c.se = std::sqrt(var);
    if (c.se > 0.0) {
      c.t = c.estimate / c.se;
      c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(c.t)));
    } else {
      c.t = c.estimate == 0.0 ? 0.0 : std::copysign(INFINITY, c.estimate);
      c.p = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    r.coefficients.push_back(std::move(c));
  }
  return r;
}

std::string panel_table_csv(const PanelResult& without, const PanelResult& with) {
  std::vector<std::string> terms;
  for (const auto* res : {&without, &with}) {
    for (const auto& c : res->coefficients) {
      if (std::find(terms.begin(), terms.end(), c.name) == terms.end()) terms.push_back(c.name);
    }
  }
  std::ostringstream out;
  csv::write_row(out, {"term", "without_interactions_coefficient", "without_interactions_p",
                       "with_interactions_coefficient", "with_interactions_p"});
  for (const auto& term : terms) {
    csv::Row row{term};
    for (const auto* res : {&without, &with}) {
      const PanelCoefficient* c = res->find(term);
      row.push_back(c ? format_double(c->estimate) : "");
      row.push_back(c ? format_double(c->p) : "");
    }
    csv::write_row(out, row);
  }
  csv::write_row(out, {"R2 (within)", format_double(without.within_r2), "", format_double(with.within_r2), ""});
  csv::write_row(out, {"Num. obs.", std::to_string(without.n_obs), "", std::to_string(with.n_obs), ""});
  csv::write_row(out, {"Num. regressors", std::to_string(without.n_regressors), "",
                       std::to_string(with.n_regressors), ""});
  return out.str();
}

json panel_result_json(const PanelResult& r) {
  json coefs = json::array();
  for (const auto& c : r.coefficients) {
    coefs.push_back({{"term", c.name}, {"coefficient", c.estimate}, {"se", c.se}, {"t", c.t}, {"p", c.p}});
  }
  json pairs = json::array();
  for (const auto& [a, b] : r.retained_pairs) pairs.push_back({a, b});
  return {{"coefficients", coefs},
          {"within_r2", r.within_r2},
          {"n_obs", r.n_obs},
          {"n_regressors", r.n_regressors},
          {"dropped_columns", r.dropped_columns},
          {"retained_pairs", pairs},
          {"warnings", r.warnings},
          {"clusters", std::string(to_string(r.clusters))},
          {"firm_clusters", r.firm_clusters},
          {"year_clusters", r.year_clusters},
          {"demeaning_iterations", r.demeaning_iterations}};
}

std::string interaction_matrix_csv(const PanelResult& with, const Taxonomy& taxonomy, double level) {
  std::ostringstream out;
  csv::write_row(out, {"topic_row", "topic_col", "coefficient", "p"});
  for (const auto& [a, b] : with.retained_pairs) {
    const PanelCoefficient* c = with.find(taxonomy.name(a) + ":" + taxonomy.name(b));
    const bool show = c && is_significant(c->p, level);
    csv::write_row(out, {taxonomy.name(a), taxonomy.name(b), show ? format_double(c->estimate) : "",
                         show ? format_double(c->p) : ""});
  }
  return out.str();
}

}  // namespace adhoc

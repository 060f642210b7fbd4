#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "adhoc/agreement/kappa.hpp"
#include "adhoc/agreement/metrics.hpp"
#include "adhoc/core/rng.hpp"
#include "adhoc/prelabel/bm25.hpp"
#include "checks.hpp"

namespace acceptance {

using namespace adhoc;

namespace {

// Brute force: lay the tuple out as explicit (predicted, actual) pairs.
Prf1 enumerate_prf1(const BinaryCounts& c) {
  std::vector<std::pair<bool, bool>> items;
  items.insert(items.end(), c.tp, {true, true});
  items.insert(items.end(), c.fp, {true, false});
  items.insert(items.end(), c.fn, {false, true});
  items.insert(items.end(), c.tn, {false, false});
  double hit = 0, predicted = 0, actual = 0;
  for (const auto& [p, a] : items) {
    hit += p && a;
    predicted += p;
    actual += a;
  }
  Prf1 r;
  r.precision = predicted > 0 ? hit / predicted : 0.0;
  r.recall = actual > 0 ? hit / actual : 0.0;
  r.f1 = predicted + actual > 0 ? 2 * hit / (predicted + actual) : 0.0;
  return r;
}

Outcome metrics() {
  Stopwatch clock;
  Rng rng(101);
  double worst = 0.0;
  std::vector<BinaryCounts> tuples;
  for (int i = 0; i < 1000; ++i) {
    // Small counts make 0/0 cells common.
    const std::uint64_t hi = i % 4 == 0 ? 3 : 60;
    tuples.push_back({rng.below(hi), rng.below(hi), rng.below(hi), rng.below(hi)});
  }
  for (const auto& t : tuples) {
    const Prf1 got = prf1(t);
    const Prf1 want = enumerate_prf1(t);
    worst = std::max({worst, std::abs(got.precision - want.precision), std::abs(got.recall - want.recall),
                      std::abs(got.f1 - want.f1)});
  }
  // 50 topic sets of 20 tuples each.
  for (std::size_t g = 0; g < tuples.size(); g += kNumTopics) {
    const std::span<const BinaryCounts> set(tuples.data() + g, kNumTopics);
    const MacroMicro got = macro_micro(set);
    double mp = 0, mr = 0, mf = 0;
    BinaryCounts sum;
    for (const auto& t : set) {
      const Prf1 one = enumerate_prf1(t);
      mp += one.precision;
      mr += one.recall;
      mf += one.f1;
      sum.tp += t.tp;
      sum.fp += t.fp;
      sum.fn += t.fn;
      sum.tn += t.tn;
    }
    const Prf1 micro = enumerate_prf1(sum);
    worst = std::max({worst, std::abs(got.macro.precision - mp / kNumTopics), std::abs(got.macro.recall - mr / kNumTopics),
                      std::abs(got.macro.f1 - mf / kNumTopics), std::abs(got.micro.precision - micro.precision),
                      std::abs(got.micro.recall - micro.recall), std::abs(got.micro.f1 - micro.f1)});
  }
  const double secs = clock.seconds();
  const bool ok = worst <= 1e-12 && secs < 1.0;
  std::ostringstream d;
  d << "1000 tuples, 50 macro/micro sets; max abs diff " << worst << " (tol 1e-12); " << secs << " s (limit 1 s)";
  return {"metric oracle", ok, d.str()};
}

// Direct evaluation of kappa = (p_a - p_e) / (1 - p_e) from an explicit
// items x raters 0/1 matrix, agreement counted over ordered rater pairs.
double kappa_by_definition(const std::vector<std::vector<int>>& m) {
  const std::size_t n = m.front().size();
  double pa = 0.0, ones = 0.0;
  for (const auto& row : m) {
    double agree = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      ones += row[a];
      for (std::size_t b = 0; b < n; ++b) agree += a != b && row[a] == row[b];
    }
    pa += agree / static_cast<double>(n * (n - 1));
  }
  pa /= static_cast<double>(m.size());
  const double q = ones / static_cast<double>(m.size() * n);
  const double pe = q * q + (1 - q) * (1 - q);
  if (pe == 1.0) return 1.0;
  return (pa - pe) / (1 - pe);
}

// Cohen's kappa for two raters: observed agreement against the product of
// each rater's own marginals.
double cohen(const std::vector<std::vector<int>>& m) {
  double agree = 0, a1 = 0, b1 = 0;
  for (const auto& row : m) {
    agree += row[0] == row[1];
    a1 += row[0];
    b1 += row[1];
  }
  const double n = static_cast<double>(m.size());
  const double po = agree / n;
  const double pa = a1 / n, pb = b1 / n;
  const double pe = pa * pb + (1 - pa) * (1 - pb);
  if (pe == 1.0) return 1.0;
  return (po - pe) / (1 - pe);
}

std::vector<int> positives(const std::vector<std::vector<int>>& m) {
  std::vector<int> p;
  for (const auto& row : m) p.push_back(std::accumulate(row.begin(), row.end(), 0));
  return p;
}

Outcome kappa() {
  Rng rng(202);
  double worst = 0.0;
  std::size_t two_rater = 0, equal_marginal = 0, unequal = 0;
  double cohen_worst = 0.0, scott_gap = 0.0;
  auto run_cohen = [&](const std::vector<std::vector<int>>& m, double k) {
    int a = 0, b = 0;
    for (const auto& row : m) {
      a += row[0];
      b += row[1];
    }
    if (a == b) {
      ++equal_marginal;
      cohen_worst = std::max(cohen_worst, std::abs(k - cohen(m)));
    } else {
      ++unequal;
      scott_gap = std::max(scott_gap, std::abs(k - cohen(m)));
    }
  };
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t items = 1 + rng.below(10);
    const int raters = 2 + static_cast<int>(rng.below(8));
    const double rate = rng.uniform();
    std::vector<std::vector<int>> m(items, std::vector<int>(static_cast<std::size_t>(raters)));
    for (auto& row : m) {
      for (auto& v : row) v = rng.uniform() < rate;
    }
    const double k = fleiss_kappa(positives(m), raters);
    worst = std::max(worst, std::abs(k - kappa_by_definition(m)));
    if (raters == 2) {
      ++two_rater;
      run_cohen(m, k);
    }
  }
  // Two-rater matrices whose second rater permutes the first rater's
  // ratings, so both marginals agree.
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t items = 2 + rng.below(9);
    std::vector<int> first(items);
    for (auto& v : first) v = rng.uniform() < 0.5;
    std::vector<int> second = first;
    for (std::size_t i = items; i > 1; --i) std::swap(second[i - 1], second[rng.below(i)]);
    std::vector<std::vector<int>> m;
    for (std::size_t i = 0; i < items; ++i) m.push_back({first[i], second[i]});
    const double k = fleiss_kappa(positives(m), 2);
    worst = std::max(worst, std::abs(k - kappa_by_definition(m)));
    ++two_rater;
    run_cohen(m, k);
  }

  const std::vector<std::pair<double, std::string>> probes{
      {-0.2, "Less than chance agreement"}, {0.15, "Slight agreement"},
      {0.40, "Fair agreement"},             {0.60, "Moderate agreement"},
      {0.65, "Substantial agreement"},      {0.80, "Substantial agreement"},
      {0.81, "Almost perfect agreement"},   {0.99, "Almost perfect agreement"}};
  int band_ok = 0;
  for (const auto& [k, label] : probes) band_ok += band_label(interpret_kappa(k)) == label;

  const bool ok = worst <= 1e-12 && cohen_worst <= 1e-12 && equal_marginal > 0 &&
                  band_ok == static_cast<int>(probes.size());
  std::ostringstream d;
  d << "500 random matrices + 200 equal-marginal pairs; Fleiss vs definition max diff " << worst
    << "; Cohen on " << equal_marginal << " equal-marginal 2-rater cases max diff " << cohen_worst
    << " (" << unequal << " unequal-marginal 2-rater cases differ by up to " << scott_gap
    << ", Fleiss reduces to Scott's pi there); bands " << band_ok << "/" << probes.size();
  return {"Fleiss kappa oracle", ok, d.str()};
}

struct Bm25Case {
  std::vector<std::vector<std::string>> docs;
  std::vector<std::string> query;
  Bm25Params params;
};

std::vector<std::pair<std::string, std::string>> as_documents(const std::vector<std::vector<std::string>>& docs) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string text;
    for (const auto& w : docs[i]) text += w + " ";
    out.push_back({"d" + std::to_string(i), text});
  }
  return out;
}

double bm25_by_hand(const Bm25Case& c, std::size_t doc) {
  const double n = static_cast<double>(c.docs.size());
  double total_len = 0;
  for (const auto& d : c.docs) total_len += static_cast<double>(d.size());
  const double avg = total_len / n;
  double s = 0;
  for (const auto& q : c.query) {
    double df = 0;
    for (const auto& d : c.docs) df += std::find(d.begin(), d.end(), q) != d.end();
    const double tf = static_cast<double>(std::count(c.docs[doc].begin(), c.docs[doc].end(), q));
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double len = static_cast<double>(c.docs[doc].size());
    s += idf * tf * (c.params.k1 + 1) / (tf + c.params.k1 * (1 - c.params.b + c.params.b * len / avg));
  }
  return s;
}

std::string word(std::uint64_t i) { return "w" + std::to_string(i); }

Outcome bm25() {
  Rng rng(303);
  double worst = 0.0;
  std::size_t scored = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Bm25Case c;
    const std::size_t n = 1 + rng.below(30);
    const std::uint64_t vocab = 3 + rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> d;
      const std::size_t len = 1 + rng.below(25);
      for (std::size_t k = 0; k < len; ++k) d.push_back(word(rng.below(vocab)));
      c.docs.push_back(d);
    }
    const std::size_t qlen = 1 + rng.below(6);
    // Query words may fall outside the collection vocabulary.
    for (std::size_t k = 0; k < qlen; ++k) c.query.push_back(word(rng.below(vocab + 3)));
    c.params.k1 = rng.uniform(0.1, 3.0);
    c.params.b = trial % 10 == 0 ? 0.0 : (trial % 10 == 1 ? 1.0 : rng.uniform());
    const auto index = Bm25Index::build(as_documents(c.docs));
    for (std::size_t d = 0; d < n; ++d) {
      const double want = bm25_by_hand(c, d);
      worst = std::max(worst, std::abs(index.score(c.query, d, c.params) - want) / std::max(1.0, std::abs(want)));
      ++scored;
    }
  }

  // Swap one non-query token of a document for the query term: length and
  // average length stay fixed, tf rises by one.
  std::size_t probes = 0, monotone = 0;
  while (probes < 1000) {
    std::vector<std::vector<std::string>> docs;
    const std::size_t n = 2 + rng.below(15);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> d;
      const std::size_t len = 2 + rng.below(15);
      for (std::size_t k = 0; k < len; ++k) d.push_back(word(rng.below(6)));
      docs.push_back(d);
    }
    const std::size_t doc = rng.below(n);
    const std::string term = docs[doc][rng.below(docs[doc].size())];
    std::vector<std::size_t> others;
    for (std::size_t k = 0; k < docs[doc].size(); ++k) {
      if (docs[doc][k] != term) others.push_back(k);
    }
    if (others.empty()) continue;
    Bm25Params params;
    params.k1 = rng.uniform(0.1, 3.0);
    params.b = rng.uniform();
    const std::vector<std::string> query{term};
    const double before = Bm25Index::build(as_documents(docs)).score(query, doc, params);
    docs[doc][others[rng.below(others.size())]] = term;
    const double after = Bm25Index::build(as_documents(docs)).score(query, doc, params);
    ++probes;
    monotone += after > before;
  }

  const bool ok = worst <= 1e-12 && monotone == probes;
  std::ostringstream d;
  d << "100 cases (" << scored << " document scores), max rel diff " << worst << " (tol 1e-12); tf monotone on "
    << monotone << "/" << probes << " probes";
  return {"BM25", ok, d.str()};
}

}  // namespace

void metric_checks(Outcomes& out) {
  out.push_back(metrics());
  out.push_back(kappa());
  out.push_back(bm25());
}

}  // namespace acceptance

#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace acceptance {

struct Outcome {
  std::string criterion;
  bool pass = false;
  std::string detail;
};

using Outcomes = std::vector<Outcome>;

void metric_checks(Outcomes& out);    // metrics, kappa, BM25
void classify_checks(Outcomes& out);  // NN training, synthetic classification
void returns_checks(Outcomes& out);   // event study, panel, end-to-end determinism

class Stopwatch {
public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace acceptance

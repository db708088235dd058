#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace emsaudit::crf {

// Per-token tag scores, T x K.
using Emissions = Eigen::MatrixXd;

// (K+2) x (K+2) scores indexed (from, to). Index K is the virtual START
// state and K+1 the virtual STOP state; entries into START and out of STOP
// are -inf.
using Transitions = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int start_state(int num_tags) { return num_tags; }
inline int stop_state(int num_tags) { return num_tags + 1; }

// Zero scores everywhere except the forbidden START/STOP entries.
Transitions make_transitions(int num_tags);

double log_sum_exp(std::span<const double> values);

// trans[START, y0] + sum_t em[t, y_t] + sum_t trans[y_{t-1}, y_t] + trans[y_{T-1}, STOP]
double path_score(const Emissions& emissions, const Transitions& transitions, std::span<const int> tags);

// Forward algorithm in log space. Requires T >= 1.
double log_partition(const Emissions& emissions, const Transitions& transitions);

struct ViterbiResult {
  std::vector<int> tags;
  double score = 0.0;
};

ViterbiResult viterbi(const Emissions& emissions, const Transitions& transitions);

// Negative log-likelihood of the gold path together with its gradient with
// respect to the emissions and the transitions (expected minus observed
// counts from forward-backward marginals).
struct NllGradient {
  double nll = 0.0;
  Eigen::MatrixXd d_emissions;  // T x K
  Transitions d_transitions;    // (K+2) x (K+2)
};

NllGradient nll_with_gradient(const Emissions& emissions, const Transitions& transitions,
                              std::span<const int> gold);

}  // namespace emsaudit::crf

#include "emsaudit/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emsaudit/error.hpp"

namespace emsaudit::crf {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const Emissions& em, const Transitions& trans) {
  const auto k = em.cols();
  if (em.rows() < 1) throw Error("CRF requires at least one token");
  if (trans.rows() != k + 2 || trans.cols() != k + 2) throw Error("transition matrix must be (K+2)x(K+2)");
}

// The K x K block of transitions is exponentiated once after shifting by its
// largest finite entry; each recursion step then rescales by its own maximum,
// so only O(T K) exponentials are needed.
struct ScaledTransitions {
  Eigen::MatrixXd exp_trans;  // exp(trans(i, j) - shift)
  double shift = 0.0;
};

ScaledTransitions scale_transitions(const Transitions& trans, int K) {
  ScaledTransitions out;
  const auto block = trans.topLeftCorner(K, K);
  double top = kNegInf;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (std::isfinite(block(i, j))) top = std::max(top, block(i, j));
    }
  }
  out.shift = top == kNegInf ? 0.0 : top;
  out.exp_trans = (block.array() - out.shift).exp().matrix();
  return out;
}

// exp(row - max(row)) and the max; an all -inf row yields zeros and -inf.
double exp_shifted(const Eigen::Ref<const Eigen::RowVectorXd>& row, Eigen::RowVectorXd& out) {
  const double top = row.maxCoeff();
  if (top == kNegInf) {
    out.setZero(row.size());
    return kNegInf;
  }
  out = (row.array() - top).exp().matrix();
  return top;
}

// alpha(t, j): log-sum of scores of all prefixes ending in tag j at t.
Eigen::MatrixXd forward_scores(const Emissions& em, const Transitions& trans, const ScaledTransitions& st) {
  const int T = static_cast<int>(em.rows());
  const int K = static_cast<int>(em.cols());
  const int start = start_state(K);
  Eigen::MatrixXd alpha(T, K);
  Eigen::RowVectorXd p(K);
  Eigen::RowVectorXd q(K);
  for (int j = 0; j < K; ++j) alpha(0, j) = trans(start, j) + em(0, j);
  for (int t = 1; t < T; ++t) {
    const double c = exp_shifted(alpha.row(t - 1), p);
    if (c == kNegInf) {
      alpha.row(t).setConstant(kNegInf);
      continue;
    }
    q.noalias() = p * st.exp_trans;
    alpha.row(t) = (q.array().log() + (c + st.shift)).matrix() + em.row(t);
  }
  return alpha;
}

// beta(t, i): log-sum of scores of all suffixes after tag i at t, STOP included.
Eigen::MatrixXd backward_scores(const Emissions& em, const Transitions& trans, const ScaledTransitions& st) {
  const int T = static_cast<int>(em.rows());
  const int K = static_cast<int>(em.cols());
  const int stop = stop_state(K);
  Eigen::MatrixXd beta(T, K);
  Eigen::RowVectorXd w(K);
  Eigen::VectorXd r(K);
  for (int i = 0; i < K; ++i) beta(T - 1, i) = trans(i, stop);
  for (int t = T - 2; t >= 0; --t) {
    const Eigen::RowVectorXd v = em.row(t + 1) + beta.row(t + 1);
    const double c = exp_shifted(v, w);
    if (c == kNegInf) {
      beta.row(t).setConstant(kNegInf);
      continue;
    }
    r.noalias() = st.exp_trans * w.transpose();
    beta.row(t) = (r.array().log() + (c + st.shift)).matrix().transpose();
  }
  return beta;
}

double finish(const Eigen::MatrixXd& alpha, const Transitions& trans) {
  const int T = static_cast<int>(alpha.rows());
  const int K = static_cast<int>(alpha.cols());
  std::vector<double> terms(K);
  for (int j = 0; j < K; ++j) terms[j] = alpha(T - 1, j) + trans(j, stop_state(K));
  return log_sum_exp(terms);
}

}  // namespace

Transitions make_transitions(int num_tags) {
  Transitions trans = Transitions::Zero(num_tags + 2, num_tags + 2);
  trans.col(start_state(num_tags)).setConstant(kNegInf);
  trans.row(stop_state(num_tags)).setConstant(kNegInf);
  return trans;
}

double log_sum_exp(std::span<const double> values) {
  double peak = kNegInf;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

double path_score(const Emissions& em, const Transitions& trans, std::span<const int> tags) {
  check_shapes(em, trans);
  const int K = static_cast<int>(em.cols());
  if (static_cast<Eigen::Index>(tags.size()) != em.rows()) throw Error("tag path length must equal T");
  double score = trans(start_state(K), tags[0]);
  for (std::size_t t = 0; t < tags.size(); ++t) {
    score += em(static_cast<Eigen::Index>(t), tags[t]);
    if (t > 0) score += trans(tags[t - 1], tags[t]);
  }
  return score + trans(tags.back(), stop_state(K));
}

double log_partition(const Emissions& em, const Transitions& trans) {
  check_shapes(em, trans);
  const auto st = scale_transitions(trans, static_cast<int>(em.cols()));
  return finish(forward_scores(em, trans, st), trans);
}

ViterbiResult viterbi(const Emissions& em, const Transitions& trans) {
  check_shapes(em, trans);
  const int T = static_cast<int>(em.rows());
  const int K = static_cast<int>(em.cols());
  Eigen::MatrixXd best(T, K);
  Eigen::MatrixXi back(T, K);
  for (int j = 0; j < K; ++j) best(0, j) = trans(start_state(K), j) + em(0, j);
  for (int t = 1; t < T; ++t) {
    for (int j = 0; j < K; ++j) {
      double top = kNegInf;
      int arg = 0;
      for (int i = 0; i < K; ++i) {
        const double s = best(t - 1, i) + trans(i, j);
        if (s > top) {
          top = s;
          arg = i;
        }
      }
      best(t, j) = top + em(t, j);
      back(t, j) = arg;
    }
  }
  ViterbiResult result;
  result.score = kNegInf;
  int last = 0;
  for (int j = 0; j < K; ++j) {
    const double s = best(T - 1, j) + trans(j, stop_state(K));
    if (s > result.score) {
      result.score = s;
      last = j;
    }
  }
  result.tags.assign(T, 0);
  result.tags[T - 1] = last;
  for (int t = T - 1; t > 0; --t) result.tags[t - 1] = back(t, result.tags[t]);
  return result;
}

NllGradient nll_with_gradient(const Emissions& em, const Transitions& trans, std::span<const int> gold) {
  check_shapes(em, trans);
  const int T = static_cast<int>(em.rows());
  const int K = static_cast<int>(em.cols());
  const int start = start_state(K);
  const int stop = stop_state(K);

  const auto st = scale_transitions(trans, K);
  const Eigen::MatrixXd alpha = forward_scores(em, trans, st);
  const Eigen::MatrixXd beta = backward_scores(em, trans, st);
  const double log_z = finish(alpha, trans);

  NllGradient out;
  out.nll = log_z - path_score(em, trans, gold);
  out.d_emissions = ((alpha + beta).array() - log_z).exp().matrix();
  out.d_transitions = Transitions::Zero(K + 2, K + 2);

  for (int j = 0; j < K; ++j) {
    out.d_transitions(start, j) = out.d_emissions(0, j);
    out.d_transitions(j, stop) = out.d_emissions(T - 1, j);
  }
  // Pairwise marginals: xi_t(i, j) = a_t(i) exp_trans(i, j) b_t(j) w_t with
  // a, b rescaled rows of alpha(t-1) and em(t) + beta(t). Summed over t this
  // is exp_trans .* (A^T diag(w) B).
  if (T > 1) {
    Eigen::MatrixXd A(T - 1, K);
    Eigen::MatrixXd B(T - 1, K);
    Eigen::RowVectorXd row(K);
    for (int t = 1; t < T; ++t) {
      const double ca = exp_shifted(alpha.row(t - 1), row);
      A.row(t - 1) = row;
      const Eigen::RowVectorXd v = em.row(t) + beta.row(t);
      const double cb = exp_shifted(v, row);
      const double w = (ca == kNegInf || cb == kNegInf) ? 0.0 : std::exp(ca + cb + st.shift - log_z);
      B.row(t - 1) = row * w;
    }
    out.d_transitions.topLeftCorner(K, K) = st.exp_trans.cwiseProduct(A.transpose() * B);
  }

  out.d_transitions(start, gold[0]) -= 1.0;
  out.d_transitions(gold[T - 1], stop) -= 1.0;
  for (int t = 0; t < T; ++t) {
    out.d_emissions(t, gold[t]) -= 1.0;
    if (t > 0) out.d_transitions(gold[t - 1], gold[t]) -= 1.0;
  }
  return out;
}

}  // namespace emsaudit::crf

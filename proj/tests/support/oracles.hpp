#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "emsaudit/crf.hpp"
#include "emsaudit/preprocess.hpp"
#include "emsaudit/random.hpp"

namespace oracle {

// Every tag path of length T over K tags.
inline std::vector<std::vector<int>> all_paths(int T, int K) {
  std::vector<std::vector<int>> paths;
  std::vector<int> cur(T, 0);
  while (true) {
    paths.push_back(cur);
    int pos = T - 1;
    while (pos >= 0 && ++cur[pos] == K) cur[pos--] = 0;
    if (pos < 0) break;
  }
  return paths;
}

inline double naive_path_score(const emsaudit::crf::Emissions& em, const emsaudit::crf::Transitions& tr,
                               const std::vector<int>& path) {
  const int K = static_cast<int>(em.cols());
  double s = tr(K, path.front()) + tr(path.back(), K + 1);
  for (std::size_t t = 0; t < path.size(); ++t) s += em(static_cast<int>(t), path[t]);
  for (std::size_t t = 1; t < path.size(); ++t) s += tr(path[t - 1], path[t]);
  return s;
}

inline double brute_log_partition(const emsaudit::crf::Emissions& em, const emsaudit::crf::Transitions& tr) {
  std::vector<double> scores;
  for (const auto& p : all_paths(static_cast<int>(em.rows()), static_cast<int>(em.cols()))) {
    scores.push_back(naive_path_score(em, tr, p));
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  double sum = 0;
  for (double s : scores) sum += std::exp(s - top);
  return top + std::log(sum);
}

inline double brute_best_score(const emsaudit::crf::Emissions& em, const emsaudit::crf::Transitions& tr) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& p : all_paths(static_cast<int>(em.rows()), static_cast<int>(em.cols()))) {
    best = std::max(best, naive_path_score(em, tr, p));
  }
  return best;
}

inline void random_instance(emsaudit::Rng& rng, int T, int K, emsaudit::crf::Emissions& em,
                            emsaudit::crf::Transitions& tr, double scale = 2.0) {
  em.resize(T, K);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) em(t, k) = rng.uniform(-scale, scale);
  }
  tr = emsaudit::crf::make_transitions(K);
  for (int i = 0; i < K + 2; ++i) {
    for (int j = 0; j < K + 2; ++j) {
      if (std::isfinite(tr(i, j))) tr(i, j) = rng.uniform(-scale, scale);
    }
  }
}

// Full-matrix Levenshtein over code points.
inline std::size_t levenshtein(const std::string& a8, const std::string& b8) {
  const std::u32string a = emsaudit::decode_utf8(a8);
  const std::u32string b = emsaudit::decode_utf8(b8);
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

inline std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t count) {
  std::string out;
  for (std::size_t i = from; i < from + count; ++i) {
    if (i > from) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace oracle

#include "budtrack/assign.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace budtrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unmatched_score(const ScoreMatrix& s, std::size_t i) {
  return s.has_unmatched ? s.at(i, s.cols) : kMaskedScore;
}

}  // namespace

Assignment hungarian_assign(const ScoreMatrix& scores) {
  Assignment result;
  const std::size_t n = scores.rows;
  const std::size_t m = scores.cols;
  if (n == 0) return result;

  // Minimize cost = -score over an expanded matrix: m real columns plus
  // one dedicated unmatched column per row (kept feasible even without an
  // explicit unmatched column via the masked sentinel).
  const std::size_t M = m + n;
  auto cost = [&](std::size_t i, std::size_t j) -> double {
    if (j < m) return -scores.at(i, j);
    return (j == m + i) ? -unmatched_score(scores, i) : -2.0 * kMaskedScore;
  };

  // shortest augmenting path with potentials, 1-indexed
  std::vector<double> u(n + 1, 0.0), v(M + 1, 0.0);
  std::vector<std::size_t> match(M + 1, 0);  // column -> row
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(M + 1, kInf);
    std::vector<std::size_t> way(M + 1, 0);
    std::vector<bool> used(M + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= M; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= M; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  result.match.assign(n, kUnmatched);
  for (std::size_t j = 1; j <= M; ++j) {
    if (match[j] == 0) continue;
    const std::size_t i = match[j] - 1;
    if (j - 1 < m) result.match[i] = static_cast<int>(j - 1);
  }
  for (std::size_t i = 0; i < n; ++i)
    result.total_score += result.match[i] == kUnmatched
                              ? unmatched_score(scores, i)
                              : scores.at(i, static_cast<std::size_t>(result.match[i]));
  return result;
}

namespace {

void brute_rec(const ScoreMatrix& s, std::size_t i, std::vector<bool>& used,
               std::vector<int>& cur, double acc, Assignment& best) {
  if (i == s.rows) {
    if (acc > best.total_score) {
      best.total_score = acc;
      best.match = cur;
    }
    return;
  }
  cur[i] = kUnmatched;
  brute_rec(s, i + 1, used, cur, acc + unmatched_score(s, i), best);
  for (std::size_t j = 0; j < s.cols; ++j) {
    if (used[j]) continue;
    used[j] = true;
    cur[i] = static_cast<int>(j);
    brute_rec(s, i + 1, used, cur, acc + s.at(i, j), best);
    used[j] = false;
  }
  cur[i] = kUnmatched;
}

}  // namespace

Assignment brute_force_assign(const ScoreMatrix& scores) {
  if (scores.rows > 8)
    throw std::invalid_argument("brute_force_assign: more than 8 rows");
  Assignment best;
  if (scores.rows == 0) return best;
  best.total_score = -kInf;
  std::vector<bool> used(scores.cols, false);
  std::vector<int> cur(scores.rows, kUnmatched);
  brute_rec(scores, 0, used, cur, 0.0, best);
  return best;
}

}  // namespace budtrack

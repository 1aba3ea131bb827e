#include "aswd/exact_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aswd {

namespace {

double norm_pow(double sq_norm, int k) {
    if (k == 2) return sq_norm;
    const double d = std::sqrt(sq_norm);
    double out = d;
    for (int e = 1; e < k; ++e) out *= d;
    return out;
}

// Lexicographic compare of two equal-shape point matrices.
bool lex_less(const Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

} // namespace

CostMatrix cost_matrix(const SampleSet& x, const SampleSet& y, int k) {
    if (x.dim() != y.dim())
        throw ContractError("cost_matrix: sample dimensions differ");
    if (x.n() != y.n())
        throw ContractError("cost_matrix: sample counts differ");
    if (k < 1) throw ContractError("cost_matrix: order k must be >= 1");
    const std::size_t n = x.n(), d = x.dim();
    Tensor c({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        const double* xi = x.points.data() + i * d;
        double* row = c.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* yj = y.points.data() + j * d;
            double acc = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                const double diff = xi[t] - yj[t];
                acc += diff * diff;
            }
            row[j] = norm_pow(acc, k);
        }
    }
    return CostMatrix{std::move(c)};
}

AssignmentSolver::AssignmentSolver(std::size_t n)
    : n_(n),
      col_potential_(n, 0.0),
      dist_(n, 0.0),
      match_row_(n, -1),
      match_col_(n, -1),
      pred_row_(n, -1),
      todo_(n, 0),
      scanned_(n, 0) {}

void AssignmentSolver::reset() {
    warm_ = false;
}

// Shortest augmenting paths over reduced costs with implicit row potentials
// (a matched row's potential is pinned by tightness of its matched edge).
// Column potentials persist across solves: they shift each column by a
// constant, which leaves the optimal permutation unchanged while making the
// searches near-trivial when the cost matrix moved only slightly.
Assignment AssignmentSolver::solve(const double* cost) {
    const int n = static_cast<int>(n_);
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_ * n_; ++i)
        if (!std::isfinite(cost[i]))
            throw ContractError("solve_assignment: non-finite cost entry");

    ++stats_.solves;
    if (!warm_) std::fill(col_potential_.begin(), col_potential_.end(), 0.0);
    std::fill(match_row_.begin(), match_row_.end(), -1);
    std::fill(match_col_.begin(), match_col_.end(), -1);

    double* v = col_potential_.data();
    double* dist = dist_.data();

    // Greedy pass: assign each row to its cheapest reduced-cost column when
    // that column is still free. Rows on a tight minimal edge are a valid
    // partial solution for the augmentation phase; with carried-over
    // potentials most rows keep their previous column, so only a fraction
    // of the rows need a shortest-path search.
    for (int r = 0; r < n; ++r) {
        const double* row = cost + static_cast<std::size_t>(r) * n_;
        int jb = 0;
        double best = row[0] - v[0];
        for (int j = 1; j < n; ++j) {
            const double c = row[j] - v[j];
            if (c < best) {
                best = c;
                jb = j;
            }
        }
        if (match_col_[jb] < 0) {
            match_col_[jb] = r;
            match_row_[r] = jb;
        }
    }

    for (int r = 0; r < n; ++r) {
        if (match_row_[r] >= 0) continue;
        ++stats_.paths;
        const double* row = cost + static_cast<std::size_t>(r) * n_;
        // seed distances and find the first minimum in one pass
        int todo_count = n;
        int best_pos = 0;
        {
            double best = inf;
            for (int j = 0; j < n; ++j) {
                const double dj = row[j] - v[j];
                dist[j] = dj;
                pred_row_[j] = r;
                todo_[j] = j;
                if (dj < best) {
                    best = dj;
                    best_pos = j;
                }
            }
        }
        int scanned_count = 0;
        int sink = -1;
        for (;;) {
            ++stats_.scans;
            const int jb = todo_[best_pos];
            todo_[best_pos] = todo_[--todo_count];
            scanned_[scanned_count++] = jb;
            if (match_col_[jb] < 0) {
                sink = jb;
                break;
            }
            // relax the remaining columns through the row matched to jb and
            // track the next minimum in the same pass (ties: lowest index)
            const int i2 = match_col_[jb];
            const double* row2 = cost + static_cast<std::size_t>(i2) * n_;
            const double base = dist[jb] - (row2[jb] - v[jb]);
            double best = inf;
            int bj = n;
            best_pos = 0;
            for (int p = 0; p < todo_count; ++p) {
                const int j = todo_[p];
                const double nd = base + (row2[j] - v[j]);
                double dj = dist[j];
                if (nd < dj) {
                    dj = nd;
                    dist[j] = nd;
                    pred_row_[j] = i2;
                }
                if (dj < best || (dj == best && j < bj)) {
                    best = dj;
                    bj = j;
                    best_pos = p;
                }
            }
        }
        // dual update over scanned columns, then augment along the path
        const double dsink = dist[sink];
        for (int p = 0; p + 1 < scanned_count; ++p) {
            const int j = scanned_[p];
            v[j] += dist[j] - dsink;
        }
        int j = sink;
        for (;;) {
            const int i = pred_row_[j];
            match_col_[j] = i;
            const int jnext = match_row_[i];
            match_row_[i] = j;
            if (i == r) break;
            j = jnext;
        }
    }

    Assignment out;
    out.permutation.assign(n_, 0);
    for (int i = 0; i < n; ++i) out.permutation[static_cast<std::size_t>(i)] =
        static_cast<std::size_t>(match_row_[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) total += cost[i * n_ + out.permutation[i]];
    out.total_cost = total;
    warm_ = true;
    return out;
}

Assignment solve_assignment(const CostMatrix& c) {
    if (c.entries.rank() != 2 || c.entries.rows() != c.entries.cols())
        throw ContractError("solve_assignment: cost matrix must be square");
    AssignmentSolver solver(c.n());
    return solver.solve(c.entries.data());
}

double exact_wasserstein(const SampleSet& x, const SampleSet& y, int k) {
    const bool flip = lex_less(y.points, x.points);
    const SampleSet& a = flip ? y : x;
    const SampleSet& b = flip ? x : y;
    const CostMatrix c = cost_matrix(a, b, k);
    const Assignment as = solve_assignment(c);
    const double mean_cost = as.total_cost / static_cast<double>(a.n());
    if (k == 1) return mean_cost;
    if (k == 2) return std::sqrt(mean_cost);
    return std::pow(mean_cost, 1.0 / static_cast<double>(k));
}

WassersteinEvaluator::WassersteinEvaluator(Tensor target, int k)
    : target_(std::move(target)), k_(k), solver_(target_.rows()), cost_(target_.rows() * target_.rows()) {}

double WassersteinEvaluator::distance(const Tensor& points) {
    const std::size_t n = target_.rows(), d = target_.cols();
    if (points.rows() != n || points.cols() != d)
        throw ContractError("WassersteinEvaluator: shape mismatch");
    if (d == 2 && k_ == 2) {
        // hot path for the flow: squared 2-D distances, vectorizable
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = points[2 * i], x1 = points[2 * i + 1];
            const double* ty = target_.data();
            double* row = cost_.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double d0 = x0 - ty[2 * j];
                const double d1 = x1 - ty[2 * j + 1];
                row[j] = d0 * d0 + d1 * d1;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* xi = points.data() + i * d;
            double* row = cost_.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* yj = target_.data() + j * d;
                double acc = 0.0;
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = xi[t] - yj[t];
                    acc += diff * diff;
                }
                row[j] = norm_pow(acc, k_);
            }
        }
    }
    const Assignment as = solver_.solve(cost_.data());
    const double mean_cost = as.total_cost / static_cast<double>(n);
    if (k_ == 1) return mean_cost;
    if (k_ == 2) return std::sqrt(mean_cost);
    return std::pow(mean_cost, 1.0 / static_cast<double>(k_));
}

} // namespace aswd

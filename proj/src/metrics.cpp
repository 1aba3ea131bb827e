#include "aswd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aswd {

ProjectionSet draw_projections(Rng& rng, std::size_t L, std::size_t d) {
    if (L < 1 || d < 1)
        throw ContractError("draw_projections: L and d must be >= 1");
    Tensor dirs({L, d});
    for (std::size_t l = 0; l < L; ++l) {
        double* row = dirs.data() + l * d;
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                row[j] = rng.normal();
                norm += row[j] * row[j];
            }
            norm = std::sqrt(norm);
        } while (norm == 0.0); // redraw an (almost impossible) zero vector
        for (std::size_t j = 0; j < d; ++j) row[j] /= norm;
    }
    return ProjectionSet{std::move(dirs), rng.seed()};
}

ProjectionSet sample_unit_sphere(std::size_t L, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    ProjectionSet p = draw_projections(rng, L, d);
    p.seed = seed;
    return p;
}

DefiningFunction DefiningFunction::linear() {
    DefiningFunction f;
    f.kind = Kind::Linear;
    return f;
}

DefiningFunction DefiningFunction::polynomial(int sample_dim, int degree) {
    if (degree < 1 || degree % 2 == 0)
        throw ConfigError("polynomial defining function: degree must be odd, got " +
                          std::to_string(degree));
    DefiningFunction f;
    f.kind = Kind::Polynomial;
    f.degree = degree;
    f.table = std::make_shared<const MultiIndexTable>(enumerate_multi_indices(sample_dim, degree));
    return f;
}

DefiningFunction DefiningFunction::circular(double radius) {
    if (!(radius > 0.0))
        throw ConfigError("circular defining function: radius must be positive");
    DefiningFunction f;
    f.kind = Kind::Circular;
    f.radius = radius;
    return f;
}

std::size_t DefiningFunction::theta_dim(std::size_t sample_dim) const {
    switch (kind) {
        case Kind::Linear:
        case Kind::Circular:
            return sample_dim;
        case Kind::Polynomial:
            return table->count();
    }
    return sample_dim;
}

LinearMap LinearMap::random(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    Tensor w({out_dim, in_dim});
    for (double& x : w.vec()) x = rng.uniform(-bound, bound);
    return LinearMap{std::move(w), Tensor({out_dim})};
}

std::vector<std::uint32_t> row_sort_permutations(const Tensor& values) {
    const std::size_t m = values.rows(), c = values.cols();
    std::vector<std::uint32_t> idx(m * c);
    struct Key {
        double v;
        std::uint32_t i;
    };
    std::vector<Key> keys(c);
    for (std::size_t i = 0; i < m; ++i) {
        const double* v = values.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) keys[j] = Key{v[j], static_cast<std::uint32_t>(j)};
        // ties broken by input index, so equal values keep a fixed order
        std::sort(keys.begin(), keys.end(),
                  [](const Key& a, const Key& b) { return a.v < b.v || (a.v == b.v && a.i < b.i); });
        std::uint32_t* row = idx.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) row[j] = keys[j].i;
    }
    return idx;
}

Var sliced_pow_mean_node(Tape& t, Var px, Var py, int k) {
    if (k < 1) throw ContractError("sliced distance: order k must be >= 1");
    if (!t.value(px).same_shape(t.value(py)))
        throw ContractError("sliced distance: projection shapes differ: " +
                            t.value(px).shape_string() + " vs " + t.value(py).shape_string());
    Var sx = t.gather_rows_unchecked(px, row_sort_permutations(t.value(px)));
    Var sy = t.gather_rows_unchecked(py, row_sort_permutations(t.value(py)));
    Var d = t.abs(t.sub(sx, sy));
    if (k != 1) d = t.pow_scalar(d, static_cast<double>(k));
    return t.mean(d);
}

Var sliced_distance_node(Tape& t, Var px, Var py, int k) {
    Var m = sliced_pow_mean_node(t, px, py, k);
    return k == 1 ? m : t.pow_scalar(m, 1.0 / static_cast<double>(k));
}

Var wasserstein_1d_node(Tape& t, Var u, Var v, int k) {
    const Tensor &uv = t.value(u), &vv = t.value(v);
    if (uv.rank() != 1 || vv.rank() != 1)
        throw ContractError("wasserstein_1d: expected rank-1 samples");
    if (uv.size() != vv.size())
        throw ContractError("wasserstein_1d: sample counts differ (" +
                            std::to_string(uv.size()) + " vs " + std::to_string(vv.size()) + ")");
    Var ru = t.reshape(u, {1, uv.size()});
    Var rv = t.reshape(v, {1, vv.size()});
    return sliced_distance_node(t, ru, rv, k);
}

Var project_node(Tape& t, Var points, const ProjectionSet& proj) {
    if (t.value(points).cols() != proj.dim())
        throw ContractError("project: sample dim " + t.value(points).shape_string() +
                            " != direction dim " + std::to_string(proj.dim()));
    Var theta = t.constant(proj.directions);
    return t.matmul_nt(theta, points); // [L, N]
}

Var swd_node(Tape& t, Var x, Var y, const ProjectionSet& proj, int k) {
    Var px = project_node(t, x, proj);
    Var py = project_node(t, y, proj);
    return sliced_distance_node(t, px, py, k);
}

Var gswd_node(Tape& t, Var x, Var y, const DefiningFunction& fn, const ProjectionSet& proj, int k) {
    const std::size_t d = t.value(x).cols();
    if (proj.dim() != fn.theta_dim(d))
        throw ContractError("gswd: direction dim " + std::to_string(proj.dim()) +
                            " != defining-function dim " + std::to_string(fn.theta_dim(d)));
    switch (fn.kind) {
        case DefiningFunction::Kind::Linear:
            return swd_node(t, x, y, proj, k);
        case DefiningFunction::Kind::Polynomial: {
            Var fx = t.monomial_features(x, fn.table);
            Var fy = t.monomial_features(y, fn.table);
            Var px = project_node(t, fx, proj);
            Var py = project_node(t, fy, proj);
            return sliced_distance_node(t, px, py, k);
        }
        case DefiningFunction::Kind::Circular: {
            Var theta = t.constant(proj.directions);
            Var px = t.circular_distances(x, theta, fn.radius);
            Var py = t.circular_distances(y, theta, fn.radius);
            return sliced_distance_node(t, px, py, k);
        }
    }
    throw ContractError("gswd: unknown defining function");
}

Var gswd_nn_node(Tape& t, Var x, Var y, const LinearMap& net, int k) {
    if (t.value(x).cols() != net.in_dim())
        throw ContractError("gswd_nn: sample dim != net input dim");
    Var w = t.constant(net.weights);
    Var b = t.constant(net.bias);
    Var px = t.add_colvec(t.matmul_nt(w, x), b); // [L, N]
    Var py = t.add_colvec(t.matmul_nt(w, y), b);
    return sliced_distance_node(t, px, py, k);
}

namespace {

void require_pair(const SampleSet& x, const SampleSet& y) {
    if (x.dim() != y.dim())
        throw ContractError("sample sets have different dimensions");
    if (x.n() != y.n())
        throw ContractError("sample sets have different counts (equal-weight case only)");
}

} // namespace

double wasserstein_1d(const std::vector<double>& u, const std::vector<double>& v, int k) {
    if (u.size() != v.size())
        throw ContractError("wasserstein_1d: sample counts differ");
    if (u.empty()) throw ContractError("wasserstein_1d: empty samples");
    Tape t;
    Var uu = t.constant(Tensor({u.size()}, std::vector<double>(u)));
    Var vv = t.constant(Tensor({v.size()}, std::vector<double>(v)));
    return t.value(wasserstein_1d_node(t, uu, vv, k))[0];
}

double swd(const SampleSet& x, const SampleSet& y, const ProjectionSet& proj, int k) {
    require_pair(x, y);
    Tape t;
    Var xv = t.constant(x.points);
    Var yv = t.constant(y.points);
    return t.value(swd_node(t, xv, yv, proj, k))[0];
}

double gswd(const SampleSet& x, const SampleSet& y, const DefiningFunction& fn,
            const ProjectionSet& proj, int k) {
    require_pair(x, y);
    Tape t;
    Var xv = t.constant(x.points);
    Var yv = t.constant(y.points);
    return t.value(gswd_node(t, xv, yv, fn, proj, k))[0];
}

double gswd_nn(const SampleSet& x, const SampleSet& y, const LinearMap& net, int k) {
    require_pair(x, y);
    Tape t;
    Var xv = t.constant(x.points);
    Var yv = t.constant(y.points);
    return t.value(gswd_nn_node(t, xv, yv, net, k))[0];
}

std::pair<double, Tensor> max_swd_direction(const SampleSet& x, const SampleSet& y, int k,
                                            int steps, double lr, Rng& rng) {
    require_pair(x, y);
    const std::size_t d = x.dim();
    ProjectionSet start = draw_projections(rng, 1, d);
    Tensor theta({d, 1});
    for (std::size_t j = 0; j < d; ++j) theta(j, 0) = start.directions[j];

    double best = -1.0;
    Tensor best_theta = theta;
    Tape t;
    for (int s = 0; s <= steps; ++s) {
        t.clear();
        Var th = t.leaf(theta);
        Var px = t.reshape(t.matmul(t.constant(x.points), th), {1, x.n()});
        Var py = t.reshape(t.matmul(t.constant(y.points), th), {1, y.n()});
        Var dist = sliced_distance_node(t, px, py, k);
        const double val = t.value(dist)[0];
        if (val > best) {
            best = val;
            best_theta = theta;
        }
        if (s == steps) break;
        t.backward(dist);
        const Tensor& g = t.grad(th);
        double norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            theta(j, 0) += lr * g[j];
            norm += theta(j, 0) * theta(j, 0);
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) break; // degenerate; keep current best
        for (std::size_t j = 0; j < d; ++j) theta(j, 0) /= norm;
    }
    return {best, best_theta};
}

double max_swd(const SampleSet& x, const SampleSet& y, int k, int steps, double lr,
               std::uint64_t seed) {
    Rng rng(seed);
    return max_swd_direction(x, y, k, steps, lr, rng).first;
}

std::vector<double> per_direction_distances(const SampleSet& x, const SampleSet& y,
                                            const Projector& projector,
                                            const ProjectionSet& proj, int k) {
    require_pair(x, y);
    const Tensor gx = projector(x); // N x d_theta
    const Tensor gy = projector(y);
    if (gx.cols() != proj.dim() || gy.cols() != proj.dim())
        throw ContractError("per_direction_distances: projector output dim != direction dim");
    const std::size_t L = proj.count(), N = x.n(), dt = proj.dim();

    std::vector<double> out(L);
    std::vector<double> pu(N), pv(N);
    for (std::size_t l = 0; l < L; ++l) {
        const double* th = proj.directions.data() + l * dt;
        for (std::size_t i = 0; i < N; ++i) {
            const double* a = gx.data() + i * dt;
            const double* b = gy.data() + i * dt;
            double accu = 0.0, accv = 0.0;
            for (std::size_t j = 0; j < dt; ++j) {
                accu += a[j] * th[j];
                accv += b[j] * th[j];
            }
            pu[i] = accu;
            pv[i] = accv;
        }
        std::sort(pu.begin(), pu.end());
        std::sort(pv.begin(), pv.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double diff = std::fabs(pu[i] - pv[i]);
            double p = diff;
            for (int e = 1; e < k; ++e) p *= diff;
            acc += p;
        }
        acc /= static_cast<double>(N);
        out[l] = k == 1 ? acc : std::pow(acc, 1.0 / static_cast<double>(k));
    }
    return out;
}

Histogram histogram_of(const std::vector<double>& values, std::size_t bins) {
    if (bins < 1) throw ContractError("histogram: bins must be >= 1");
    if (values.empty()) throw ContractError("histogram: no values");
    Histogram h;
    double hi = *std::max_element(values.begin(), values.end());
    const double lo = 0.0;
    if (hi <= lo) hi = lo + 1.0; // degenerate case: everything lands in bin 0
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b)
        h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    h.counts.assign(bins, 0);
    double sum = 0.0;
    for (double v : values) {
        sum += v;
        std::size_t b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        h.counts[b] += 1;
    }
    h.mean = sum / static_cast<double>(values.size());
    h.mode_bin = static_cast<std::size_t>(
        std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    return h;
}

Histogram projection_histogram(const SampleSet& x, const SampleSet& y,
                               const Projector& projector, const ProjectionSet& proj,
                               int k, std::size_t bins) {
    return histogram_of(per_direction_distances(x, y, projector, proj, k), bins);
}

} // namespace aswd

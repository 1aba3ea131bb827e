#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "aswd/rng.hpp"
#include "aswd/tape.hpp"
#include "aswd/tensor.hpp"

namespace aswd {

// N x d matrix of sample points; the empirical support of a measure with
// uniform weights.
struct SampleSet {
    Tensor points;

    explicit SampleSet(Tensor p) : points(std::move(p)) {
        if (points.rank() != 2 || points.rows() < 1)
            throw ContractError("SampleSet: expected a nonempty N x d matrix");
        points.require_finite("SampleSet");
    }

    std::size_t n() const { return points.rows(); }
    std::size_t dim() const { return points.cols(); }
};

// L unit vectors drawn once from a seeded generator.
struct ProjectionSet {
    Tensor directions; // L x d_theta, unit rows
    std::uint64_t seed = 0;

    std::size_t count() const { return directions.rows(); }
    std::size_t dim() const { return directions.cols(); }
};

// Rows i.i.d. uniform on the unit sphere (Gaussian draw, normalized);
// bit-identical for identical (L, d, seed).
ProjectionSet sample_unit_sphere(std::size_t L, std::size_t d, std::uint64_t seed);

// Same draw, but consuming an existing stream (per-iteration redraws).
ProjectionSet draw_projections(Rng& rng, std::size_t L, std::size_t d);

// The map replacing the inner product in a generalized sliced distance.
struct DefiningFunction {
    enum class Kind { Linear, Polynomial, Circular };

    Kind kind = Kind::Linear;
    int degree = 3;                              // polynomial only; odd
    double radius = 1.0;                         // circular only; > 0
    std::shared_ptr<const MultiIndexTable> table; // polynomial only

    static DefiningFunction linear();
    static DefiningFunction polynomial(int sample_dim, int degree);
    static DefiningFunction circular(double radius);

    // Dimension of the direction vectors theta for samples in R^d.
    std::size_t theta_dim(std::size_t sample_dim) const;
};

// One-layer map R^d -> R^L whose outputs are used directly as projections.
struct LinearMap {
    Tensor weights; // L x d; row l holds the weights of output l
    Tensor bias;    // L

    std::size_t out_dim() const { return weights.rows(); }
    std::size_t in_dim() const { return weights.cols(); }

    static LinearMap random(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);
};

// --- tape-level cores (differentiable paths) ---------------------------

// Ascending sort permutations, one per row, ties broken by input index.
std::vector<std::uint32_t> row_sort_permutations(const Tensor& values);

// mean over all entries of |sorted(px) - sorted(py)|^k, rows sorted
// independently: equals (1/L) sum_l W_k^k of the row pair.
Var sliced_pow_mean_node(Tape& t, Var px, Var py, int k);

// k-th root of the above: the sliced distance given projections.
Var sliced_distance_node(Tape& t, Var px, Var py, int k);

// W_k of two 1-D sample vectors, differentiable through the frozen sort.
Var wasserstein_1d_node(Tape& t, Var u, Var v, int k);

// Projections of a point matrix (node) onto a fixed direction set,
// direction-major: out[l, n] = <points[n,:], theta[l,:]>.
Var project_node(Tape& t, Var points, const ProjectionSet& proj);

Var swd_node(Tape& t, Var x, Var y, const ProjectionSet& proj, int k);
Var gswd_node(Tape& t, Var x, Var y, const DefiningFunction& fn, const ProjectionSet& proj, int k);
Var gswd_nn_node(Tape& t, Var x, Var y, const LinearMap& net, int k);

// --- value-level operations ---------------------------------------------

// Empirical k-Wasserstein distance between two equal-length scalar samples:
// ((1/N) sum |u_(n) - v_(n)|^k)^(1/k) over ascending-sorted values.
double wasserstein_1d(const std::vector<double>& u, const std::vector<double>& v, int k);

double swd(const SampleSet& x, const SampleSet& y, const ProjectionSet& proj, int k);

double gswd(const SampleSet& x, const SampleSet& y, const DefiningFunction& fn,
            const ProjectionSet& proj, int k);

// Treats the net outputs as the projections; a pseudo-metric.
double gswd_nn(const SampleSet& x, const SampleSet& y, const LinearMap& net, int k);

// Projected gradient ascent over a single unit direction; returns the best
// 1-D distance found within the step budget.
double max_swd(const SampleSet& x, const SampleSet& y, int k, int steps, double lr,
               std::uint64_t seed);

// Same ascent, also reporting the best direction (used by the flow).
std::pair<double, Tensor> max_swd_direction(const SampleSet& x, const SampleSet& y, int k,
                                            int steps, double lr, Rng& rng);

// Maps samples to the space the directions live in (rows of the result).
using Projector = std::function<Tensor(const SampleSet&)>;

// Per-direction 1-D distances W_k(beta(X, theta_l), beta(Y, theta_l)).
std::vector<double> per_direction_distances(const SampleSet& x, const SampleSet& y,
                                            const Projector& projector,
                                            const ProjectionSet& proj, int k);

struct Histogram {
    std::vector<double> edges;       // bins+1 ascending edges
    std::vector<std::size_t> counts; // bins
    double mean = 0.0;               // mean of the raw values
    std::size_t mode_bin = 0;
};

Histogram histogram_of(const std::vector<double>& values, std::size_t bins);

Histogram projection_histogram(const SampleSet& x, const SampleSet& y,
                               const Projector& projector, const ProjectionSet& proj,
                               int k, std::size_t bins);

} // namespace aswd

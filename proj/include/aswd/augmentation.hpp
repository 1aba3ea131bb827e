#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aswd/metrics.hpp"
#include "aswd/optim.hpp"
#include "aswd/tape.hpp"

namespace aswd {

// One-layer augmentation network phi(x) = relu(x W + b) together with the
// mode deciding how samples are mapped before slicing:
//   injective-concat: g(x) = [x, phi(x)]   (output dim 2d, always injective)
//   raw:              g(x) = phi(x)        (output dim d, not injective)
//   identity:         g(x) = x             (degenerate case; plain slicing)
struct AugmentationNetwork {
    enum class Mode { InjectiveConcat, Raw, Identity };

    Tensor weights; // d x d
    Tensor bias;    // d
    Mode mode = Mode::InjectiveConcat;
    double lambda = 0.1; // regularization coefficient, >= 0

    std::size_t input_dim() const { return weights.rows(); }
    std::size_t output_dim() const {
        switch (mode) {
            case Mode::InjectiveConcat: return 2 * input_dim();
            case Mode::Raw:
            case Mode::Identity: return input_dim();
        }
        return input_dim();
    }

    // Weights i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)], biases zero.
    static AugmentationNetwork random(std::size_t d, Mode mode, double lambda,
                                      std::uint64_t seed);
};

const char* mode_name(AugmentationNetwork::Mode mode);
AugmentationNetwork::Mode mode_from_name(const std::string& name);

// --- tape-level builders -------------------------------------------------

struct AugNetVars {
    Var weights;
    Var bias;
    AugmentationNetwork::Mode mode;
};

// Net parameters as tape constants (frozen) or leaves (trainable).
AugNetVars net_constants(Tape& t, const AugmentationNetwork& net);
AugNetVars net_leaves(Tape& t, const AugmentationNetwork& net);

Var phi_node(Tape& t, const AugNetVars& net, Var x);     // relu(x W + b)
Var augment_node(Tape& t, const AugNetVars& net, Var x); // g(x) per mode

// lambda * (mean_n ||g(x_n)||_2 + mean_n ||g(y_n)||_2)
Var regularizer_node(Tape& t, Var gx, Var gy, double lambda);

// Regularized objective: sliced distance of augmented samples minus the
// regularizer, for a fixed direction set.
Var aswd_objective_node(Tape& t, const AugNetVars& net, Var x, Var y,
                        const ProjectionSet& proj, int k, double lambda);

// --- value-level operations ----------------------------------------------

Tensor phi_forward(const AugmentationNetwork& net, const SampleSet& x);       // N x d
Tensor injective_forward(const AugmentationNetwork& net, const SampleSet& x); // N x d_theta

// out[n, l] = <g(x_n), theta_l>; with the identity mode this is the plain
// inner-product projection.
Tensor spatial_radon_project(const AugmentationNetwork& net, const SampleSet& x,
                             const ProjectionSet& proj);

double regularizer(const AugmentationNetwork& net, const SampleSet& x, const SampleSet& y);

// Sliced distance of the augmented samples for a fixed net and direction set.
double aswd_fixed(const AugmentationNetwork& net, const SampleSet& x, const SampleSet& y,
                  const ProjectionSet& proj, int k);

// Trains a network in place with persistent Adam state (used by the flow,
// where the net survives across outer iterations).
class AugmentationTrainer {
public:
    AugmentationTrainer(AugmentationNetwork net, double lr);

    // One gradient-ascent step on the regularized objective with the given
    // directions; returns the objective value before the update.
    double ascend(const Tensor& x, const Tensor& y, const ProjectionSet& proj, int k);

    const AugmentationNetwork& net() const { return net_; }
    AugmentationNetwork& net() { return net_; }

private:
    AugmentationNetwork net_;
    Parameter w_param_;
    Parameter b_param_;
    AdamState w_state_;
    AdamState b_state_;
};

struct OptimizationReport {
    std::vector<double> objective; // one value per iteration (length M)
    double final_regularizer = 0.0;
    std::uint64_t seed = 0;
};

// M gradient-ascent (Adam) updates of the network parameters, redrawing the
// direction set each iteration from the seeded stream. Identity-mode nets
// have no effect on the distance; they are returned unchanged with an empty
// trace.
OptimizationReport optimize_network(AugmentationNetwork& net, const SampleSet& x,
                                    const SampleSet& y, std::size_t projections,
                                    std::uint64_t seed, int k, std::size_t iterations,
                                    double lr);

struct AswdConfig {
    std::size_t projections = 10;
    int k = 2;
    double lambda = 0.1;
    std::size_t iterations = 10; // M
    double lr = 0.002;
    std::uint64_t seed = 0;
    AugmentationNetwork::Mode mode = AugmentationNetwork::Mode::InjectiveConcat;
};

// Full distance: train on the pair, then evaluate on a fresh direction draw.
std::pair<double, AugmentationNetwork> aswd_distance(const SampleSet& x, const SampleSet& y,
                                                     const AswdConfig& config);

// Flat text record (shape header + row-major values) for resumption.
void save_network(const AugmentationNetwork& net, std::ostream& out);
void save_network(const AugmentationNetwork& net, const std::string& path);
AugmentationNetwork load_network(std::istream& in);
AugmentationNetwork load_network_file(const std::string& path);

} // namespace aswd

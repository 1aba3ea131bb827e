#include "aswd/augmentation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "aswd/errors.hpp"
#include "aswd/rng.hpp"

namespace aswd {

AugmentationNetwork AugmentationNetwork::random(std::size_t d, Mode mode, double lambda,
                                                std::uint64_t seed) {
    if (d < 1) throw ContractError("AugmentationNetwork: dimension must be >= 1");
    if (lambda < 0.0) throw ContractError("AugmentationNetwork: lambda must be >= 0");
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    AugmentationNetwork net;
    net.weights = Tensor({d, d});
    for (double& w : net.weights.vec()) w = rng.uniform(-bound, bound);
    net.bias = Tensor({d});
    net.mode = mode;
    net.lambda = lambda;
    return net;
}

const char* mode_name(AugmentationNetwork::Mode mode) {
    switch (mode) {
        case AugmentationNetwork::Mode::InjectiveConcat: return "injective-concat";
        case AugmentationNetwork::Mode::Raw: return "raw";
        case AugmentationNetwork::Mode::Identity: return "identity";
    }
    return "?";
}

AugmentationNetwork::Mode mode_from_name(const std::string& name) {
    if (name == "injective-concat") return AugmentationNetwork::Mode::InjectiveConcat;
    if (name == "raw") return AugmentationNetwork::Mode::Raw;
    if (name == "identity") return AugmentationNetwork::Mode::Identity;
    throw ConfigError("unknown augmentation mode '" + name + "'");
}

AugNetVars net_constants(Tape& t, const AugmentationNetwork& net) {
    return AugNetVars{t.constant(net.weights), t.constant(net.bias), net.mode};
}

AugNetVars net_leaves(Tape& t, const AugmentationNetwork& net) {
    return AugNetVars{t.leaf(net.weights), t.leaf(net.bias), net.mode};
}

Var phi_node(Tape& t, const AugNetVars& net, Var x) {
    return t.relu(t.add_rowvec(t.matmul(x, net.weights), net.bias));
}

Var augment_node(Tape& t, const AugNetVars& net, Var x) {
    switch (net.mode) {
        case AugmentationNetwork::Mode::Identity:
            return x;
        case AugmentationNetwork::Mode::Raw:
            return phi_node(t, net, x);
        case AugmentationNetwork::Mode::InjectiveConcat:
            return t.concat_cols(x, phi_node(t, net, x));
    }
    throw ContractError("augment: unknown mode");
}

Var regularizer_node(Tape& t, Var gx, Var gy, double lambda) {
    Var norms = t.add(t.mean(t.row_l2norm(gx)), t.mean(t.row_l2norm(gy)));
    return t.scale(norms, lambda);
}

Var aswd_objective_node(Tape& t, const AugNetVars& net, Var x, Var y,
                        const ProjectionSet& proj, int k, double lambda) {
    Var gx = augment_node(t, net, x);
    Var gy = augment_node(t, net, y);
    Var dist = sliced_distance_node(t, project_node(t, gx, proj), project_node(t, gy, proj), k);
    return t.sub(dist, regularizer_node(t, gx, gy, lambda));
}

Tensor phi_forward(const AugmentationNetwork& net, const SampleSet& x) {
    if (x.dim() != net.input_dim())
        throw ContractError("phi_forward: sample dim != net dim");
    Tape t;
    AugNetVars vars = net_constants(t, net);
    return t.value(phi_node(t, vars, t.constant(x.points)));
}

Tensor injective_forward(const AugmentationNetwork& net, const SampleSet& x) {
    if (x.dim() != net.input_dim())
        throw ContractError("injective_forward: sample dim != net dim");
    Tape t;
    AugNetVars vars = net_constants(t, net);
    return t.value(augment_node(t, vars, t.constant(x.points)));
}

Tensor spatial_radon_project(const AugmentationNetwork& net, const SampleSet& x,
                             const ProjectionSet& proj) {
    if (proj.dim() != net.output_dim())
        throw ContractError("spatial_radon_project: direction dim " + std::to_string(proj.dim()) +
                            " != augmented dim " + std::to_string(net.output_dim()));
    Tape t;
    AugNetVars vars = net_constants(t, net);
    Var g = augment_node(t, vars, t.constant(x.points));
    return t.value(t.matmul_nt(g, t.constant(proj.directions))); // N x L
}

double regularizer(const AugmentationNetwork& net, const SampleSet& x, const SampleSet& y) {
    Tape t;
    AugNetVars vars = net_constants(t, net);
    Var gx = augment_node(t, vars, t.constant(x.points));
    Var gy = augment_node(t, vars, t.constant(y.points));
    return t.value(regularizer_node(t, gx, gy, net.lambda))[0];
}

double aswd_fixed(const AugmentationNetwork& net, const SampleSet& x, const SampleSet& y,
                  const ProjectionSet& proj, int k) {
    if (x.dim() != y.dim() || x.n() != y.n())
        throw ContractError("aswd_fixed: sample sets do not match");
    Tape t;
    AugNetVars vars = net_constants(t, net);
    Var gx = augment_node(t, vars, t.constant(x.points));
    Var gy = augment_node(t, vars, t.constant(y.points));
    return t.value(
        sliced_distance_node(t, project_node(t, gx, proj), project_node(t, gy, proj), k))[0];
}

AugmentationTrainer::AugmentationTrainer(AugmentationNetwork net, double lr)
    : net_(std::move(net)),
      w_param_(net_.weights),
      b_param_(net_.bias),
      w_state_(net_.weights.shape(), lr),
      b_state_(net_.bias.shape(), lr) {}

double AugmentationTrainer::ascend(const Tensor& x, const Tensor& y, const ProjectionSet& proj,
                                   int k) {
    if (net_.mode == AugmentationNetwork::Mode::Identity)
        throw ContractError("AugmentationTrainer: identity mode has no trainable parameters");
    Tape t;
    AugNetVars vars{t.leaf(w_param_.value), t.leaf(b_param_.value), net_.mode};
    Var x_in = t.constant(x);
    Var y_in = t.constant(y);
    Var obj = aswd_objective_node(t, vars, x_in, y_in, proj, k, net_.lambda);
    const double value = t.value(obj)[0];
    t.backward(obj);
    // Ascent: step against the negated gradient.
    const Tensor& gw = t.grad(vars.weights);
    const Tensor& gb = t.grad(vars.bias);
    for (std::size_t i = 0; i < gw.size(); ++i) w_param_.grad[i] = -gw[i];
    for (std::size_t i = 0; i < gb.size(); ++i) b_param_.grad[i] = -gb[i];
    adam_step(w_param_, w_state_);
    adam_step(b_param_, b_state_);
    net_.weights = w_param_.value;
    net_.bias = b_param_.value;
    return value;
}

OptimizationReport optimize_network(AugmentationNetwork& net, const SampleSet& x,
                                    const SampleSet& y, std::size_t projections,
                                    std::uint64_t seed, int k, std::size_t iterations,
                                    double lr) {
    if (x.dim() != y.dim() || x.n() != y.n())
        throw ContractError("optimize_network: sample sets do not match");
    if (!(lr > 0.0)) throw ContractError("optimize_network: learning rate must be positive");
    OptimizationReport report;
    report.seed = seed;
    if (net.mode == AugmentationNetwork::Mode::Identity || iterations == 0) {
        report.final_regularizer = regularizer(net, x, y);
        return report;
    }
    Rng stream(seed);
    AugmentationTrainer trainer(net, lr);
    for (std::size_t m = 0; m < iterations; ++m) {
        ProjectionSet proj = draw_projections(stream, projections, net.output_dim());
        double value;
        try {
            value = trainer.ascend(x.points, y.points, proj, k);
        } catch (const NumericError& e) {
            throw NumericError("optimize_network: iteration " + std::to_string(m + 1) + ": " +
                               e.what());
        }
        report.objective.push_back(value);
    }
    net = trainer.net();
    report.final_regularizer = regularizer(net, x, y);
    return report;
}

namespace {

// Canonical argument order keeps trained-distance evaluation bitwise
// symmetric in (x, y).
bool lex_less_points(const Tensor& a, const Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

} // namespace

std::pair<double, AugmentationNetwork> aswd_distance(const SampleSet& x, const SampleSet& y,
                                                     const AswdConfig& config) {
    if (x.dim() != y.dim() || x.n() != y.n())
        throw ContractError("aswd: sample sets do not match");
    const bool flip = lex_less_points(y.points, x.points);
    const SampleSet& a = flip ? y : x;
    const SampleSet& b = flip ? x : y;

    AugmentationNetwork net = AugmentationNetwork::random(a.dim(), config.mode, config.lambda,
                                                          mix_seed(config.seed, 101));
    Rng stream(mix_seed(config.seed, 102));
    if (net.mode != AugmentationNetwork::Mode::Identity && config.iterations > 0) {
        AugmentationTrainer trainer(net, config.lr);
        for (std::size_t m = 0; m < config.iterations; ++m) {
            ProjectionSet proj = draw_projections(stream, config.projections, net.output_dim());
            trainer.ascend(a.points, b.points, proj, config.k);
        }
        net = trainer.net();
    }
    ProjectionSet eval = draw_projections(stream, config.projections, net.output_dim());
    return {aswd_fixed(net, a, b, eval, config.k), std::move(net)};
}

void save_network(const AugmentationNetwork& net, std::ostream& out) {
    const std::size_t d = net.input_dim();
    out << "augnet 1\n";
    out << "mode " << mode_name(net.mode) << "\n";
    out << "dim " << d << "\n";
    out << std::setprecision(17);
    out << "lambda " << net.lambda << "\n";
    out << "weights";
    for (double w : net.weights.vec()) out << " " << w;
    out << "\nbias";
    for (double b : net.bias.vec()) out << " " << b;
    out << "\n";
}

void save_network(const AugmentationNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    save_network(net, out);
}

AugmentationNetwork load_network(std::istream& in) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "augnet" || version != 1)
        throw InputError("network record: bad header");
    std::string key, mode;
    std::size_t d = 0;
    double lambda = 0.0;
    in >> key >> mode;
    if (key != "mode") throw InputError("network record: expected 'mode'");
    in >> key >> d;
    if (key != "dim" || d < 1) throw InputError("network record: bad 'dim'");
    in >> key >> lambda;
    if (key != "lambda") throw InputError("network record: expected 'lambda'");
    AugmentationNetwork net;
    net.mode = mode_from_name(mode);
    net.lambda = lambda;
    net.weights = Tensor({d, d});
    net.bias = Tensor({d});
    in >> key;
    if (key != "weights") throw InputError("network record: expected 'weights'");
    for (double& w : net.weights.vec()) in >> w;
    in >> key;
    if (key != "bias") throw InputError("network record: expected 'bias'");
    for (double& b : net.bias.vec()) in >> b;
    if (!in) throw InputError("network record: truncated");
    net.weights.require_finite("load_network");
    net.bias.require_finite("load_network");
    return net;
}

AugmentationNetwork load_network_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return load_network(in);
}

} // namespace aswd

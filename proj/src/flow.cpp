#include "aswd/flow.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <thread>

#include "aswd/augmentation.hpp"
#include "aswd/exact_ot.hpp"
#include "aswd/optim.hpp"
#include "aswd/rng.hpp"

namespace aswd {

namespace {

constexpr double kPi = std::numbers::pi;

} // namespace

const std::vector<std::string>& known_targets() {
    static const std::vector<std::string> names = {
        "eight-gaussian", "twentyfive-gaussian", "swiss-roll", "moon", "knot"};
    return names;
}

double default_target_noise(const std::string& name) {
    if (name == "eight-gaussian" || name == "twentyfive-gaussian") return 0.2;
    if (name == "swiss-roll" || name == "moon") return 0.1;
    if (name == "knot") return 0.05;
    throw ConfigError("unknown target '" + name + "'");
}

double TargetSpec::noise_or_default() const {
    return noise >= 0.0 ? noise : default_target_noise(name);
}

SampleSet sample_target(const TargetSpec& spec, std::size_t n) {
    if (n < 1) throw ContractError("sample_target: n must be >= 1");
    const double noise = spec.noise_or_default();
    Rng rng(spec.seed);
    Tensor pts({n, 2});

    if (spec.name == "eight-gaussian") {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t c = rng.integer(8);
            const double angle = 2.0 * kPi * static_cast<double>(c) / 8.0;
            pts(i, 0) = 4.0 * std::cos(angle) + noise * rng.normal();
            pts(i, 1) = 4.0 * std::sin(angle) + noise * rng.normal();
        }
    } else if (spec.name == "twentyfive-gaussian") {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t c = rng.integer(25);
            const double mx = -4.0 + 2.0 * static_cast<double>(c % 5);
            const double my = -4.0 + 2.0 * static_cast<double>(c / 5);
            pts(i, 0) = mx + noise * rng.normal();
            pts(i, 1) = my + noise * rng.normal();
        }
    } else if (spec.name == "swiss-roll") {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = rng.uniform(1.5 * kPi, 4.5 * kPi);
            pts(i, 0) = 0.5 * t * std::cos(t) + noise * rng.normal();
            pts(i, 1) = 0.5 * t * std::sin(t) + noise * rng.normal();
        }
    } else if (spec.name == "moon") {
        for (std::size_t i = 0; i < n; ++i) {
            const double a = rng.uniform(0.0, kPi);
            double x, y;
            if (rng.integer(2) == 0) {
                x = 2.0 * std::cos(a);
                y = 2.0 * std::sin(a);
            } else {
                x = 2.0 - 2.0 * std::cos(a);
                y = 1.0 - 2.0 * std::sin(a);
            }
            pts(i, 0) = x + noise * rng.normal();
            pts(i, 1) = y + noise * rng.normal();
        }
    } else if (spec.name == "knot") {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = rng.uniform(0.0, 2.0 * kPi);
            pts(i, 0) = (std::sin(t) + 2.0 * std::sin(2.0 * t)) / 1.5 + noise * rng.normal();
            pts(i, 1) = (std::cos(t) - 2.0 * std::cos(2.0 * t)) / 1.5 + noise * rng.normal();
        }
    } else {
        throw ConfigError("unknown target '" + spec.name + "'");
    }
    return SampleSet(std::move(pts));
}

const std::vector<std::string>& known_flow_metrics() {
    static const std::vector<std::string> names = {
        "swd",  "gswd-poly3", "gswd-circular", "gswd-nn", "max-swd", "aswd",
        "aswd-vanilla", "aswd-non-injective", "aswd-vanilla-non-injective", "aswd-identity"};
    return names;
}

namespace {

// Per-metric state and per-iteration differentiable loss construction.
class MetricDriver {
public:
    virtual ~MetricDriver() = default;
    virtual Var loss(Tape& t, Var particles, Var target) = 0;
};

class SwdDriver : public MetricDriver {
public:
    SwdDriver(const FlowConfig& c, Rng stream) : cfg_(c), stream_(stream) {}

    Var loss(Tape& t, Var particles, Var target) override {
        ProjectionSet proj =
            draw_projections(stream_, cfg_.projections, t.value(particles).cols());
        return swd_node(t, particles, target, proj, cfg_.k);
    }

private:
    FlowConfig cfg_;
    Rng stream_;
};

class GswdDriver : public MetricDriver {
public:
    GswdDriver(const FlowConfig& c, DefiningFunction fn, Rng stream)
        : cfg_(c), fn_(std::move(fn)), stream_(stream) {}

    Var loss(Tape& t, Var particles, Var target) override {
        const std::size_t d = t.value(particles).cols();
        ProjectionSet proj = draw_projections(stream_, cfg_.projections, fn_.theta_dim(d));
        return gswd_node(t, particles, target, fn_, proj, cfg_.k);
    }

private:
    FlowConfig cfg_;
    DefiningFunction fn_;
    Rng stream_;
};

class GswdNnDriver : public MetricDriver {
public:
    GswdNnDriver(const FlowConfig& c, std::size_t dim, Rng stream)
        : cfg_(c), net_(LinearMap::random(dim, c.projections, stream.substream(1).seed())) {}

    Var loss(Tape& t, Var particles, Var target) override {
        return gswd_nn_node(t, particles, target, net_, cfg_.k);
    }

private:
    FlowConfig cfg_;
    LinearMap net_;
};

class MaxSwdDriver : public MetricDriver {
public:
    MaxSwdDriver(const FlowConfig& c, Rng stream) : cfg_(c), stream_(stream) {}

    Var loss(Tape& t, Var particles, Var target) override {
        SampleSet x(t.value(particles));
        SampleSet y(t.value(target));
        auto [best, theta] = max_swd_direction(x, y, cfg_.k, static_cast<int>(cfg_.maxswd_steps),
                                               cfg_.maxswd_lr, stream_);
        Var th = t.constant(theta);
        const std::size_t n = x.n();
        Var px = t.reshape(t.matmul(particles, th), {1, n});
        Var py = t.reshape(t.matmul(target, th), {1, n});
        return sliced_distance_node(t, px, py, cfg_.k);
    }

private:
    FlowConfig cfg_;
    Rng stream_;
};

class AswdDriver : public MetricDriver {
public:
    AswdDriver(const FlowConfig& c, std::size_t dim, AugmentationNetwork::Mode mode,
               bool optimize, Rng stream)
        : cfg_(c), optimize_(optimize), stream_(stream) {
        AugmentationNetwork net =
            AugmentationNetwork::random(dim, mode, c.lambda, stream_.substream(1).seed());
        if (mode != AugmentationNetwork::Mode::Identity)
            trainer_ = std::make_unique<AugmentationTrainer>(std::move(net), c.effective_inner_lr());
        else
            identity_net_ = std::move(net);
    }

    Var loss(Tape& t, Var particles, Var target) override {
        const AugmentationNetwork& net = trainer_ ? trainer_->net() : identity_net_;
        if (optimize_ && trainer_) {
            for (std::size_t m = 0; m < cfg_.inner_iterations; ++m) {
                ProjectionSet proj =
                    draw_projections(stream_, cfg_.projections, net.output_dim());
                trainer_->ascend(t.value(particles), t.value(target), proj, cfg_.k);
            }
        }
        ProjectionSet eval = draw_projections(stream_, cfg_.projections, net.output_dim());
        AugNetVars vars = net_constants(t, net);
        Var gx = augment_node(t, vars, particles);
        Var gy = augment_node(t, vars, target);
        return sliced_distance_node(t, project_node(t, gx, eval), project_node(t, gy, eval),
                                    cfg_.k);
    }

private:
    FlowConfig cfg_;
    bool optimize_;
    Rng stream_;
    std::unique_ptr<AugmentationTrainer> trainer_;
    AugmentationNetwork identity_net_;
};

std::unique_ptr<MetricDriver> make_driver(const FlowConfig& cfg, std::size_t dim, Rng stream) {
    using Mode = AugmentationNetwork::Mode;
    const std::string& id = cfg.metric;
    if (id == "swd") return std::make_unique<SwdDriver>(cfg, stream);
    if (id == "gswd-poly3")
        return std::make_unique<GswdDriver>(
            cfg, DefiningFunction::polynomial(static_cast<int>(dim), cfg.poly_degree), stream);
    if (id == "gswd-circular")
        return std::make_unique<GswdDriver>(cfg, DefiningFunction::circular(cfg.circular_radius),
                                            stream);
    if (id == "gswd-nn") return std::make_unique<GswdNnDriver>(cfg, dim, stream);
    if (id == "max-swd") return std::make_unique<MaxSwdDriver>(cfg, stream);
    if (id == "aswd")
        return std::make_unique<AswdDriver>(cfg, dim, Mode::InjectiveConcat, true, stream);
    if (id == "aswd-vanilla")
        return std::make_unique<AswdDriver>(cfg, dim, Mode::InjectiveConcat, false, stream);
    if (id == "aswd-non-injective")
        return std::make_unique<AswdDriver>(cfg, dim, Mode::Raw, true, stream);
    if (id == "aswd-vanilla-non-injective")
        return std::make_unique<AswdDriver>(cfg, dim, Mode::Raw, false, stream);
    if (id == "aswd-identity")
        return std::make_unique<AswdDriver>(cfg, dim, Mode::Identity, false, stream);
    throw ConfigError("unknown metric '" + id + "'");
}

} // namespace

FlowRunRecord flow_run(const FlowConfig& config, const TargetSpec& target_in) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&start]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    FlowRunRecord rec;
    rec.config = config;
    rec.target = target_in;
    if (rec.target.noise < 0.0 && config.noise >= 0.0) rec.target.noise = config.noise;

    const std::size_t n = config.particles;
    SampleSet target = sample_target(rec.target, n);

    Rng particle_rng(mix_seed(config.seed, 1));
    Tensor init({n, 2});
    for (double& v : init.vec()) v = particle_rng.normal();
    Parameter particles(std::move(init));
    AdamState adam(particles.value.shape(), config.lr);

    std::unique_ptr<MetricDriver> driver =
        make_driver(config, 2, Rng(mix_seed(config.seed, 3)));

    WassersteinEvaluator evaluator(target.points, 2);
    rec.w2.push_back(evaluator.distance(particles.value));
    rec.seconds.push_back(elapsed());

    Tape tape;
    for (std::size_t it = 0; it < config.iterations; ++it) {
        try {
            tape.clear();
            Var xs = tape.leaf(particles.value);
            Var ys = tape.constant(target.points);
            Var loss = driver->loss(tape, xs, ys);
            tape.backward(loss);
            particles.grad = tape.grad(xs);
            adam_step(particles, adam);
        } catch (const NumericError& e) {
            rec.aborted = true;
            rec.abort_reason = "iteration " + std::to_string(it + 1) + ": " + e.what();
            break;
        }
        rec.w2.push_back(evaluator.distance(particles.value));
        rec.seconds.push_back(elapsed());
    }
    rec.wall_seconds = elapsed();
    return rec;
}

std::uint64_t cell_seed(std::uint64_t base_seed, const std::string& metric,
                        const std::string& target, std::size_t repeat) {
    return mix_seed(base_seed, fnv1a(metric + "|" + target + "|" + std::to_string(repeat)));
}

std::vector<FlowRunRecord> run_experiment_matrix(const std::vector<std::string>& metrics,
                                                 const std::vector<std::string>& targets,
                                                 std::size_t repeats, std::uint64_t base_seed,
                                                 const FlowConfig& base, std::size_t workers) {
    if (repeats < 1) throw ContractError("run_experiment_matrix: repeats must be >= 1");
    struct Cell {
        FlowConfig config;
        TargetSpec target;
    };
    std::vector<Cell> cells;
    for (const std::string& metric : metrics) {
        for (const std::string& target : targets) {
            for (std::size_t r = 0; r < repeats; ++r) {
                Cell cell;
                cell.config = base;
                cell.config.metric = metric;
                cell.config.seed = cell_seed(base_seed, metric, target, r);
                cell.target.name = target;
                cell.target.noise = base.noise;
                cell.target.seed = mix_seed(cell.config.seed, 2);
                cells.push_back(std::move(cell));
            }
        }
    }

    std::vector<FlowRunRecord> records(cells.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<std::size_t>(workers, cells.size());

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                records[i] = flow_run(cells[i].config, cells[i].target);
            } catch (const std::exception& e) {
                records[i].config = cells[i].config;
                records[i].target = cells[i].target;
                records[i].aborted = true;
                records[i].abort_reason = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    return records;
}

// --- persistence -----------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string record_filename(const FlowRunRecord& rec) {
    return rec.config.metric + "_" + rec.target.name + "_" + std::to_string(rec.config.seed) +
           ".csv";
}

void write_record_csv(const FlowRunRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    const FlowConfig& c = rec.config;
    out << "# metric=" << c.metric << " target=" << rec.target.name << " n=" << c.particles
        << " projections=" << c.projections << " k=" << c.k << " lr=" << fmt(c.lr)
        << " iterations=" << c.iterations << " lambda=" << fmt(c.lambda)
        << " inner_iterations=" << c.inner_iterations << " inner_lr=" << fmt(c.inner_lr)
        << " poly_degree=" << c.poly_degree << " circular_radius=" << fmt(c.circular_radius)
        << " maxswd_steps=" << c.maxswd_steps << " maxswd_lr=" << fmt(c.maxswd_lr)
        << " seed=" << c.seed << " target_noise=" << fmt(rec.target.noise)
        << " target_seed=" << rec.target.seed << " wall_seconds=" << fmt(rec.wall_seconds)
        << " aborted=" << (rec.aborted ? 1 : 0);
    if (rec.aborted) out << " abort_reason=" << rec.abort_reason;
    out << "\n";
    out << "iteration,w2,seconds\n";
    for (std::size_t i = 0; i < rec.w2.size(); ++i)
        out << i << "," << fmt(rec.w2[i]) << "," << fmt(rec.seconds[i]) << "\n";
}

FlowRunRecord read_record_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.empty() || line[0] != '#')
        throw InputError(path + ": missing config header");

    FlowRunRecord rec;
    FlowConfig& c = rec.config;
    std::istringstream hdr(line.substr(1));
    std::string token;
    while (hdr >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw InputError(path + ": bad header token '" + token + "'");
        const std::string key = token.substr(0, eq);
        const std::string val = token.substr(eq + 1);
        if (key == "metric") c.metric = val;
        else if (key == "target") rec.target.name = val;
        else if (key == "n") c.particles = std::stoul(val);
        else if (key == "projections") c.projections = std::stoul(val);
        else if (key == "k") c.k = std::stoi(val);
        else if (key == "lr") c.lr = std::stod(val);
        else if (key == "iterations") c.iterations = std::stoul(val);
        else if (key == "lambda") c.lambda = std::stod(val);
        else if (key == "inner_iterations") c.inner_iterations = std::stoul(val);
        else if (key == "inner_lr") c.inner_lr = std::stod(val);
        else if (key == "poly_degree") c.poly_degree = std::stoi(val);
        else if (key == "circular_radius") c.circular_radius = std::stod(val);
        else if (key == "maxswd_steps") c.maxswd_steps = std::stoul(val);
        else if (key == "maxswd_lr") c.maxswd_lr = std::stod(val);
        else if (key == "seed") c.seed = std::stoull(val);
        else if (key == "target_noise") rec.target.noise = std::stod(val);
        else if (key == "target_seed") rec.target.seed = std::stoull(val);
        else if (key == "wall_seconds") rec.wall_seconds = std::stod(val);
        else if (key == "aborted") rec.aborted = val == "1";
        else if (key == "abort_reason") {
            // the reason is the remainder of the line, spaces included
            const auto pos = line.find("abort_reason=");
            rec.abort_reason = line.substr(pos + std::string("abort_reason=").size());
            break;
        } else {
            throw InputError(path + ": unknown header key '" + key + "'");
        }
    }

    if (!std::getline(in, line) || line != "iteration,w2,seconds")
        throw InputError(path + ": missing column header");
    std::size_t expect = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string it_s, w2_s, sec_s;
        if (!std::getline(row, it_s, ',') || !std::getline(row, w2_s, ',') ||
            !std::getline(row, sec_s))
            throw InputError(path + ": bad data row '" + line + "'");
        if (std::stoul(it_s) != expect)
            throw InputError(path + ": unexpected iteration index " + it_s);
        rec.w2.push_back(std::stod(w2_s));
        rec.seconds.push_back(std::stod(sec_s));
        ++expect;
    }
    if (rec.w2.empty()) throw InputError(path + ": no data rows");
    return rec;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ContractError("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SummaryRow> summarize(const std::vector<FlowRunRecord>& records) {
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> finals;
    auto find_row = [&](const std::string& metric, const std::string& target) -> std::size_t {
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].metric == metric && rows[i].target == target) return i;
        rows.push_back(SummaryRow{metric, target, 0.0, 0});
        finals.emplace_back();
        return rows.size() - 1;
    };
    for (const FlowRunRecord& rec : records) {
        if (rec.aborted || rec.w2.empty()) continue;
        const std::size_t i = find_row(rec.config.metric, rec.target.name);
        finals[i].push_back(rec.final_w2());
        rows[i].seeds += 1;
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (!finals[i].empty()) rows[i].median_final_w2 = median(finals[i]);
    return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << "metric,target,median_final_w2,seeds\n";
    for (const SummaryRow& r : rows)
        out << r.metric << "," << r.target << "," << fmt(r.median_final_w2) << "," << r.seeds
            << "\n";
}

} // namespace aswd

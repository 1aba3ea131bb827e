#include "aswd/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aswd/errors.hpp"

namespace aswd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct KeyContext {
    int line;
    const std::string& key;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("line " + std::to_string(line) + ": " + key + " " + what);
    }
};

double parse_double(const std::string& v, const KeyContext& ctx) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) ctx.fail("has trailing characters in '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        ctx.fail("expects a number, got '" + v + "'");
    }
}

std::uint64_t parse_count(const std::string& v, const KeyContext& ctx) {
    try {
        std::size_t pos = 0;
        if (!v.empty() && v[0] == '-') ctx.fail("must be nonnegative, got '" + v + "'");
        const std::uint64_t x = std::stoull(v, &pos);
        if (pos != v.size()) ctx.fail("has trailing characters in '" + v + "'");
        return x;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        ctx.fail("expects an integer, got '" + v + "'");
    }
}

double parse_positive(const std::string& v, const KeyContext& ctx) {
    const double x = parse_double(v, ctx);
    if (!(x > 0.0)) ctx.fail("must be positive");
    return x;
}

double parse_nonnegative(const std::string& v, const KeyContext& ctx) {
    const double x = parse_double(v, ctx);
    if (x < 0.0) ctx.fail("must be nonnegative");
    return x;
}

void check_metric(const std::string& name, const KeyContext& ctx) {
    const auto& known = known_flow_metrics();
    if (std::find(known.begin(), known.end(), name) == known.end())
        ctx.fail("names unknown metric '" + name + "'");
}

void check_target(const std::string& name, const KeyContext& ctx) {
    const auto& known = known_targets();
    if (std::find(known.begin(), known.end(), name) == known.end())
        ctx.fail("names unknown target '" + name + "'");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

std::string join(const std::vector<std::size_t>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(items[i]);
    }
    return out;
}

} // namespace

Config parse_config_text(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                              trim(raw) + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        const KeyContext ctx{lineno, key};

        if (key == "seed") c.seed = parse_count(val, ctx);
        else if (key == "workers") c.workers = parse_count(val, ctx);
        else if (key == "metric.k") {
            const auto k = parse_count(val, ctx);
            if (k < 1) ctx.fail("must be >= 1");
            c.flow.k = static_cast<int>(k);
        } else if (key == "metric.projections") {
            const auto L = parse_count(val, ctx);
            if (L < 1) ctx.fail("must be >= 1");
            c.flow.projections = L;
        } else if (key == "flow.metric") {
            check_metric(val, ctx);
            c.flow.metric = val;
        } else if (key == "flow.target") {
            check_target(val, ctx);
            c.flow_target = val;
        } else if (key == "flow.n") {
            const auto n = parse_count(val, ctx);
            if (n < 1) ctx.fail("must be >= 1");
            c.flow.particles = n;
        } else if (key == "flow.lr") {
            c.flow.lr = parse_positive(val, ctx);
        } else if (key == "flow.iterations") {
            c.flow.iterations = parse_count(val, ctx);
        } else if (key == "flow.noise") {
            c.flow.noise = parse_nonnegative(val, ctx);
        } else if (key == "aswd.lambda") {
            c.flow.lambda = parse_nonnegative(val, ctx);
        } else if (key == "aswd.iterations") {
            c.flow.inner_iterations = parse_count(val, ctx);
        } else if (key == "aswd.lr") {
            c.flow.inner_lr = parse_nonnegative(val, ctx); // 0 inherits flow.lr
        } else if (key == "gswd.degree") {
            const auto m = parse_count(val, ctx);
            if (m < 1 || m % 2 == 0) ctx.fail("must be a positive odd degree");
            c.flow.poly_degree = static_cast<int>(m);
        } else if (key == "gswd.radius") {
            c.flow.circular_radius = parse_positive(val, ctx);
        } else if (key == "maxswd.steps") {
            c.flow.maxswd_steps = parse_count(val, ctx);
        } else if (key == "maxswd.lr") {
            c.flow.maxswd_lr = parse_positive(val, ctx);
        } else if (key == "matrix.metrics") {
            auto items = split_list(val);
            if (items.empty()) ctx.fail("needs at least one metric");
            for (const auto& m : items) check_metric(m, ctx);
            c.matrix_metrics = std::move(items);
        } else if (key == "matrix.targets") {
            auto items = split_list(val);
            if (items.empty()) ctx.fail("needs at least one target");
            for (const auto& t : items) check_target(t, ctx);
            c.matrix_targets = std::move(items);
        } else if (key == "matrix.repeats") {
            const auto r = parse_count(val, ctx);
            if (r < 1) ctx.fail("must be >= 1");
            c.matrix_repeats = r;
        } else if (key == "distance.metric") {
            check_metric(val, ctx);
            c.distance_metric = val;
        } else if (key == "histogram.dimension") {
            const auto d = parse_count(val, ctx);
            if (d < 1) ctx.fail("must be >= 1");
            c.histogram_dimension = d;
        } else if (key == "histogram.shift") {
            c.histogram_shift = parse_nonnegative(val, ctx);
        } else if (key == "histogram.samples") {
            const auto n = parse_count(val, ctx);
            if (n < 1) ctx.fail("must be >= 1");
            c.histogram_samples = n;
        } else if (key == "histogram.projections") {
            const auto L = parse_count(val, ctx);
            if (L < 1) ctx.fail("must be >= 1");
            c.histogram_projections = L;
        } else if (key == "histogram.bins") {
            const auto b = parse_count(val, ctx);
            if (b < 1) ctx.fail("must be >= 1");
            c.histogram_bins = b;
        } else if (key == "histogram.lr") {
            c.histogram_lr = parse_positive(val, ctx);
        } else if (key == "bench.metrics") {
            auto items = split_list(val);
            if (items.empty()) ctx.fail("needs at least one metric");
            for (const auto& m : items) check_metric(m, ctx);
            c.bench_metrics = std::move(items);
        } else if (key == "bench.n" || key == "bench.l" || key == "bench.d") {
            std::vector<std::size_t> out;
            for (const auto& item : split_list(val)) {
                const auto v = parse_count(item, ctx);
                if (v < 1) ctx.fail("entries must be >= 1");
                out.push_back(v);
            }
            if (out.empty()) ctx.fail("needs at least one entry");
            if (key == "bench.n") c.bench_n = std::move(out);
            else if (key == "bench.l") c.bench_l = std::move(out);
            else c.bench_d = std::move(out);
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return c;
}

Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string emit_config(const Config& c) {
    std::ostringstream out;
    out << "seed = " << c.seed << "\n";
    out << "workers = " << c.workers << "\n";
    out << "metric.k = " << c.flow.k << "\n";
    out << "metric.projections = " << c.flow.projections << "\n";
    out << "flow.metric = " << c.flow.metric << "\n";
    out << "flow.target = " << c.flow_target << "\n";
    out << "flow.n = " << c.flow.particles << "\n";
    out << "flow.lr = " << fmt(c.flow.lr) << "\n";
    out << "flow.iterations = " << c.flow.iterations << "\n";
    if (c.flow.noise >= 0.0) out << "flow.noise = " << fmt(c.flow.noise) << "\n";
    out << "aswd.lambda = " << fmt(c.flow.lambda) << "\n";
    out << "aswd.iterations = " << c.flow.inner_iterations << "\n";
    out << "aswd.lr = " << fmt(c.flow.inner_lr) << "\n";
    out << "gswd.degree = " << c.flow.poly_degree << "\n";
    out << "gswd.radius = " << fmt(c.flow.circular_radius) << "\n";
    out << "maxswd.steps = " << c.flow.maxswd_steps << "\n";
    out << "maxswd.lr = " << fmt(c.flow.maxswd_lr) << "\n";
    out << "matrix.metrics = " << join(c.matrix_metrics) << "\n";
    out << "matrix.targets = " << join(c.matrix_targets) << "\n";
    out << "matrix.repeats = " << c.matrix_repeats << "\n";
    out << "distance.metric = " << c.distance_metric << "\n";
    out << "histogram.dimension = " << c.histogram_dimension << "\n";
    out << "histogram.shift = " << fmt(c.histogram_shift) << "\n";
    out << "histogram.samples = " << c.histogram_samples << "\n";
    out << "histogram.projections = " << c.histogram_projections << "\n";
    out << "histogram.bins = " << c.histogram_bins << "\n";
    out << "histogram.lr = " << fmt(c.histogram_lr) << "\n";
    out << "bench.metrics = " << join(c.bench_metrics) << "\n";
    out << "bench.n = " << join(c.bench_n) << "\n";
    out << "bench.l = " << join(c.bench_l) << "\n";
    out << "bench.d = " << join(c.bench_d) << "\n";
    return out.str();
}

} // namespace aswd

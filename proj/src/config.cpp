#include "pavg/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pavg/data_gen.hpp"

namespace pavg {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.values_[full] = trim(t.substr(eq + 1));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::raw(const std::string& key, const std::string& def) {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    touched_[key] = true;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    effective_[key] = v;
    return v;
}

double Config::get_double(const std::string& key, double def) {
    const std::string v = raw(key, fmt_double(def));
    char* end = nullptr;
    const double parsed = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    effective_[key] = fmt_double(parsed);
    return parsed;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t def) {
    const std::string v = raw(key, std::to_string(def));
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
    effective_[key] = std::to_string(parsed);
    return parsed;
}

std::size_t Config::get_size(const std::string& key, std::size_t def) {
    return static_cast<std::size_t>(get_u64(key, def));
}

std::vector<double> Config::get_double_list(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    effective_[key] = v;
    std::vector<double> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        char* end = nullptr;
        const double parsed = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0')
            throw ConfigError("key '" + key + "': bad list entry '" + cell + "'");
        out.push_back(parsed);
    }
    return out;
}

std::vector<std::uint64_t> Config::get_u64_list(const std::string& key, const std::string& def) {
    const std::string v = raw(key, def);
    effective_[key] = v;
    std::vector<std::uint64_t> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(cell.c_str(), &end, 10);
        if (end == cell.c_str() || *end != '\0')
            throw ConfigError("key '" + key + "': bad list entry '" + cell + "'");
        out.push_back(parsed);
    }
    return out;
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        (void)value;
        if (!touched_.count(key)) out.push_back(key);
    }
    return out;
}

std::string format_config(const std::map<std::string, std::string>& effective) {
    // top-level keys first, then one block per section (map order is sorted)
    std::ostringstream out;
    for (const auto& [key, value] : effective)
        if (key.find('.') == std::string::npos) out << key << " = " << value << "\n";
    std::string section;
    for (const auto& [key, value] : effective) {
        const auto dot = key.find('.');
        if (dot == std::string::npos) continue;
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            out << "\n[" << sec << "]\n";
            section = sec;
        }
        out << key.substr(dot + 1) << " = " << value << "\n";
    }
    return out.str();
}

namespace {

// broadcast a scalar over tau blocks or validate an exact-length list
std::vector<double> per_partition(Config& cfg, const std::string& key, const std::string& def,
                                  std::size_t tau) {
    std::vector<double> v = cfg.get_double_list(key, def);
    if (v.size() == 1) v.assign(tau, v[0]);
    if (v.size() != tau)
        throw ConfigError("key '" + key + "': expected 1 or tau=" + std::to_string(tau) +
                          " entries, got " + std::to_string(v.size()));
    return v;
}

PartitionStrategy parse_strategy(const std::string& s, const std::string& key) {
    if (s == "contiguous") return PartitionStrategy::contiguous;
    if (s == "strided") return PartitionStrategy::strided;
    throw ConfigError("key '" + key + "': expected contiguous|strided, got '" + s + "'");
}

} // namespace

BuiltRun build_run(Config& cfg) {
    BuiltRun run;
    SimConfig& sim = run.sim;

    const std::string scheme_str = cfg.get_string("scheme", "partial");
    try {
        sim.scheme.scheme = parse_scheme(scheme_str);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("key 'scheme': ") + e.what());
    }
    const std::size_t m = cfg.get_size("m", 1);
    if (m < 1) throw ConfigError("key 'm': at least one worker required");
    sim.iterations = cfg.get_u64("K", 1);
    if (sim.iterations < 1) throw ConfigError("key 'K': at least one iteration required");
    sim.scheme.tau = cfg.get_size("tau", 1);
    if (sim.scheme.tau < 1) throw ConfigError("key 'tau': must be >= 1");
    sim.scheme.partition = parse_strategy(cfg.get_string("partition", "contiguous"), "partition");
    sim.seed = cfg.get_u64("seed", 0);
    run.repetitions = cfg.get_size("repetitions", 1);
    if (run.repetitions < 1) throw ConfigError("key 'repetitions': must be >= 1");
    sim.batch_size = cfg.get_size("batch_size", 1);
    if (sim.batch_size < 1) throw ConfigError("key 'batch_size': must be >= 1");

    const char* env_threads = std::getenv("PAVG_THREADS");
    sim.threads = static_cast<int>(
        cfg.get_u64("threads", env_threads ? std::strtoull(env_threads, nullptr, 10) : 1));
    if (sim.threads < 1) sim.threads = 1;

    // learning-rate schedule
    const std::string lr_kind = cfg.get_string("lr.schedule", "constant");
    if (lr_kind == "constant")
        sim.scheme.lr.kind = LrSchedule::Kind::constant;
    else if (lr_kind == "step")
        sim.scheme.lr.kind = LrSchedule::Kind::step;
    else
        throw ConfigError("key 'lr.schedule': expected constant|step, got '" + lr_kind + "'");
    sim.scheme.lr.base = cfg.get_double("lr.eta", 0.1);
    if (!(sim.scheme.lr.base > 0.0)) throw ConfigError("key 'lr.eta': must be positive");
    sim.scheme.lr.warmup_iters = cfg.get_size("lr.warmup_iters", 0);
    sim.scheme.lr.milestones = cfg.get_u64_list("lr.milestones", "");
    sim.scheme.lr.decay = cfg.get_double("lr.decay", 0.1);

    sim.scheme.momentum = cfg.get_double("optimizer.momentum", 0.0);
    if (sim.scheme.momentum < 0.0 || sim.scheme.momentum >= 1.0)
        throw ConfigError("key 'optimizer.momentum': must lie in [0, 1)");

    // participation
    sim.participation.active_ratio = cfg.get_double("participation.active_ratio", 1.0);
    if (!(sim.participation.active_ratio > 0.0) || sim.participation.active_ratio > 1.0)
        throw ConfigError("key 'participation.active_ratio': must lie in (0, 1]");
    sim.participation.reselect_every = cfg.get_size("participation.reselect_every", 10);
    const std::string redist = cfg.get_string("participation.redistribution", "handoff");
    if (redist == "average")
        sim.participation.redistribution = Redistribution::average_then_distribute;
    else if (redist == "handoff")
        sim.participation.redistribution = Redistribution::direct_handoff;
    else
        throw ConfigError("key 'participation.redistribution': expected average|handoff");
    sim.participation.interval_stretch = cfg.get_double("participation.interval_stretch", 1.1);
    if (!(sim.participation.interval_stretch >= 1.0))
        throw ConfigError("key 'participation.interval_stretch': must be >= 1");

    // objective
    const std::uint64_t data_seed = cfg.get_u64("data.seed", sim.seed);
    const std::string kind = cfg.get_string("objective.kind", "quadratic");
    std::size_t dim = 0;
    if (kind == "quadratic") {
        dim = cfg.get_size("objective.d", 10);
        if (dim < 1) throw ConfigError("key 'objective.d': must be >= 1");
        if (sim.scheme.tau > dim) throw ConfigError("key 'tau': exceeds objective.d");
        const PartitionScheme defining =
            make_partition(sim.scheme.partition, dim, sim.scheme.tau);
        const auto curvature = per_partition(cfg, "objective.curvature", "1", sim.scheme.tau);
        const auto sigma = per_partition(cfg, "objective.sigma", "0", sim.scheme.tau);
        const double shift_scale = cfg.get_double("objective.shift_scale", 0.0);
        std::vector<ParameterVector> shifts;
        if (shift_scale > 0.0) {
            RngStream shift_rng = derive_stream(data_seed, 0xD15EA5E);
            shifts.assign(m, ParameterVector(dim));
            for (auto& c : shifts)
                for (double& v : c) v = shift_scale * shift_rng.next_gaussian();
        }
        try {
            sim.objective = make_quadratic(defining, curvature, sigma, shifts, m);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("objective block: ") + e.what());
        }
    } else if (kind == "logistic" || kind == "mlp") {
        const std::string path = cfg.get_string("objective.dataset", "");
        if (path.empty()) throw ConfigError("key 'objective.dataset': required for " + kind);
        Dataset data;
        try {
            data = load_csv_dataset(path);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("key 'objective.dataset': ") + e.what());
        }

        // federated split of the sample rows
        const std::string split_kind = cfg.get_string("data.split", "iid");
        RngStream split_rng = derive_stream(data_seed, 0x5EED);
        FederatedSplit split;
        try {
            if (split_kind == "iid") {
                split = split_iid(data.size(), m, split_rng);
            } else if (split_kind == "dirichlet") {
                const double alpha = cfg.get_double("data.alpha", 0.5);
                const std::size_t min_per = cfg.get_size("data.min_per_worker", 1);
                const int retries = static_cast<int>(cfg.get_u64("data.retries", 100));
                std::vector<int> labels(data.size());
                for (std::size_t s = 0; s < data.size(); ++s) {
                    const double l = data.labels[s];
                    if (l != std::floor(l) || l < 0)
                        throw ConfigError("key 'data.split': dirichlet needs integer class labels");
                    labels[s] = static_cast<int>(l);
                }
                split = split_dirichlet(labels, m, alpha, min_per, split_rng, retries);
            } else {
                throw ConfigError("key 'data.split': expected iid|dirichlet");
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("data block: ") + e.what());
        } catch (const InfeasibleSplitError& e) {
            throw ConfigError(std::string("data block: ") + e.what());
        }

        try {
            if (kind == "logistic") {
                dim = data.feature_dim();
                if (sim.scheme.tau > dim) throw ConfigError("key 'tau': exceeds feature count");
                const PartitionScheme defining =
                    make_partition(sim.scheme.partition, dim, sim.scheme.tau);
                const double l2 = cfg.get_double("objective.l2", 0.0);
                sim.objective = make_logistic(std::move(data), split.assignments, l2, defining);
            } else {
                const auto layer_list = cfg.get_u64_list("objective.layers", "");
                if (layer_list.size() < 2)
                    throw ConfigError("key 'objective.layers': need input and output sizes");
                std::vector<std::size_t> layers(layer_list.begin(), layer_list.end());
                dim = mlp_param_count(layers);
                if (sim.scheme.tau > dim) throw ConfigError("key 'tau': exceeds parameter count");
                const PartitionScheme defining =
                    make_partition(sim.scheme.partition, dim, sim.scheme.tau);
                sim.objective =
                    make_mlp(layers, std::move(data), split.assignments, defining, data_seed);
            }
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("objective block: ") + e.what());
        }
    } else {
        throw ConfigError("key 'objective.kind': expected quadratic|logistic|mlp, got '" + kind +
                          "'");
    }

    // initial point u_1, shared by every worker
    const std::string init_kind = cfg.get_string("objective.init", "ones");
    const double init_scale = cfg.get_double("objective.init_scale", 1.0);
    sim.init.assign(dim, 0.0);
    if (init_kind == "zeros") {
        // all zero
    } else if (init_kind == "ones") {
        sim.init.assign(dim, init_scale);
    } else if (init_kind == "gaussian") {
        RngStream init_rng = derive_stream(data_seed, 0x1217);
        for (double& v : sim.init) v = init_scale * init_rng.next_gaussian();
    } else {
        throw ConfigError("key 'objective.init': expected zeros|ones|gaussian");
    }

    // metrics
    sim.eval_every = cfg.get_size("metrics.eval_every", 1);
    const char* env_root = std::getenv("PAVG_OUT_ROOT");
    run.out_root = cfg.get_string("metrics.out_dir", env_root ? env_root : "runs");

    const auto unused = cfg.unused_keys();
    if (!unused.empty()) throw ConfigError("unknown config key: '" + unused.front() + "'");

    run.effective = cfg.effective();
    return run;
}

} // namespace pavg

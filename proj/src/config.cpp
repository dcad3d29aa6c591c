#include "brpco/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <toml.hpp>

namespace brpco {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& expected) {
    throw std::invalid_argument("config: " + field + " must be " + expected);
}

void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(field, "finite and > 0");
}

void require_unit(double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) fail(field, "in [0, 1]");
}

// Reads a table and rejects keys it does not know, so typos surface as errors.
class Section {
public:
    Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        if (!tbl_) return;
        const toml::node* n = tbl_->get(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, bool>) {
            auto v = n->value<bool>();
            if (!v) fail(where(key), "a boolean");
            out = *v;
        } else if constexpr (std::is_integral_v<T>) {
            auto v = n->value<std::int64_t>();
            if (!v) fail(where(key), "an integer");
            out = static_cast<T>(*v);
        } else if constexpr (std::is_floating_point_v<T>) {
            auto v = n->value<double>();
            if (!v) fail(where(key), "a number");
            out = *v;
        } else {
            auto v = n->value<std::string>();
            if (!v) fail(where(key), "a string");
            out = *v;
        }
    }

    void read_scaled(const char* key, double& out, double scale) {
        double v = out / scale;
        read(key, v);
        out = v * scale;
    }

    void read_range(const char* key, Range& out, double scale) {
        used_.insert(key);
        if (!tbl_) return;
        const toml::node* n = tbl_->get(key);
        if (!n) return;
        const toml::array* a = n->as_array();
        if (!a || a->size() != 2) fail(where(key), "a two-element array [lo, hi]");
        auto lo = (*a)[0].value<double>();
        auto hi = (*a)[1].value<double>();
        if (!lo || !hi) fail(where(key), "numeric [lo, hi]");
        out = {*lo * scale, *hi * scale};
    }

    void read_list(const char* key, std::vector<double>& out, double scale) {
        used_.insert(key);
        if (!tbl_) return;
        const toml::node* n = tbl_->get(key);
        if (!n) return;
        const toml::array* a = n->as_array();
        if (!a) fail(where(key), "an array");
        out.clear();
        for (const auto& e : *a) {
            auto v = e.value<double>();
            if (!v) fail(where(key), "an array of numbers");
            out.push_back(*v * scale);
        }
    }

    void read_int_list(const char* key, std::vector<int>& out) {
        std::vector<double> tmp(out.begin(), out.end());
        read_list(key, tmp, 1.0);
        out.assign(tmp.begin(), tmp.end());
    }

    void read_matrix(const char* key, std::vector<std::vector<double>>& out) {
        used_.insert(key);
        if (!tbl_) return;
        const toml::node* n = tbl_->get(key);
        if (!n) return;
        const toml::array* rows = n->as_array();
        if (!rows) fail(where(key), "an array of arrays");
        out.clear();
        for (const auto& r : *rows) {
            const toml::array* row = r.as_array();
            if (!row) fail(where(key), "an array of arrays");
            std::vector<double> vals;
            for (const auto& e : *row) {
                auto v = e.value<double>();
                if (!v) fail(where(key), "numeric");
                vals.push_back(*v);
            }
            out.push_back(std::move(vals));
        }
    }

    void mark_known(const char* key) { used_.insert(key); }

    void reject_unknown() const {
        if (!tbl_) return;
        for (const auto& [k, v] : *tbl_) {
            if (!used_.count(std::string(k.str())))
                throw std::invalid_argument("config: unknown key " + where(std::string(k.str())));
        }
    }

private:
    std::string where(const std::string& key) const {
        return name_.empty() ? key : name_ + "." + key;
    }

    const toml::table* tbl_;
    std::string name_;
    std::set<std::string> used_;
};

const toml::table* sub(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    const toml::table* t = n->as_table();
    if (!t) throw std::invalid_argument(std::string("config: [") + name + "] must be a table");
    return t;
}

SystemParams from_table(const toml::table& root) {
    SystemParams p;

    Section top(&root, "");
    top.read("seed", p.seed);
    for (const char* name : {"system", "tasks", "requests", "chain", "reward", "rl", "run"})
        top.mark_known(name);
    top.reject_unknown();

    Section sys(sub(root, "system"), "system");
    sys.read("num_users", p.num_users);
    sys.read("num_subtasks", p.num_subtasks);
    sys.read("num_tasks", p.num_tasks);
    sys.read("num_channels", p.num_channels);
    sys.read_scaled("bandwidth_mhz", p.bandwidth, 1e6);
    sys.read("tx_power_w", p.tx_power);
    sys.read("noise_var_w", p.noise_var);
    sys.read("path_loss_exp", p.path_loss_exp);
    sys.read("cell_size_m", p.cell_size);
    sys.read("min_distance_m", p.min_distance);
    sys.read_scaled("cpu_local_ghz", p.cpu_local, 1e9);
    sys.read_scaled("cpu_fin_ghz", p.cpu_fin, 1e9);
    sys.read_scaled("cpu_ein_ghz", p.cpu_ein, 1e9);
    sys.read_scaled("cache_fin_gb", p.cache_fin, 8e9);
    sys.read_scaled("cache_ein_gb", p.cache_ein, 8e9);
    sys.read("energy_coeff", p.energy_coeff);
    sys.read("delay_weight", p.delay_weight);
    sys.read("energy_weight", p.energy_weight);
    sys.read("deadline_s", p.deadline);
    sys.read("queue_enabled", p.queue_enabled);
    sys.read("slot_duration_s", p.slot_duration);
    sys.reject_unknown();

    Section tasks(sub(root, "tasks"), "tasks");
    std::string preset = "custom";
    tasks.read("preset", preset);
    apply_preset(p, parse_preset(preset));
    tasks.read_range("input_kb", p.input_bits, kBitsPerKB);
    tasks.read_range("volume_kb", p.volume_bits, kBitsPerKB);
    tasks.read_range("load_gcycles", p.load_cycles, 1e9);
    tasks.reject_unknown();

    Section req(sub(root, "requests"), "requests");
    req.read_matrix("transition", p.transition);
    req.reject_unknown();

    Section chain(sub(root, "chain"), "chain");
    chain.read("enabled", p.bc_enabled);
    chain.read("budget", p.bc_budget);
    chain.read("price_per_mb", p.price_per_mb);
    chain.read("incentive_per_mb", p.incentive_per_mb);
    chain.read("r_min", p.r_min);
    chain.read("r_max", p.r_max);
    chain.read("block_txs", p.block_txs);
    chain.read("sig_cycles", p.sig_cycles);
    chain.read("verify_cycles", p.verify_cycles);
    chain.read("num_eins", p.num_eins);
    chain.read("num_faulty", p.num_faulty);
    chain.read_scaled("primary_ghz", p.primary_freq, 1e9);
    chain.read_list("node_ghz", p.node_freqs, 1e9);
    chain.read("budget_quantum", p.budget_quantum);
    chain.reject_unknown();

    Section rew(sub(root, "reward"), "reward");
    rew.read("w1", p.reward_w1);
    rew.read("w2", p.reward_w2);
    rew.reject_unknown();

    Section rl(sub(root, "rl"), "rl");
    rl.read("lr", p.rl.lr);
    rl.read("momentum", p.rl.momentum);
    rl.read("gamma", p.rl.gamma);
    rl.read("eps_start", p.rl.eps_start);
    rl.read("eps_end", p.rl.eps_end);
    rl.read("eps_decay_frac", p.rl.eps_decay_frac);
    rl.read("replay_capacity", p.rl.replay_capacity);
    rl.read("batch", p.rl.batch);
    rl.read("target_sync", p.rl.target_sync);
    rl.read_int_list("hidden", p.rl.hidden);
    rl.read("dropout", p.rl.dropout);
    rl.read("huber_delta", p.rl.huber_delta);
    rl.read("standardize_reward", p.rl.standardize_reward);
    rl.read("knapsack_min", p.rl.knapsack_min);
    rl.read("hold_decisions", p.rl.hold_decisions);
    rl.reject_unknown();

    Section run(sub(root, "run"), "run");
    run.read("train_episodes", p.train_episodes);
    run.read("eval_episodes", p.eval_episodes);
    run.read("episode_slots", p.episode_slots);
    run.reject_unknown();

    validate(p);
    return p;
}

}  // namespace

std::vector<double> SystemParams::consortium_freqs() const {
    if (!node_freqs.empty()) return node_freqs;
    return std::vector<double>(static_cast<std::size_t>(num_eins) + 1, cpu_fin);
}

std::vector<std::vector<double>> SystemParams::transition_matrix() const {
    if (!transition.empty()) return transition;
    const std::size_t n = static_cast<std::size_t>(num_tasks) + 1;
    return std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / n));
}

void validate(const SystemParams& p) {
    if (p.num_users < 1) fail("system.num_users", ">= 1");
    if (p.num_subtasks < 1) fail("system.num_subtasks", ">= 1");
    if (p.num_tasks < 1) fail("system.num_tasks", ">= 1");
    if (p.num_channels < 1) fail("system.num_channels", ">= 1");
    require_positive(p.bandwidth, "system.bandwidth_mhz");
    require_positive(p.tx_power, "system.tx_power_w");
    require_positive(p.noise_var, "system.noise_var_w");
    require_positive(p.path_loss_exp, "system.path_loss_exp");
    require_positive(p.cell_size, "system.cell_size_m");
    require_positive(p.min_distance, "system.min_distance_m");
    require_positive(p.cpu_local, "system.cpu_local_ghz");
    require_positive(p.cpu_fin, "system.cpu_fin_ghz");
    require_positive(p.cpu_ein, "system.cpu_ein_ghz");
    require_positive(p.cache_fin, "system.cache_fin_gb");
    require_positive(p.cache_ein, "system.cache_ein_gb");
    require_positive(p.energy_coeff, "system.energy_coeff");
    require_unit(p.delay_weight, "system.delay_weight");
    require_unit(p.energy_weight, "system.energy_weight");
    if (std::abs(p.delay_weight + p.energy_weight - 1.0) > 1e-9)
        throw std::invalid_argument(
            "config: system.delay_weight and system.energy_weight: weights must sum to 1");
    require_positive(p.deadline, "system.deadline_s");
    require_positive(p.slot_duration, "system.slot_duration_s");
    for (const Range* r : {&p.input_bits, &p.volume_bits, &p.load_cycles}) {
        if (!(r->lo > 0.0) || !(r->hi >= r->lo)) fail("tasks ranges", "0 < lo <= hi");
    }
    if (!p.transition.empty()) {
        if (p.transition.size() != static_cast<std::size_t>(p.num_tasks) + 1)
            fail("requests.transition", "(num_tasks+1) x (num_tasks+1)");
        for (std::size_t i = 0; i < p.transition.size(); ++i) {
            const auto& row = p.transition[i];
            if (row.size() != p.transition.size())
                fail("requests.transition", "square");
            double sum = 0.0;
            for (double x : row) {
                if (!(x >= 0.0)) fail("requests.transition", "non-negative");
                sum += x;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                fail("requests.transition row " + std::to_string(i), "stochastic (sum 1)");
        }
    }
    if (!(p.bc_budget >= 0.0)) fail("chain.budget", ">= 0");
    require_positive(p.price_per_mb, "chain.price_per_mb");
    if (!(p.incentive_per_mb >= 0.0)) fail("chain.incentive_per_mb", ">= 0");
    if (p.r_min < 1 || p.r_max <= p.r_min) fail("chain.r_min/r_max", "integers with 1 <= r_min < r_max");
    if (p.block_txs < 0) fail("chain.block_txs", ">= 0");
    if (!(p.sig_cycles >= 0.0)) fail("chain.sig_cycles", ">= 0");
    if (!(p.verify_cycles >= 0.0)) fail("chain.verify_cycles", ">= 0");
    if (p.num_eins < 1) fail("chain.num_eins", ">= 1");
    if (p.num_faulty < 0) fail("chain.num_faulty", ">= 0");
    require_positive(p.primary_freq, "chain.primary_ghz");
    for (double f : p.node_freqs) require_positive(f, "chain.node_ghz");
    require_positive(p.budget_quantum, "chain.budget_quantum");
    require_unit(p.reward_w1, "reward.w1");
    require_unit(p.reward_w2, "reward.w2");

    require_positive(p.rl.lr, "rl.lr");
    if (!(p.rl.momentum >= 0.0 && p.rl.momentum < 1.0)) fail("rl.momentum", "in [0, 1)");
    if (!(p.rl.gamma > 0.0 && p.rl.gamma < 1.0)) fail("rl.gamma", "in (0, 1)");
    require_unit(p.rl.eps_start, "rl.eps_start");
    require_unit(p.rl.eps_end, "rl.eps_end");
    require_unit(p.rl.eps_decay_frac, "rl.eps_decay_frac");
    if (p.rl.replay_capacity < 1) fail("rl.replay_capacity", ">= 1");
    if (p.rl.batch < 1) fail("rl.batch", ">= 1");
    if (p.rl.target_sync < 1) fail("rl.target_sync", ">= 1");
    for (int h : p.rl.hidden)
        if (h < 1) fail("rl.hidden", "positive layer widths");
    if (!(p.rl.dropout >= 0.0 && p.rl.dropout < 1.0)) fail("rl.dropout", "in [0, 1)");
    require_positive(p.rl.huber_delta, "rl.huber_delta");

    if (p.train_episodes < 0) fail("run.train_episodes", ">= 0");
    if (p.eval_episodes < 0) fail("run.eval_episodes", ">= 0");
    if (p.episode_slots < 1) fail("run.episode_slots", ">= 1");
}

SystemParams load_config_string(const std::string& text) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "config: parse error at line " << e.source().begin.line << ": " << e.description();
        throw std::runtime_error(os.str());
    }
    return from_table(root);
}

SystemParams load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config_string(buf.str());
}

TaskPreset parse_preset(const std::string& name) {
    if (name == "custom") return TaskPreset::Custom;
    if (name == "data-intensive") return TaskPreset::DataIntensive;
    if (name == "compute-intensive") return TaskPreset::ComputeIntensive;
    throw std::invalid_argument("config: tasks.preset must be custom, data-intensive or compute-intensive");
}

void apply_preset(SystemParams& p, TaskPreset preset) {
    switch (preset) {
        case TaskPreset::Custom:
            break;
        case TaskPreset::DataIntensive:
            p.input_bits = {10 * kBitsPerMB, 20 * kBitsPerMB};
            p.volume_bits = {500 * kBitsPerMB, 2000 * kBitsPerMB};
            p.load_cycles = {1e9, 4e9};
            break;
        case TaskPreset::ComputeIntensive:
            p.input_bits = {1 * kBitsPerMB, 4 * kBitsPerMB};
            p.volume_bits = {500 * kBitsPerMB, 2000 * kBitsPerMB};
            p.load_cycles = {5e9, 20e9};
            break;
    }
}

}  // namespace brpco

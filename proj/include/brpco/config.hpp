#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace brpco {

inline constexpr double kBitsPerMB = 8e6;
inline constexpr double kBitsPerKB = 8e3;

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct RlParams {
    double lr = 0.0008;
    double momentum = 0.0;
    double gamma = 0.9;
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_frac = 0.6;
    int replay_capacity = 10000;
    int batch = 32;
    int target_sync = 50;
    std::vector<int> hidden{128, 128};
    double dropout = 0.2;
    double huber_delta = 1.0;
    bool standardize_reward = true;
    bool knapsack_min = false;     // minimize the knapsack objective instead
    bool hold_decisions = false;   // C^O under the same PCO decisions as C^R
};

struct SystemParams {
    // topology and radio
    int num_users = 30;            // K
    int num_subtasks = 4;          // V, per task
    int num_tasks = 6;             // F
    int num_channels = 10;         // M
    double bandwidth = 50e6;       // B, Hz
    double tx_power = 0.5;         // rho, W
    double noise_var = 2e-13;      // sigma^2, W
    double path_loss_exp = 3.0;
    double cell_size = 200.0;      // m, square side
    double min_distance = 1.0;     // m

    // computation
    double cpu_local = 1e9;        // cycles/s
    double cpu_fin = 60e9;
    double cpu_ein = 100e9;
    double cache_fin = 3e9 * 8;    // bits
    double cache_ein = 5e9 * 8;
    double energy_coeff = 5e-27;   // tau
    double delay_weight = 0.5;     // delta^T
    double energy_weight = 0.5;    // delta^E
    double deadline = 30.0;        // mu, s
    bool queue_enabled = true;
    double slot_duration = 10.0;   // s of service drained per slot

    // task sampling, SI units (bits, cycles)
    Range input_bits{1 * kBitsPerKB, 5 * kBitsPerKB};
    Range volume_bits{1 * kBitsPerKB, 10 * kBitsPerKB};
    Range load_cycles{1e9, 10e9};

    // requests: (F+1)x(F+1) row-stochastic; empty means uniform
    std::vector<std::vector<double>> transition;

    // blockchain
    bool bc_enabled = true;
    double bc_budget = 500.0;      // P_BC
    double price_per_mb = 1000.0;  // u
    double incentive_per_mb = 10.0;
    int r_min = 1;
    int r_max = 10;
    int block_txs = 10;            // Q^b
    double sig_cycles = 1e6;       // script-B
    double verify_cycles = 1e6;    // delta_ver
    int num_eins = 3;              // m
    int num_faulty = 1;            // n
    double primary_freq = 60e9;    // F_k of the primary BC node
    std::vector<double> node_freqs;  // consortium; empty means m+1 nodes at cpu_fin
    double budget_quantum = 1.0;

    // reward
    double reward_w1 = 0.5;
    double reward_w2 = 0.5;

    RlParams rl;

    // run shape
    int train_episodes = 1000;
    int eval_episodes = 100;
    int episode_slots = 2;

    std::uint64_t seed = 1;

    int total_subtasks() const { return num_tasks * num_subtasks; }
    std::vector<double> consortium_freqs() const;
    std::vector<std::vector<double>> transition_matrix() const;
};

// Throws std::invalid_argument naming the offending field.
void validate(const SystemParams& p);

SystemParams load_config(const std::string& path);
SystemParams load_config_string(const std::string& text);

enum class TaskPreset { Custom, DataIntensive, ComputeIntensive };
void apply_preset(SystemParams& p, TaskPreset preset);
TaskPreset parse_preset(const std::string& name);

}  // namespace brpco

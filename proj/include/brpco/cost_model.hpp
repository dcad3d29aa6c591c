#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "brpco/config.hpp"
#include "brpco/tasks.hpp"

namespace brpco {

struct ExecutionCost {
    double delay = 0.0;
    double energy = 0.0;
    double cost = 0.0;
};

ExecutionCost weighted(double delay, double energy, const SystemParams& p);

enum class Destination { Fin = 0, Ein = 1 };

struct QueueState {
    Destination dest = Destination::Fin;
    std::deque<double> pending;  // service times, s

    double backlog() const;
    void push(double service_time);
    // Serves `dt` seconds of work in FIFO order.
    void drain(double dt);
};

// Which optional delay terms are active. Defaults follow the params flags.
struct CostOptions {
    bool blockchain = true;
    bool queue = true;

    static CostOptions from(const SystemParams& p) { return {p.bc_enabled, p.queue_enabled}; }
};

ExecutionCost local_cost(const SubtaskSpec& s, const SystemParams& p);

// With a = 1/S (or the override), rate = 1/(backlog + S) for a nonempty
// queue and infinite otherwise; u = a/rate (1 when the rate is infinite).
// Returns backlog + S when u >= 1, u^2/(1-u) S otherwise.
double queue_delay(const QueueState& q, double service_time,
                   std::optional<double> arrival_rate = std::nullopt);

double service_time(const SubtaskSpec& s, double rate, double cpu);

double dest_cpu(Destination d, const SystemParams& p);

// Remote execution at a destination with CPU `cpu`: processing + upload +
// consensus latency at replica count r + queue delay.
ExecutionCost remote_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                          double cpu, const SystemParams& p, const CostOptions& opt);
ExecutionCost fin_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                       const SystemParams& p, const CostOptions& opt);
ExecutionCost ein_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                       const SystemParams& p, const CostOptions& opt);

// remote_cost rewritten in the rate: delay = delay_coeff/rate + delay_fixed,
// cost = cost_coeff/rate + cost_fixed. Exact for the default queue branch.
struct RemoteSplit {
    double delay_coeff = 0.0;
    double delay_fixed = 0.0;
    double cost_coeff = 0.0;
    double cost_fixed = 0.0;

    double delay(double rate) const { return delay_coeff / rate + delay_fixed; }
    double cost(double rate) const { return cost_coeff / rate + cost_fixed; }
};

RemoteSplit remote_split(const SubtaskSpec& s, int r, double backlog, double cpu,
                         const SystemParams& p, const CostOptions& opt);

struct OffloadDecisionCell {
    int mode = 0;                         // 0 local, 1..M channel
    Destination dest = Destination::Fin;  // meaningful when mode >= 1

    bool remote() const { return mode >= 1; }
    friend bool operator==(const OffloadDecisionCell&, const OffloadDecisionCell&) = default;
};

// Costs of one subtask under every option: C^O uses r_max, C^R the chosen replica count.
struct SubtaskCosts {
    ExecutionCost local;
    ExecutionCost fin_o, fin_r;
    ExecutionCost ein_o, ein_r;
};

// Charges exactly one branch per subtask: local, or (1-beta) C^O + beta C^R
// at the chosen destination.
double slot_cost(const std::vector<OffloadDecisionCell>& cells, const std::vector<int>& beta,
                 const std::vector<SubtaskCosts>& costs, int num_channels);

}  // namespace brpco

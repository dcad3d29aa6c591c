#include "brpco/cost_model.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

#include "brpco/chain.hpp"

namespace brpco {

ExecutionCost weighted(double delay, double energy, const SystemParams& p) {
    return {delay, energy, p.delay_weight * delay + p.energy_weight * energy};
}

double QueueState::backlog() const {
    return std::accumulate(pending.begin(), pending.end(), 0.0);
}

void QueueState::push(double service_time) {
    if (!(service_time >= 0.0)) throw std::invalid_argument("queue: negative service time");
    pending.push_back(service_time);
}

void QueueState::drain(double dt) {
    while (dt > 0.0 && !pending.empty()) {
        if (pending.front() <= dt) {
            dt -= pending.front();
            pending.pop_front();
        } else {
            pending.front() -= dt;
            dt = 0.0;
        }
    }
}

ExecutionCost local_cost(const SubtaskSpec& s, const SystemParams& p) {
    const double delay = s.cycles / p.cpu_local;
    const double energy = p.energy_coeff * p.cpu_local * p.cpu_local * s.cycles;
    return weighted(delay, energy, p);
}

double queue_delay(const QueueState& q, double service_time, std::optional<double> arrival_rate) {
    if (!(service_time > 0.0)) throw std::invalid_argument("queue_delay: S must be > 0");
    const double backlog = q.backlog();
    const double a = arrival_rate.value_or(1.0 / service_time);
    double u = 1.0;
    if (!q.pending.empty()) {
        const double rate = 1.0 / (backlog + service_time);
        u = a / rate;
    }
    if (u >= 1.0) return backlog + service_time;
    return u * u / (1.0 - u) * service_time;
}

double service_time(const SubtaskSpec& s, double rate, double cpu) {
    return s.cycles / cpu + s.data_bits() / rate;
}

double dest_cpu(Destination d, const SystemParams& p) {
    return d == Destination::Fin ? p.cpu_fin : p.cpu_ein;
}

ExecutionCost remote_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                          double cpu, const SystemParams& p, const CostOptions& opt) {
    if (!(rate > 0.0)) throw std::invalid_argument("remote_cost: rate must be > 0");
    const double upload = s.data_bits() / rate;
    double delay = s.cycles / cpu + upload;
    if (opt.blockchain) delay += consensus_latency(s, r, rate, p).total;
    if (opt.queue) delay += queue_delay(q, service_time(s, rate, cpu));
    const double energy = p.tx_power * upload;
    return weighted(delay, energy, p);
}

ExecutionCost fin_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                       const SystemParams& p, const CostOptions& opt) {
    return remote_cost(s, rate, r, q, p.cpu_fin, p, opt);
}

ExecutionCost ein_cost(const SubtaskSpec& s, double rate, int r, const QueueState& q,
                       const SystemParams& p, const CostOptions& opt) {
    return remote_cost(s, rate, r, q, p.cpu_ein, p, opt);
}

RemoteSplit remote_split(const SubtaskSpec& s, int r, double backlog, double cpu,
                         const SystemParams& p, const CostOptions& opt) {
    const double x = s.data_bits();
    const double proc = s.cycles / cpu;
    double per_rate = 1.0;  // multiples of x/rate
    double fixed = proc;
    if (opt.blockchain) {
        per_rate += 1.0 + 4.0 * r * p.block_txs;
        fixed += consensus_compute(r, p);
    }
    if (opt.queue) {
        per_rate += 1.0;
        fixed += backlog + proc;
    }
    RemoteSplit out;
    out.delay_coeff = per_rate * x;
    out.delay_fixed = fixed;
    out.cost_coeff = p.delay_weight * out.delay_coeff + p.energy_weight * p.tx_power * x;
    out.cost_fixed = p.delay_weight * fixed;
    return out;
}

double slot_cost(const std::vector<OffloadDecisionCell>& cells, const std::vector<int>& beta,
                 const std::vector<SubtaskCosts>& costs, int num_channels) {
    if (cells.size() != costs.size() || beta.size() != costs.size())
        throw std::invalid_argument("slot_cost: size mismatch");
    double total = 0.0;
    for (std::size_t v = 0; v < cells.size(); ++v) {
        const auto& c = cells[v];
        if (c.mode < 0 || c.mode > num_channels)
            throw std::invalid_argument("slot_cost: invalid decision cell");
        if (beta[v] != 0 && beta[v] != 1) throw std::invalid_argument("slot_cost: beta not 0/1");
        if (!c.remote()) {
            total += costs[v].local.cost;
            continue;
        }
        const bool fin = c.dest == Destination::Fin;
        const double co = fin ? costs[v].fin_o.cost : costs[v].ein_o.cost;
        const double cr = fin ? costs[v].fin_r.cost : costs[v].ein_r.cost;
        total += (1 - beta[v]) * co + beta[v] * cr;
    }
    return total;
}

}  // namespace brpco

#include "brpco/chain.hpp"

#include <algorithm>
#include <stdexcept>

namespace brpco {

RedundancyProfile profile_from_levels(const std::vector<int>& levels, int r_max) {
    RedundancyProfile prof;
    prof.r.resize(levels.size());
    prof.beta.resize(levels.size());
    for (std::size_t f = 0; f < levels.size(); ++f) {
        prof.beta[f] = levels[f] < r_max ? 1 : 0;
        prof.r[f] = levels[f] - prof.beta[f];
    }
    return prof;
}

std::vector<int> levels_of(const RedundancyProfile& prof) {
    std::vector<int> out(prof.size());
    for (std::size_t f = 0; f < prof.size(); ++f) out[f] = prof.level(f);
    return out;
}

std::optional<RedundancyViolation> check_redundancy(const RedundancyProfile& prof,
                                                     const std::vector<SubtaskSpec>& subtasks,
                                                     const SystemParams& p) {
    if (prof.r.size() != subtasks.size() || prof.beta.size() != subtasks.size())
        throw std::invalid_argument("check_redundancy: profile/subtask size mismatch");
    using K = RedundancyViolation::Kind;
    for (std::size_t f = 0; f < prof.size(); ++f) {
        if (prof.beta[f] != 0 && prof.beta[f] != 1)
            return RedundancyViolation{K::BadFlag, f, "beta must be 0 or 1"};
        if (prof.level(f) > p.r_max)
            return RedundancyViolation{K::MaxRedundancy, f, "beta + r exceeds r_max"};
        if (prof.level(f) < p.r_min)
            return RedundancyViolation{K::BelowMin, f, "beta + r below r_min"};
    }
    double spend = 0.0;
    for (std::size_t f = 0; f < prof.size(); ++f) {
        spend += p.price_per_mb * prof.level(f) * subtasks[f].volume_mb();
        if (spend > p.bc_budget * (1.0 + 1e-12))
            return RedundancyViolation{K::Budget, f, "spend exceeds P_BC"};
    }
    return std::nullopt;
}

double bc_spend(const RedundancyProfile& prof, const std::vector<SubtaskSpec>& subtasks,
                double price_per_mb) {
    double spend = 0.0;
    for (std::size_t f = 0; f < prof.size(); ++f)
        spend += price_per_mb * prof.level(f) * subtasks.at(f).volume_mb();
    return spend;
}

double mining_incentive(const SubtaskSpec& s, double incentive_per_mb) {
    return incentive_per_mb * s.data_mb();
}

namespace {

double max_over_nodes(const std::vector<double>& freqs, double cycles) {
    double m = 0.0;
    for (double f : freqs) {
        if (!(f > 0.0)) throw std::invalid_argument("consensus: node frequency must be > 0");
        m = std::max(m, cycles / f);
    }
    return m;
}

struct PhaseCompute {
    double broadcast, pre_prepare, prepare, commit, reply;
};

PhaseCompute phase_compute(int r, const SystemParams& p) {
    if (!(p.primary_freq > 0.0)) throw std::invalid_argument("consensus: primary frequency must be > 0");
    const auto nodes = p.consortium_freqs();
    const double sig = p.sig_cycles, ver = p.verify_cycles;
    const double q = p.block_txs, n = p.num_faulty, m = p.num_eins;
    const double fp = p.primary_freq;
    PhaseCompute c{};
    c.broadcast = r * q * (sig + ver) / fp;
    c.pre_prepare = (sig + (m - 1) * ver) / fp + max_over_nodes(nodes, (sig + ver) * (q + 1));
    c.prepare = max_over_nodes(nodes, 2 * n * (sig + ver) + sig + (m - 1) * ver);
    c.commit = c.prepare;
    c.reply = max_over_nodes(nodes, q * (sig + ver)) + 2 * n * q * (sig + ver) / fp;
    return c;
}

}  // namespace

double consensus_compute(int r, const SystemParams& p) {
    const auto c = phase_compute(r, p);
    return c.broadcast + c.pre_prepare + c.prepare + c.commit + c.reply;
}

ConsensusCost consensus_latency(const SubtaskSpec& s, int r, double rate,
                                const SystemParams& p) {
    if (!(rate > 0.0)) throw std::invalid_argument("consensus_latency: rate must be > 0");
    if (r < 0) throw std::invalid_argument("consensus_latency: r must be >= 0");
    const auto c = phase_compute(r, p);
    const double x = s.data_bits();
    const double block_tx = r * static_cast<double>(p.block_txs) * x / rate;
    ConsensusCost out;
    out.broadcast = x / rate + c.broadcast;
    out.pre_prepare = block_tx + c.pre_prepare;
    out.prepare = block_tx + c.prepare;
    out.commit = block_tx + c.commit;
    out.reply = block_tx + c.reply;
    out.total = out.broadcast + out.pre_prepare + out.prepare + out.commit + out.reply;
    return out;
}

}  // namespace brpco

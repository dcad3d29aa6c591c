#pragma once

#include <optional>
#include <string>
#include <vector>

#include "brpco/config.hpp"
#include "brpco/tasks.hpp"

namespace brpco {

struct RedundancyProfile {
    std::vector<int> r;     // r_f
    std::vector<int> beta;  // beta_f in {0, 1}

    std::size_t size() const { return r.size(); }
    // Replica count beta_f + r_f, the quantity the budget and redundancy limits constrain.
    int level(std::size_t f) const { return beta[f] + r[f]; }
};

// A level a in [r_min, r_max] stored as beta = [a < r_max], r = a - beta.
RedundancyProfile profile_from_levels(const std::vector<int>& levels, int r_max);
std::vector<int> levels_of(const RedundancyProfile& prof);

struct RedundancyViolation {
    enum class Kind { MaxRedundancy, Budget, BadFlag, BelowMin };
    Kind kind;
    std::size_t index;  // offending subtask; for Budget, the index where the running sum first exceeds P_BC
    std::string message;
};

std::optional<RedundancyViolation> check_redundancy(const RedundancyProfile& prof,
                                                     const std::vector<SubtaskSpec>& subtasks,
                                                     const SystemParams& p);

double bc_spend(const RedundancyProfile& prof, const std::vector<SubtaskSpec>& subtasks,
                double price_per_mb);

double mining_incentive(const SubtaskSpec& s, double incentive_per_mb);

struct ConsensusCost {
    double broadcast = 0.0;
    double pre_prepare = 0.0;
    double prepare = 0.0;
    double commit = 0.0;
    double reply = 0.0;
    double total = 0.0;
};

// Compute-only part of the five phases (no transmission terms); depends on
// the replica count through the broadcast validation term only.
double consensus_compute(int r, const SystemParams& p);

ConsensusCost consensus_latency(const SubtaskSpec& s, int r, double rate,
                                const SystemParams& p);

}  // namespace brpco

#pragma once

#include <vector>

#include "brpco/config.hpp"
#include "brpco/rng.hpp"

namespace brpco {

struct SubtaskSpec {
    double input_bits = 0.0;   // I_f
    double volume_bits = 0.0;  // V_f
    double cycles = 0.0;       // P_f

    double data_bits() const { return input_bits + volume_bits; }
    double volume_mb() const { return volume_bits / kBitsPerMB; }
    double data_mb() const { return data_bits() / kBitsPerMB; }
};

// tasks[f][v], f in [0, F), v in [0, V). Flat index f*V + v.
using TaskSet = std::vector<std::vector<SubtaskSpec>>;

TaskSet sample_tasks(const SystemParams& p, RngStream& rng);
std::vector<SubtaskSpec> flatten(const TaskSet& tasks);

// Per user: 0 = no request, f in 1..F = requests task f.
using RequestState = std::vector<int>;

using TransitionMatrix = std::vector<std::vector<double>>;

// Throws if the matrix is not square or a row is not stochastic within 1e-9.
void check_stochastic(const TransitionMatrix& m);

RequestState step_requests(const RequestState& current, const TransitionMatrix& m,
                           RngStream& rng);

}  // namespace brpco

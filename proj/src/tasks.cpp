#include "brpco/tasks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace brpco {

namespace {

void check_range(const Range& r, const char* name) {
    if (!(r.lo > 0.0) || !(r.hi >= r.lo))
        throw std::invalid_argument(std::string("sample_tasks: bad range for ") + name);
}

}  // namespace

TaskSet sample_tasks(const SystemParams& p, RngStream& rng) {
    check_range(p.input_bits, "input size");
    check_range(p.volume_bits, "software volume");
    check_range(p.load_cycles, "compute load");
    TaskSet tasks(p.num_tasks, std::vector<SubtaskSpec>(p.num_subtasks));
    for (auto& task : tasks) {
        for (auto& s : task) {
            s.input_bits = rng.uniform(p.input_bits.lo, p.input_bits.hi);
            s.volume_bits = rng.uniform(p.volume_bits.lo, p.volume_bits.hi);
            s.cycles = rng.uniform(p.load_cycles.lo, p.load_cycles.hi);
        }
    }
    return tasks;
}

std::vector<SubtaskSpec> flatten(const TaskSet& tasks) {
    std::vector<SubtaskSpec> out;
    for (const auto& t : tasks) out.insert(out.end(), t.begin(), t.end());
    return out;
}

void check_stochastic(const TransitionMatrix& m) {
    if (m.empty()) throw std::invalid_argument("transition matrix is empty");
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i].size() != m.size())
            throw std::invalid_argument("transition matrix is not square");
        double sum = 0.0;
        for (double x : m[i]) {
            if (!(x >= 0.0))
                throw std::invalid_argument("transition row " + std::to_string(i) +
                                            " has a negative entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("transition row " + std::to_string(i) +
                                        " is not stochastic");
    }
}

RequestState step_requests(const RequestState& current, const TransitionMatrix& m,
                           RngStream& rng) {
    check_stochastic(m);
    const int n = static_cast<int>(m.size());
    RequestState next(current.size());
    for (std::size_t k = 0; k < current.size(); ++k) {
        const int s = current[k];
        if (s < 0 || s >= n) throw std::invalid_argument("request state out of range");
        const auto& row = m[s];
        std::discrete_distribution<int> pick(row.begin(), row.end());
        next[k] = pick(rng.engine());
    }
    return next;
}

}  // namespace brpco

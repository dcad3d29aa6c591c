#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include <json.hpp>

#include "brpco/chain.hpp"
#include "brpco/config.hpp"
#include "brpco/rng.hpp"
#include "brpco/scaa_net.hpp"
#include "brpco/tasks.hpp"

namespace brpco {

// ---- state ------------------------------------------------------------

// Which of the four feature groups enter the per-user aggregate.
struct StateWeights {
    bool user_cpu = true;     // chi_0
    bool subtask = true;      // chi_1
    bool node_cpu = true;     // chi_2
    bool cache = true;        // chi_3
};

struct EncodedState {
    std::vector<double> per_user;  // S_{t,k}, summed over the user's subtasks
    std::vector<double> x;         // K*F request indicator, x[k*F + f-1] = 1 iff user k requests f
};

EncodedState encode_state(const RequestState& req, const TaskSet& tasks, const SystemParams& p,
                          const StateWeights& chi = {});
std::vector<double> request_indicator(const RequestState& req, int num_tasks);

// ---- action -----------------------------------------------------------

struct BrfAction {
    std::vector<int> levels;  // replica count per subtask, in [r_min, r_max]
    bool infeasible = false;  // even all-r_min exceeds the budget
    double objective = 0.0;   // sum u a V Theta at the chosen levels

    RedundancyProfile profile(int r_max) const { return profile_from_levels(levels, r_max); }
};

struct KnapsackSpec {
    std::vector<double> volume_mb;
    double price_per_mb = 1.0;
    double budget = 0.0;
    double quantum = 1.0;
    int r_min = 1;
    int r_max = 2;
    bool minimize = false;

    static KnapsackSpec from(const std::vector<SubtaskSpec>& subtasks, const SystemParams& p);
    int capacity() const;
    int weight(std::size_t f, int level) const;
};

BrfAction optimal_action(const ThetaVector& theta, const KnapsackSpec& ks);
// Exactly uniform over feasible level vectors (counting DP).
BrfAction random_feasible_action(const KnapsackSpec& ks, RngStream& rng);
std::vector<int> full_redundancy(std::size_t n, int r_max);

// Aggregation-layer weights: a positive rescaling of u a_f V_f.
std::vector<double> action_weights(const std::vector<int>& levels, const KnapsackSpec& ks);

// ---- reward -----------------------------------------------------------

double raw_reward(double cost_nonredundant, double cost_redundant, double incentive, double w1,
                  double w2);

class RunningNormalizer {
public:
    void update(double x);
    double normalize(double x) const;
    double mean() const { return mean_; }
    double variance() const { return count_ > 1 ? m2_ / (count_ - 1) : 0.0; }
    std::uint64_t count() const { return count_; }

    nlohmann::json to_json() const;
    static RunningNormalizer from_json(const nlohmann::json& j);

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// ---- replay -----------------------------------------------------------

struct Transition {
    std::vector<double> x;
    std::vector<double> action;  // aggregation weights of A_t
    double reward = 0.0;         // standardized
    std::vector<double> next_x;
    bool terminal = false;
};

class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return buf_.size(); }
    std::size_t capacity() const { return cap_; }
    const Transition& operator[](std::size_t i) const { return buf_[i]; }
    // With replacement.
    std::vector<const Transition*> sample(std::size_t n, RngStream& rng) const;

private:
    std::size_t cap_;
    std::deque<Transition> buf_;
};

double td_target(double reward, const ThetaVector& next_theta_target, const KnapsackSpec& ks,
                 double gamma, bool terminal);

double epsilon_at(std::uint64_t slot, std::uint64_t total_slots, const RlParams& rl);

// ---- agent ------------------------------------------------------------

class BrfEnvironment {
public:
    virtual ~BrfEnvironment() = default;
    virtual std::vector<double> observation() const = 0;
    struct Step {
        double reward = 0.0;  // raw
        std::vector<double> next_observation;
        bool terminal = false;
    };
    virtual Step step(const BrfAction& action) = 0;
};

struct EpochMetrics {
    std::vector<double> rewards;  // raw, per slot
    std::vector<double> losses;   // per learning step
    std::size_t constraint_violations = 0;
    std::size_t infeasible_actions = 0;
};

class BrfAgent {
public:
    BrfAgent(const SystemParams& p, const KnapsackSpec& ks, std::uint64_t seed);

    // Epsilon-greedy action from the main network.
    BrfAction select_action(const std::vector<double>& x, double eps);
    // Greedy action on the main network with dropout off.
    BrfAction infer(const std::vector<double>& x) const;

    // Stores the transition and, once one batch is available, takes a
    // gradient step. Returns the loss or NaN if no step was taken.
    double observe(const std::vector<double>& x, const BrfAction& a, double raw_reward,
                   const std::vector<double>& next_x, bool terminal);

    double current_epsilon() const;
    void set_schedule_length(std::uint64_t total_slots) { schedule_slots_ = total_slots; }

    const NetworkWeights& main_net() const { return main_; }
    const NetworkWeights& target_net() const { return target_; }
    NetworkWeights& mutable_main() { return main_; }
    const ReplayMemory& replay() const { return replay_; }
    const KnapsackSpec& knapsack() const { return ks_; }
    std::uint64_t slot() const { return slot_; }

    nlohmann::json checkpoint() const;
    void restore(const nlohmann::json& j);

private:
    SystemParams p_;
    KnapsackSpec ks_;
    NetworkWeights main_, target_;
    Optimizer opt_;
    ReplayMemory replay_;
    RunningNormalizer norm_;
    RngStream explore_rng_, dropout_rng_, replay_rng_;
    std::uint64_t slot_ = 0;
    std::uint64_t schedule_slots_ = 1;
};

// Trains over `slots` slots of `env`.
EpochMetrics train_epoch(BrfEnvironment& env, BrfAgent& agent, int slots,
                         const std::vector<SubtaskSpec>& subtasks, const SystemParams& p);

// Frozen-policy step: new levels and the update r_t = level_{t+1} - level_t.
struct PolicyUpdate {
    BrfAction action;
    std::vector<int> update;
};
PolicyUpdate infer_policy(const BrfAgent& agent, const std::vector<double>& x,
                          const std::vector<int>& current_levels);

}  // namespace brpco

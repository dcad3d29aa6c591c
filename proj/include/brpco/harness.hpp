#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "brpco/brf_agent.hpp"
#include "brpco/config.hpp"
#include "brpco/cost_model.hpp"
#include "brpco/pco_game.hpp"
#include "brpco/radio.hpp"
#include "brpco/rng.hpp"
#include "brpco/tasks.hpp"

namespace brpco {

enum class PolicyKind { Proposed, Opg, OpgRand, Mec, Random };

const char* policy_name(PolicyKind k);
PolicyKind parse_policy(const std::string& name);
std::vector<PolicyKind> parse_policies(const std::string& csv);
inline const std::vector<PolicyKind> kAllPolicies{PolicyKind::Proposed, PolicyKind::Opg,
                                                  PolicyKind::OpgRand, PolicyKind::Mec,
                                                  PolicyKind::Random};

struct SlotMetrics {
    int episode = 0;
    int slot = 0;
    PolicyKind policy = PolicyKind::Opg;
    double avg_cost = 0.0;
    double avg_latency = 0.0;
    double avg_energy = 0.0;
    double reward = 0.0;
    double bc_spend = 0.0;
    double incentive = 0.0;
    int deadline_violations = 0;
    double frac_local = 1.0;
    double frac_fin = 0.0;
    double frac_ein = 0.0;
    // Not emitted: diagnostics used by tests.
    double total_cost = 0.0;
    double total_cost_nonredundant = 0.0;
    int active_subtasks = 0;
    bool redundancy_ok = true;
    bool cache_ok = true;
    int game_iterations = 0;
    bool game_converged = true;
};

// The exogenous part of a slot, shared by every policy for a paired comparison.
struct ExoSlot {
    RequestState requests;
    ChannelState channel;
};

// Fixed per run: task catalogue and user positions. Per slot: requests
// (Markov chain) and fading.
class World {
public:
    World(const SystemParams& p, std::uint64_t seed);

    const SystemParams& params() const { return p_; }
    const TaskSet& tasks() const { return tasks_; }
    const std::vector<SubtaskSpec>& flat_tasks() const { return flat_; }
    const std::vector<double>& distances() const { return distances_; }

    // Independent slot process; `label` selects the substream (e.g. "train", "eval").
    class Process {
    public:
        Process(const World& w, std::uint64_t seed, const std::string& label);
        ExoSlot next();
        const RequestState& current_requests() const { return req_; }

    private:
        const World* w_;
        TransitionMatrix m_;
        RngStream req_rng_, fading_rng_;
        RequestState req_;
    };

private:
    SystemParams p_;
    TaskSet tasks_;
    std::vector<SubtaskSpec> flat_;
    std::vector<double> distances_;
};

// Per-policy mutable state carried across slots.
struct PolicyState {
    QueueState fin_q{Destination::Fin, {}};
    QueueState ein_q{Destination::Ein, {}};
    RngStream rng;
    std::vector<int> levels;  // current redundancy levels
};

PolicyState make_policy_state(const World& w, PolicyKind kind, std::uint64_t seed);

struct SlotResult {
    SlotMetrics metrics;
    DecisionProfile profile;
};

// Runs one slot for a policy with the given redundancy levels (used by
// Proposed, OPG, OPG-Rand). MEC and Random ignore `levels` beyond r_max.
SlotResult run_slot(const World& w, const ExoSlot& exo, PolicyKind kind, PolicyState& st,
                    const std::vector<int>& levels);

// Redundancy levels for a policy at the start of a slot; Proposed needs the agent.
std::vector<int> choose_levels(const World& w, PolicyKind kind, PolicyState& st,
                               const BrfAgent* agent, const std::vector<double>& prev_x);

// The agent's view of the world: Proposed's queues and the training process.
class TrainingEnv : public BrfEnvironment {
public:
    TrainingEnv(const World& w, std::uint64_t seed, int episode_slots);
    std::vector<double> observation() const override;
    Step step(const BrfAction& action) override;
    const SlotMetrics& last_metrics() const { return last_; }

private:
    const World* w_;
    World::Process proc_;
    PolicyState st_;
    std::vector<double> x_;
    int episode_slots_;
    long slot_ = 0;
    SlotMetrics last_;
};

struct ExperimentOptions {
    std::vector<PolicyKind> policies = kAllPolicies;
    int train_episodes = 0;
    int eval_episodes = 0;
    int episode_slots = 1;
    std::uint64_t seed = 1;
    std::optional<nlohmann::json> agent_checkpoint;  // skip training when set
    std::function<void(int episode, const EpochMetrics&)> on_train_episode;
};

struct ExperimentResult {
    std::vector<SlotMetrics> eval_rows;
    std::vector<SlotMetrics> train_rows;  // Proposed, per training slot
    std::size_t train_constraint_violations = 0;
    std::size_t train_actions = 0;
    nlohmann::json agent_checkpoint;
};

ExperimentResult run_experiment(const SystemParams& p, const ExperimentOptions& opt);

struct PolicySummary {
    double mean_cost = 0.0;
    double mean_reward = 0.0;
    double mean_latency = 0.0;
    double mean_frac_local = 0.0;
    std::size_t rows = 0;
};
PolicySummary summarize(const std::vector<SlotMetrics>& rows, PolicyKind kind);

inline constexpr const char* kCsvHeader =
    "episode,slot,policy,avg_cost,avg_latency,avg_energy,reward,bc_spend,incentive,"
    "deadline_violations,frac_local,frac_fin,frac_ein";

void write_csv(std::ostream& os, const std::vector<SlotMetrics>& rows);
void emit_csv(const std::vector<SlotMetrics>& rows, const std::string& path);
std::vector<SlotMetrics> read_csv(const std::string& path);

}  // namespace brpco

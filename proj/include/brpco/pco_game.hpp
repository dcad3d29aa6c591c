#pragma once

#include <vector>

#include "brpco/config.hpp"
#include "brpco/cost_model.hpp"
#include "brpco/radio.hpp"
#include "brpco/tasks.hpp"

namespace brpco {

// One user's requested task for the slot. Empty subtasks = no request.
struct UserJob {
    std::vector<SubtaskSpec> subtasks;
    std::vector<int> replicas;  // replica count used in consensus latency, per subtask
};

struct GameEnv {
    const SystemParams* p = nullptr;
    ChannelState cs;
    std::vector<UserJob> users;
    QueueState fin_q{Destination::Fin, {}};
    QueueState ein_q{Destination::Ein, {}};
    CostOptions opt;

    int num_users() const { return static_cast<int>(users.size()); }
    double signal(int k) const { return p->tx_power * cs.gain[k]; }
    const QueueState& queue(Destination d) const { return d == Destination::Fin ? fin_q : ein_q; }
};

// K rows; row k has one cell per subtask of user k's task.
using DecisionProfile = std::vector<std::vector<OffloadDecisionCell>>;

// 0 if all of the user's cells are local, otherwise the shared channel.
int user_channel(const std::vector<OffloadDecisionCell>& row);
ChannelAssignment channels_of(const DecisionProfile& prof);

// Cost of one subtask executed as `cell` by user k, given the channel
// assignment of everyone. Evaluated from the cost model directly.
ExecutionCost cell_cost(const GameEnv& env, int k, int v, const OffloadDecisionCell& cell,
                        const ChannelAssignment& ch);
double user_cost(const GameEnv& env, int k, const DecisionProfile& prof);

// Per-user offloading threshold lambda_k: the co-channel interference below
// which the user's best remote split beats running everything locally.
// kNeverOffload for users with no request or no beneficial remote option.
std::vector<double> user_thresholds(const GameEnv& env);

DecisionProfile init_profile(const GameEnv& env);

// Sum of omega * lambda over remote players; local users with a non-finite threshold are skipped.
double potential(const ChannelAssignment& ch, const std::vector<double>& omega,
                 const std::vector<double>& lambda);

struct BestResponse {
    std::vector<OffloadDecisionCell> cells;
    double cost = 0.0;
    bool infeasible = false;  // some subtask violates the deadline under this choice
};

BestResponse best_response(const GameEnv& env, int k, const DecisionProfile& prof);

struct GameOutcome {
    DecisionProfile profile;
    int iterations = 0;
    std::vector<double> potential_trace;  // entry 0 = initial profile
    std::vector<int> movers;
    std::vector<double> delta_cost;       // mover's cost change per update (negative)
    bool converged = false;
    bool is_ne = false;
    double pi = 0.0;                       // min over updates of potential drop / mover omega
    double bound = 0.0;
    std::vector<double> lambda;
};

GameOutcome run_to_ne(const GameEnv& env, DecisionProfile initial, int max_iters,
                      bool exhaustive_check);

// Every player's row is compared with local and all M x (3^V - 1) remote
// splits, costs evaluated through the cost model.
bool is_exhaustive_ne(const GameEnv& env, const DecisionProfile& prof);

double convergence_bound(int K, double omega_max, double omega_min, double lambda_max,
                         double lambda_min, double pi);

// Relative cost decrease below which an update is not an improvement.
inline constexpr double kImproveTol = 1e-10;

}  // namespace brpco

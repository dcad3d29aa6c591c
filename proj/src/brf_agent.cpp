#include "brpco/brf_agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace brpco {

// ---- state ------------------------------------------------------------

std::vector<double> request_indicator(const RequestState& req, int num_tasks) {
    std::vector<double> x(req.size() * static_cast<std::size_t>(num_tasks), 0.0);
    for (std::size_t k = 0; k < req.size(); ++k) {
        if (req[k] < 0 || req[k] > num_tasks) throw std::invalid_argument("request out of range");
        if (req[k] > 0) x[k * num_tasks + (req[k] - 1)] = 1.0;
    }
    return x;
}

EncodedState encode_state(const RequestState& req, const TaskSet& tasks, const SystemParams& p,
                          const StateWeights& chi) {
    EncodedState st;
    st.x = request_indicator(req, p.num_tasks);
    st.per_user.assign(req.size(), 0.0);
    const double cpu_max = std::max({p.cpu_local, p.cpu_fin, p.cpu_ein});
    const double cache_max = std::max(p.cache_fin, p.cache_ein);
    const double s0 = p.cpu_local / cpu_max;
    const double s2 = 0.5 * (p.cpu_fin + p.cpu_ein) / cpu_max;
    const double s3 = 0.5 * (p.cache_fin + p.cache_ein) / cache_max;
    for (std::size_t k = 0; k < req.size(); ++k) {
        if (req[k] == 0) continue;
        double sum = 0.0;
        for (const auto& s : tasks.at(req[k] - 1)) {
            const double s1 = (s.input_bits / p.input_bits.hi + s.volume_bits / p.volume_bits.hi +
                               s.cycles / p.load_cycles.hi) / 3.0;
            sum += (chi.user_cpu ? s0 : 0.0) + (chi.subtask ? s1 : 0.0) +
                   (chi.node_cpu ? s2 : 0.0) + (chi.cache ? s3 : 0.0);
        }
        st.per_user[k] = sum;
    }
    return st;
}

// ---- action -----------------------------------------------------------

KnapsackSpec KnapsackSpec::from(const std::vector<SubtaskSpec>& subtasks, const SystemParams& p) {
    KnapsackSpec ks;
    for (const auto& s : subtasks) ks.volume_mb.push_back(s.volume_mb());
    ks.price_per_mb = p.price_per_mb;
    ks.budget = p.bc_budget;
    ks.quantum = p.budget_quantum;
    ks.r_min = p.r_min;
    ks.r_max = p.r_max;
    ks.minimize = p.rl.knapsack_min;
    return ks;
}

int KnapsackSpec::capacity() const {
    // Budget beyond the all-r_max weight is slack; capping keeps the DP table small.
    long full = 0;
    for (std::size_t f = 0; f < volume_mb.size(); ++f) full += weight(f, r_max);
    const double c = std::floor(budget / quantum + 1e-9);
    return c >= static_cast<double>(full) ? static_cast<int>(full) : static_cast<int>(c);
}

int KnapsackSpec::weight(std::size_t f, int level) const {
    return static_cast<int>(std::ceil(price_per_mb * level * volume_mb[f] / quantum));
}

std::vector<int> full_redundancy(std::size_t n, int r_max) {
    return std::vector<int>(n, r_max);
}

namespace {

double objective_of(const std::vector<int>& levels, const ThetaVector& theta, const KnapsackSpec& ks) {
    double obj = 0.0;
    for (std::size_t f = 0; f < levels.size(); ++f)
        obj += ks.price_per_mb * levels[f] * ks.volume_mb[f] * theta[f];
    return obj;
}

bool min_load_fits(const KnapsackSpec& ks) {
    long total = 0;
    for (std::size_t f = 0; f < ks.volume_mb.size(); ++f) total += ks.weight(f, ks.r_min);
    return total <= ks.capacity();
}

}  // namespace

BrfAction optimal_action(const ThetaVector& theta, const KnapsackSpec& ks) {
    const std::size_t F = ks.volume_mb.size();
    if (theta.size() != F) throw std::invalid_argument("optimal_action: theta/volume length mismatch");
    BrfAction act;
    if (!min_load_fits(ks)) {
        act.levels.assign(F, ks.r_min);
        act.infeasible = true;
        act.objective = objective_of(act.levels, theta, ks);
        return act;
    }
    const int C = ks.capacity();
    const double sign = ks.minimize ? -1.0 : 1.0;
    const double none = -std::numeric_limits<double>::infinity();
    // best[c]: best signed objective of the items seen so far using weight <= c.
    std::vector<double> best(C + 1, 0.0), next(C + 1);
    std::vector<std::vector<int>> choice(F, std::vector<int>(C + 1, 0));
    for (std::size_t f = 0; f < F; ++f) {
        std::fill(next.begin(), next.end(), none);
        for (int c = 0; c <= C; ++c) {
            for (int a = ks.r_min; a <= ks.r_max; ++a) {
                const int w = ks.weight(f, a);
                if (w > c || best[c - w] == none) continue;
                const double val = best[c - w] + sign * ks.price_per_mb * a * ks.volume_mb[f] * theta[f];
                if (val > next[c]) {  // strict: ties keep the lower level
                    next[c] = val;
                    choice[f][c] = a;
                }
            }
        }
        std::swap(best, next);
    }
    act.levels.assign(F, ks.r_min);
    int c = C;
    for (std::size_t f = F; f-- > 0;) {
        const int a = choice[f][c];
        act.levels[f] = a;
        c -= ks.weight(f, a);
    }
    act.objective = objective_of(act.levels, theta, ks);
    return act;
}

BrfAction random_feasible_action(const KnapsackSpec& ks, RngStream& rng) {
    const std::size_t F = ks.volume_mb.size();
    BrfAction act;
    if (!min_load_fits(ks)) {
        act.levels.assign(F, ks.r_min);
        act.infeasible = true;
        return act;
    }
    const int C = ks.capacity();
    // ways[f][c]: number of level assignments for items f.. fitting in c.
    std::vector<std::vector<double>> ways(F + 1, std::vector<double>(C + 1, 0.0));
    std::fill(ways[F].begin(), ways[F].end(), 1.0);
    for (std::size_t f = F; f-- > 0;) {
        for (int c = 0; c <= C; ++c) {
            double n = 0.0;
            for (int a = ks.r_min; a <= ks.r_max; ++a) {
                const int w = ks.weight(f, a);
                if (w <= c) n += ways[f + 1][c - w];
            }
            ways[f][c] = n;
        }
    }
    act.levels.resize(F);
    int c = C;
    for (std::size_t f = 0; f < F; ++f) {
        double u = rng.uniform() * ways[f][c];
        int pick = -1;
        for (int a = ks.r_min; a <= ks.r_max; ++a) {
            const int w = ks.weight(f, a);
            if (w > c) continue;
            const double n = ways[f + 1][c - w];
            if (n <= 0.0) continue;
            pick = a;
            if (u < n) break;
            u -= n;
        }
        act.levels[f] = pick;
        c -= ks.weight(f, pick);
    }
    return act;
}

std::vector<double> action_weights(const std::vector<int>& levels, const KnapsackSpec& ks) {
    if (levels.size() != ks.volume_mb.size()) throw std::invalid_argument("action_weights: size mismatch");
    const double mean_v =
        std::accumulate(ks.volume_mb.begin(), ks.volume_mb.end(), 0.0) / ks.volume_mb.size();
    std::vector<double> w(levels.size());
    for (std::size_t f = 0; f < levels.size(); ++f)
        w[f] = levels[f] * ks.volume_mb[f] / (ks.r_max * mean_v);
    return w;
}

// ---- reward -----------------------------------------------------------

double raw_reward(double cost_nonredundant, double cost_redundant, double incentive, double w1,
                  double w2) {
    return w1 * (cost_nonredundant - cost_redundant) + w2 * incentive;
}

void RunningNormalizer::update(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
}

double RunningNormalizer::normalize(double x) const {
    const double var = variance();
    return var > 0.0 ? (x - mean_) / std::sqrt(var) : x - mean_;
}

nlohmann::json RunningNormalizer::to_json() const {
    return {{"count", count_}, {"mean", mean_}, {"m2", m2_}};
}

RunningNormalizer RunningNormalizer::from_json(const nlohmann::json& j) {
    RunningNormalizer n;
    n.count_ = j.at("count").get<std::uint64_t>();
    n.mean_ = j.at("mean").get<double>();
    n.m2_ = j.at("m2").get<double>();
    return n;
}

// ---- replay -----------------------------------------------------------

ReplayMemory::ReplayMemory(std::size_t capacity) : cap_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay: capacity must be >= 1");
}

void ReplayMemory::push(Transition t) {
    if (buf_.size() == cap_) buf_.pop_front();
    buf_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t n, RngStream& rng) const {
    if (buf_.empty()) throw std::logic_error("replay: sample from empty memory");
    std::vector<const Transition*> out(n);
    for (auto& t : out)
        t = &buf_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(buf_.size()) - 1))];
    return out;
}

double td_target(double reward, const ThetaVector& next_theta_target, const KnapsackSpec& ks,
                 double gamma, bool terminal) {
    if (terminal) return reward;
    KnapsackSpec maxing = ks;
    maxing.minimize = false;
    const BrfAction best = optimal_action(next_theta_target, maxing);
    return reward + gamma * q_value(next_theta_target, action_weights(best.levels, ks));
}

double epsilon_at(std::uint64_t slot, std::uint64_t total_slots, const RlParams& rl) {
    const double horizon = rl.eps_decay_frac * static_cast<double>(std::max<std::uint64_t>(total_slots, 1));
    if (horizon <= 0.0) return rl.eps_end;
    const double frac = std::min(1.0, static_cast<double>(slot) / horizon);
    return rl.eps_start + (rl.eps_end - rl.eps_start) * frac;
}

// ---- agent ------------------------------------------------------------

namespace {

std::vector<int> layer_sizes(const SystemParams& p) {
    std::vector<int> s{p.num_users * p.num_tasks};
    s.insert(s.end(), p.rl.hidden.begin(), p.rl.hidden.end());
    s.push_back(p.total_subtasks());
    return s;
}

}  // namespace

BrfAgent::BrfAgent(const SystemParams& p, const KnapsackSpec& ks, std::uint64_t seed)
    : p_(p),
      ks_(ks),
      replay_(static_cast<std::size_t>(p.rl.replay_capacity)),
      explore_rng_(seed, "exploration"),
      dropout_rng_(seed, "dropout"),
      replay_rng_(seed, "replay") {
    RngStream init_rng(seed, "init");
    main_ = init_network(layer_sizes(p), init_rng);
    target_ = sync_target(main_);
    opt_.lr = p.rl.lr;
    opt_.momentum = p.rl.momentum;
}

double BrfAgent::current_epsilon() const {
    return epsilon_at(slot_, schedule_slots_, p_.rl);
}

BrfAction BrfAgent::select_action(const std::vector<double>& x, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("select_action: eps not in [0,1]");
    if (explore_rng_.uniform() < eps) return random_feasible_action(ks_, explore_rng_);
    return infer(x);
}

BrfAction BrfAgent::infer(const std::vector<double>& x) const {
    return optimal_action(forward(main_, x), ks_);
}

double BrfAgent::observe(const std::vector<double>& x, const BrfAction& a, double raw,
                         const std::vector<double>& next_x, bool terminal) {
    double r = raw;
    if (p_.rl.standardize_reward) {
        norm_.update(raw);
        r = norm_.normalize(raw);
    }
    replay_.push({x, action_weights(a.levels, ks_), r, next_x, terminal});
    ++slot_;
    double loss = std::numeric_limits<double>::quiet_NaN();
    if (replay_.size() >= static_cast<std::size_t>(p_.rl.batch)) {
        const auto picks = replay_.sample(static_cast<std::size_t>(p_.rl.batch), replay_rng_);
        std::vector<TrainSample> batch;
        batch.reserve(picks.size());
        for (const Transition* t : picks) {
            const ThetaVector next_theta = forward(target_, t->next_x);
            batch.push_back({t->x, t->action, td_target(t->reward, next_theta, ks_, p_.rl.gamma, t->terminal)});
        }
        loss = train_step(main_, opt_, batch, p_.rl.huber_delta, p_.rl.dropout, &dropout_rng_);
    }
    if (slot_ % static_cast<std::uint64_t>(p_.rl.target_sync) == 0) target_ = sync_target(main_);
    return loss;
}

nlohmann::json BrfAgent::checkpoint() const {
    nlohmann::json j;
    j["version"] = kCheckpointVersion;
    j["main"] = to_json(main_);
    j["target"] = to_json(target_);
    j["optimizer"] = {{"lr", opt_.lr},
                      {"momentum", opt_.momentum},
                      {"velocity", opt_.velocity.layers.empty() ? nlohmann::json() : to_json(opt_.velocity)}};
    j["normalizer"] = norm_.to_json();
    j["rng"] = {{"exploration", explore_rng_.save_state()},
                {"dropout", dropout_rng_.save_state()},
                {"replay", replay_rng_.save_state()}};
    j["slot"] = slot_;
    j["schedule_slots"] = schedule_slots_;
    j["epsilon"] = current_epsilon();
    return j;
}

void BrfAgent::restore(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version");
    NetworkWeights main = network_from_json(j.at("main"));
    if (main.sizes() != main_.sizes()) throw std::runtime_error("checkpoint: network shape does not match config");
    main_ = std::move(main);
    target_ = network_from_json(j.at("target"));
    const auto& o = j.at("optimizer");
    opt_.lr = o.at("lr").get<double>();
    opt_.momentum = o.at("momentum").get<double>();
    opt_.velocity = o.at("velocity").is_null() ? NetworkWeights{} : network_from_json(o.at("velocity"));
    norm_ = RunningNormalizer::from_json(j.at("normalizer"));
    explore_rng_.load_state(j.at("rng").at("exploration").get<std::string>());
    dropout_rng_.load_state(j.at("rng").at("dropout").get<std::string>());
    replay_rng_.load_state(j.at("rng").at("replay").get<std::string>());
    slot_ = j.at("slot").get<std::uint64_t>();
    schedule_slots_ = j.at("schedule_slots").get<std::uint64_t>();
}

EpochMetrics train_epoch(BrfEnvironment& env, BrfAgent& agent, int slots,
                         const std::vector<SubtaskSpec>& subtasks, const SystemParams& p) {
    EpochMetrics m;
    for (int t = 0; t < slots; ++t) {
        const std::vector<double> x = env.observation();
        const BrfAction a = agent.select_action(x, agent.current_epsilon());
        if (a.infeasible) ++m.infeasible_actions;
        if (check_redundancy(a.profile(p.r_max), subtasks, p)) ++m.constraint_violations;
        const BrfEnvironment::Step s = env.step(a);
        m.rewards.push_back(s.reward);
        const double loss = agent.observe(x, a, s.reward, s.next_observation, s.terminal);
        if (!std::isnan(loss)) m.losses.push_back(loss);
    }
    return m;
}

PolicyUpdate infer_policy(const BrfAgent& agent, const std::vector<double>& x,
                          const std::vector<int>& current_levels) {
    PolicyUpdate pu;
    pu.action = agent.infer(x);
    if (current_levels.size() != pu.action.levels.size())
        throw std::invalid_argument("infer_policy: level vector size mismatch");
    pu.update.resize(current_levels.size());
    for (std::size_t f = 0; f < current_levels.size(); ++f)
        pu.update[f] = pu.action.levels[f] - current_levels[f];
    return pu;
}

}  // namespace brpco

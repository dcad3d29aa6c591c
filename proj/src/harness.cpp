#include "brpco/harness.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "brpco/chain.hpp"

namespace brpco {

const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::Proposed: return "Proposed";
        case PolicyKind::Opg: return "OPG";
        case PolicyKind::OpgRand: return "OPG-Rand";
        case PolicyKind::Mec: return "MEC";
        case PolicyKind::Random: return "Random";
    }
    return "?";
}

PolicyKind parse_policy(const std::string& name) {
    for (PolicyKind k : kAllPolicies)
        if (name == policy_name(k)) return k;
    throw std::invalid_argument("unknown policy: " + name);
}

std::vector<PolicyKind> parse_policies(const std::string& csv) {
    std::vector<PolicyKind> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(parse_policy(item));
    if (out.empty()) throw std::invalid_argument("no policies given");
    return out;
}

// ---- world ------------------------------------------------------------

World::World(const SystemParams& p, std::uint64_t seed) : p_(p) {
    validate(p_);
    RngStream task_rng(seed, "tasks");
    tasks_ = sample_tasks(p_, task_rng);
    flat_ = flatten(tasks_);
    RngStream topo_rng(seed, "topology");
    distances_ = sample_distances(p_, topo_rng);
}

World::Process::Process(const World& w, std::uint64_t seed, const std::string& label)
    : w_(&w),
      m_(w.params().transition_matrix()),
      req_rng_(seed, "requests:" + label),
      fading_rng_(seed, "fading:" + label) {
    check_stochastic(m_);
    req_.resize(w.params().num_users);
    for (auto& r : req_) r = static_cast<int>(req_rng_.uniform_int(0, w.params().num_tasks));
}

ExoSlot World::Process::next() {
    req_ = step_requests(req_, m_, req_rng_);
    return {req_, draw_channel_state(w_->distances(), w_->params(), fading_rng_)};
}

PolicyState make_policy_state(const World& w, PolicyKind kind, std::uint64_t seed) {
    PolicyState st;
    st.rng = RngStream(seed, std::string("policy:") + policy_name(kind));
    st.levels = full_redundancy(w.flat_tasks().size(), w.params().r_max);
    return st;
}

// ---- slot -------------------------------------------------------------

namespace {

GameEnv make_env(const World& w, const ExoSlot& exo, const PolicyState& st,
                 const std::vector<int>& levels) {
    const SystemParams& p = w.params();
    GameEnv env;
    env.p = &w.params();
    env.cs = exo.channel;
    env.fin_q = st.fin_q;
    env.ein_q = st.ein_q;
    env.opt = CostOptions::from(p);
    env.users.resize(exo.requests.size());
    for (std::size_t k = 0; k < exo.requests.size(); ++k) {
        const int f = exo.requests[k];
        if (f == 0) continue;
        env.users[k].subtasks = w.tasks()[f - 1];
        for (int v = 0; v < p.num_subtasks; ++v)
            env.users[k].replicas.push_back(levels.at(static_cast<std::size_t>(f - 1) * p.num_subtasks + v));
    }
    return env;
}

DecisionProfile solve_game(const GameEnv& env, int* iterations = nullptr, bool* converged = nullptr) {
    const GameOutcome g = run_to_ne(env, init_profile(env), 100000, false);
    if (iterations) *iterations = g.iterations;
    if (converged) *converged = g.converged;
    return g.profile;
}

double profile_cost(const GameEnv& env, const DecisionProfile& prof) {
    const ChannelAssignment ch = channels_of(prof);
    double total = 0.0;
    for (int k = 0; k < env.num_users(); ++k)
        for (std::size_t v = 0; v < prof[k].size(); ++v)
            total += cell_cost(env, k, static_cast<int>(v), prof[k][v], ch).cost;
    return total;
}

// Single MEC server at EIN distance: each user takes the least-loaded
// channel, then offloads a subtask when the cache gate admits it and remote
// execution is cheaper and on time.
DecisionProfile decide_mec(const GameEnv& env) {
    const SystemParams& p = *env.p;
    DecisionProfile prof(env.users.size());
    std::vector<double> chan_load(p.num_channels + 1, 0.0);
    double cache_used = 0.0;
    for (int k = 0; k < env.num_users(); ++k) {
        const auto& job = env.users[k];
        prof[k].assign(job.subtasks.size(), OffloadDecisionCell{});
        if (job.subtasks.empty()) continue;
        int m = 1;
        for (int c = 2; c <= p.num_channels; ++c)
            if (chan_load[c] < chan_load[m]) m = c;
        const double rate = rate_from_sinr(env.signal(k), chan_load[m], p);
        bool any = false;
        for (std::size_t v = 0; v < job.subtasks.size(); ++v) {
            const SubtaskSpec& s = job.subtasks[v];
            if (cache_used + s.volume_bits > p.cache_ein) continue;
            const ExecutionCost rc = ein_cost(s, rate, job.replicas[v], env.ein_q, p, env.opt);
            if (rc.delay > p.deadline || rc.cost >= local_cost(s, p).cost) continue;
            prof[k][v] = {m, Destination::Ein};
            cache_used += s.volume_bits;
            any = true;
        }
        if (any) chan_load[m] += env.signal(k);
    }
    return prof;
}

DecisionProfile decide_random(const GameEnv& env, RngStream& rng) {
    const SystemParams& p = *env.p;
    DecisionProfile prof(env.users.size());
    for (int k = 0; k < env.num_users(); ++k) {
        const auto& job = env.users[k];
        prof[k].assign(job.subtasks.size(), OffloadDecisionCell{});
        if (job.subtasks.empty()) continue;
        const int m = static_cast<int>(rng.uniform_int(1, p.num_channels));
        for (auto& c : prof[k]) {
            const int o = static_cast<int>(rng.uniform_int(0, 2));
            if (o == 1) c = {m, Destination::Fin};
            if (o == 2) c = {m, Destination::Ein};
        }
    }
    return prof;
}

}  // namespace

std::vector<int> choose_levels(const World& w, PolicyKind kind, PolicyState& st,
                               const BrfAgent* agent, const std::vector<double>& prev_x) {
    const SystemParams& p = w.params();
    switch (kind) {
        case PolicyKind::Proposed:
            if (!agent) throw std::logic_error("Proposed policy needs an agent");
            return agent->infer(prev_x).levels;
        case PolicyKind::OpgRand:
            return random_feasible_action(KnapsackSpec::from(w.flat_tasks(), p), st.rng).levels;
        case PolicyKind::Opg:
        case PolicyKind::Mec:
        case PolicyKind::Random:
            break;
    }
    return full_redundancy(w.flat_tasks().size(), p.r_max);
}

SlotResult run_slot(const World& w, const ExoSlot& exo, PolicyKind kind, PolicyState& st,
                    const std::vector<int>& levels_in) {
    const SystemParams& p = w.params();
    const bool fixed_full = kind == PolicyKind::Opg || kind == PolicyKind::Mec || kind == PolicyKind::Random;
    const std::vector<int> levels =
        fixed_full ? full_redundancy(w.flat_tasks().size(), p.r_max) : levels_in;
    if (levels.size() != w.flat_tasks().size()) throw std::invalid_argument("run_slot: level vector size");
    st.levels = levels;

    const GameEnv env = make_env(w, exo, st, levels);
    SlotResult res;
    SlotMetrics& m = res.metrics;
    m.policy = kind;
    switch (kind) {
        case PolicyKind::Mec: res.profile = decide_mec(env); break;
        case PolicyKind::Random: res.profile = decide_random(env, st.rng); break;
        default: res.profile = solve_game(env, &m.game_iterations, &m.game_converged); break;
    }
    const DecisionProfile& prof = res.profile;
    const ChannelAssignment ch = channels_of(prof);

    int n_local = 0, n_fin = 0, n_ein = 0;
    double lat = 0.0, energy = 0.0, cost = 0.0, incentive = 0.0;
    std::array<double, 2> cache_load{0.0, 0.0};
    std::vector<std::pair<Destination, double>> arrivals;
    for (int k = 0; k < env.num_users(); ++k) {
        const auto& job = env.users[k];
        for (std::size_t v = 0; v < job.subtasks.size(); ++v) {
            const OffloadDecisionCell& c = prof[k][v];
            const ExecutionCost e = cell_cost(env, k, static_cast<int>(v), c, ch);
            lat += e.delay;
            energy += e.energy;
            cost += e.cost;
            if (e.delay > p.deadline) ++m.deadline_violations;
            if (!c.remote()) {
                ++n_local;
                continue;
            }
            const SubtaskSpec& s = job.subtasks[v];
            (c.dest == Destination::Fin ? n_fin : n_ein)++;
            incentive += mining_incentive(s, p.incentive_per_mb);
            cache_load[static_cast<int>(c.dest)] += s.volume_bits;
            double interf = 0.0;
            for (int n = 0; n < env.num_users(); ++n)
                if (n != k && ch[n] == c.mode) interf += env.signal(n);
            const double rate = rate_from_sinr(env.signal(k), interf, p);
            arrivals.emplace_back(c.dest, service_time(s, rate, dest_cpu(c.dest, p)));
        }
    }
    const int active = n_local + n_fin + n_ein;
    m.active_subtasks = active;
    if (active > 0) {
        m.avg_cost = cost / active;
        m.avg_latency = lat / active;
        m.avg_energy = energy / active;
        m.frac_local = static_cast<double>(n_local) / active;
        m.frac_fin = static_cast<double>(n_fin) / active;
        m.frac_ein = static_cast<double>(n_ein) / active;
    }
    m.total_cost = cost;
    m.incentive = incentive;
    m.cache_ok = cache_load[0] <= p.cache_fin && cache_load[1] <= p.cache_ein;

    const RedundancyProfile rp = profile_from_levels(levels, p.r_max);
    m.bc_spend = bc_spend(rp, w.flat_tasks(), p.price_per_mb);
    m.redundancy_ok = !check_redundancy(rp, w.flat_tasks(), p).has_value();

    // C^O: the same slot with full redundancy.
    const bool all_full = std::all_of(levels.begin(), levels.end(), [&](int a) { return a == p.r_max; });
    if (all_full) {
        m.total_cost_nonredundant = cost;
    } else {
        const GameEnv env_o = make_env(w, exo, st, full_redundancy(levels.size(), p.r_max));
        m.total_cost_nonredundant =
            profile_cost(env_o, p.rl.hold_decisions ? prof : solve_game(env_o));
    }
    m.reward = raw_reward(m.total_cost_nonredundant, cost, incentive, p.reward_w1, p.reward_w2);

    if (p.queue_enabled) {
        for (const auto& [d, s] : arrivals) (d == Destination::Fin ? st.fin_q : st.ein_q).push(s);
        st.fin_q.drain(p.slot_duration);
        st.ein_q.drain(p.slot_duration);
    }
    return res;
}

// ---- training env -----------------------------------------------------

TrainingEnv::TrainingEnv(const World& w, std::uint64_t seed, int episode_slots)
    : w_(&w),
      proc_(w, seed, "train"),
      st_(make_policy_state(w, PolicyKind::Proposed, seed)),
      x_(request_indicator(proc_.current_requests(), w.params().num_tasks)),
      episode_slots_(episode_slots) {}

std::vector<double> TrainingEnv::observation() const { return x_; }

BrfEnvironment::Step TrainingEnv::step(const BrfAction& action) {
    const ExoSlot exo = proc_.next();
    SlotResult res = run_slot(*w_, exo, PolicyKind::Proposed, st_, action.levels);
    res.metrics.episode = static_cast<int>(slot_ / episode_slots_);
    res.metrics.slot = static_cast<int>(slot_ % episode_slots_);
    ++slot_;
    last_ = res.metrics;
    x_ = request_indicator(exo.requests, w_->params().num_tasks);
    return {res.metrics.reward, x_, false};
}

// ---- experiment -------------------------------------------------------

ExperimentResult run_experiment(const SystemParams& p, const ExperimentOptions& opt) {
    if (opt.episode_slots < 1) throw std::invalid_argument("episode_slots must be >= 1");
    ExperimentResult out;
    const World w(p, opt.seed);
    const bool want_agent =
        std::find(opt.policies.begin(), opt.policies.end(), PolicyKind::Proposed) != opt.policies.end();
    std::unique_ptr<BrfAgent> agent;
    if (want_agent) {
        agent = std::make_unique<BrfAgent>(p, KnapsackSpec::from(w.flat_tasks(), p), opt.seed);
        if (opt.agent_checkpoint) {
            agent->restore(*opt.agent_checkpoint);
        } else if (opt.train_episodes > 0) {
            TrainingEnv env(w, opt.seed, opt.episode_slots);
            agent->set_schedule_length(static_cast<std::uint64_t>(opt.train_episodes) * opt.episode_slots);
            for (int e = 0; e < opt.train_episodes; ++e) {
                EpochMetrics em;
                for (int s = 0; s < opt.episode_slots; ++s) {
                    EpochMetrics one = train_epoch(env, *agent, 1, w.flat_tasks(), p);
                    em.rewards.insert(em.rewards.end(), one.rewards.begin(), one.rewards.end());
                    em.losses.insert(em.losses.end(), one.losses.begin(), one.losses.end());
                    em.constraint_violations += one.constraint_violations;
                    em.infeasible_actions += one.infeasible_actions;
                    out.train_rows.push_back(env.last_metrics());
                }
                out.train_constraint_violations += em.constraint_violations;
                out.train_actions += static_cast<std::size_t>(opt.episode_slots);
                if (opt.on_train_episode) opt.on_train_episode(e, em);
            }
        }
        out.agent_checkpoint = agent->checkpoint();
    }

    World::Process proc(w, opt.seed, "eval");
    std::vector<PolicyState> states;
    for (PolicyKind k : opt.policies) states.push_back(make_policy_state(w, k, opt.seed));
    std::vector<double> prev_x = request_indicator(proc.current_requests(), p.num_tasks);
    for (int e = 0; e < opt.eval_episodes; ++e) {
        for (int s = 0; s < opt.episode_slots; ++s) {
            const ExoSlot exo = proc.next();
            for (std::size_t i = 0; i < opt.policies.size(); ++i) {
                const PolicyKind kind = opt.policies[i];
                const std::vector<int> levels = choose_levels(w, kind, states[i], agent.get(), prev_x);
                SlotResult r = run_slot(w, exo, kind, states[i], levels);
                r.metrics.episode = e;
                r.metrics.slot = s;
                out.eval_rows.push_back(r.metrics);
            }
            prev_x = request_indicator(exo.requests, p.num_tasks);
        }
    }
    return out;
}

PolicySummary summarize(const std::vector<SlotMetrics>& rows, PolicyKind kind) {
    PolicySummary s;
    for (const auto& r : rows) {
        if (r.policy != kind) continue;
        s.mean_cost += r.avg_cost;
        s.mean_reward += r.reward;
        s.mean_latency += r.avg_latency;
        s.mean_frac_local += r.frac_local;
        ++s.rows;
    }
    if (s.rows > 0) {
        const double n = static_cast<double>(s.rows);
        s.mean_cost /= n;
        s.mean_reward /= n;
        s.mean_latency /= n;
        s.mean_frac_local /= n;
    }
    return s;
}

// ---- csv --------------------------------------------------------------

void write_csv(std::ostream& os, const std::vector<SlotMetrics>& rows) {
    os << kCsvHeader << '\n';
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.9f,%.9f,%.9f,%.9f,%.9f,%.9f,%d,%.9f,%.9f,%.9f\n",
                      r.episode, r.slot, policy_name(r.policy), r.avg_cost, r.avg_latency,
                      r.avg_energy, r.reward, r.bc_spend, r.incentive, r.deadline_violations,
                      r.frac_local, r.frac_fin, r.frac_ein);
        os << buf;
    }
}

void emit_csv(const std::vector<SlotMetrics>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out, rows);
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<SlotMetrics> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line != kCsvHeader) throw std::runtime_error("unexpected CSV header in " + path);
    std::vector<SlotMetrics> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != 13) throw std::runtime_error("malformed CSV row: " + line);
        SlotMetrics m;
        m.episode = std::stoi(f[0]);
        m.slot = std::stoi(f[1]);
        m.policy = parse_policy(f[2]);
        m.avg_cost = std::stod(f[3]);
        m.avg_latency = std::stod(f[4]);
        m.avg_energy = std::stod(f[5]);
        m.reward = std::stod(f[6]);
        m.bc_spend = std::stod(f[7]);
        m.incentive = std::stod(f[8]);
        m.deadline_violations = std::stoi(f[9]);
        m.frac_local = std::stod(f[10]);
        m.frac_fin = std::stod(f[11]);
        m.frac_ein = std::stod(f[12]);
        rows.push_back(m);
    }
    return rows;
}

}  // namespace brpco

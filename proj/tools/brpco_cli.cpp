#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "acceptance.hpp"
#include "brpco/config.hpp"
#include "brpco/harness.hpp"
#include "brpco/pco_game.hpp"

namespace fs = std::filesystem;
using namespace brpco;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> episodes;
    std::optional<int> slots;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML config file (defaults when omitted)");
    cmd->add_option("--seed", c.seed, "Overrides the config seed");
    cmd->add_option("--out-dir", c.out_dir, "Output directory");
    cmd->add_option("--slots", c.slots, "Slots per episode");
}

SystemParams load(const Common& c) {
    SystemParams p = c.config.empty() ? load_config_string("") : load_config(c.config);
    if (c.seed) p.seed = *c.seed;
    if (c.slots) p.episode_slots = *c.slots;
    validate(p);
    return p;
}

fs::path out_path(const Common& c, const std::string& name) {
    fs::create_directories(c.out_dir);
    return fs::path(c.out_dir) / name;
}

void print_summary(const std::vector<SlotMetrics>& rows, const std::vector<PolicyKind>& policies) {
    std::printf("%-10s %12s %12s %12s %10s\n", "policy", "mean_cost", "mean_reward", "latency", "local");
    for (PolicyKind k : policies) {
        const PolicySummary s = summarize(rows, k);
        std::printf("%-10s %12.4f %12.4f %12.4f %10.4f\n", policy_name(k), s.mean_cost, s.mean_reward,
                    s.mean_latency, s.mean_frac_local);
    }
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return nlohmann::json::parse(in);
}

int cmd_train(const Common& c) {
    SystemParams p = load(c);
    ExperimentOptions opt;
    opt.policies = {PolicyKind::Proposed};
    opt.train_episodes = c.episodes.value_or(p.train_episodes);
    opt.eval_episodes = 0;
    opt.episode_slots = p.episode_slots;
    opt.seed = p.seed;
    opt.on_train_episode = [&](int e, const EpochMetrics& m) {
        if ((e + 1) % 100 != 0) return;
        double r = 0.0;
        for (double x : m.rewards) r += x;
        std::fprintf(stderr, "episode %d reward %.4f\n", e + 1, r / std::max<std::size_t>(1, m.rewards.size()));
    };
    const ExperimentResult res = run_experiment(p, opt);
    const fs::path ckpt = out_path(c, "agent.json");
    std::ofstream(ckpt) << res.agent_checkpoint.dump() << '\n';
    emit_csv(res.train_rows, out_path(c, "train.csv").string());
    std::printf("trained %d episodes, %zu constraint violations; checkpoint %s\n", opt.train_episodes,
                res.train_constraint_violations, ckpt.string().c_str());
    return 0;
}

int cmd_eval(const Common& c, const std::string& policies, const std::string& checkpoint,
             std::optional<int> train_episodes) {
    SystemParams p = load(c);
    ExperimentOptions opt;
    opt.policies = parse_policies(policies);
    opt.train_episodes = train_episodes.value_or(p.train_episodes);
    opt.eval_episodes = c.episodes.value_or(p.eval_episodes);
    opt.episode_slots = p.episode_slots;
    opt.seed = p.seed;
    if (!checkpoint.empty()) opt.agent_checkpoint = read_json(checkpoint);
    const ExperimentResult res = run_experiment(p, opt);
    const fs::path csv = out_path(c, "eval.csv");
    emit_csv(res.eval_rows, csv.string());
    print_summary(res.eval_rows, opt.policies);
    return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& values,
              const std::string& policies) {
    const SystemParams base = load(c);
    const std::vector<PolicyKind> kinds = parse_policies(policies);
    std::ofstream summary(out_path(c, "sweep_" + param + ".csv"));
    summary << "param,value,policy,mean_cost,mean_reward,mean_latency,mean_frac_local\n";
    for (double v : values) {
        SystemParams p = base;
        if (param == "r_max") p.r_max = static_cast<int>(v);
        else if (param == "users") p.num_users = static_cast<int>(v);
        else if (param == "subtasks") p.num_subtasks = static_cast<int>(v);
        else throw std::invalid_argument("sweep: --param must be r_max, users or subtasks");
        validate(p);
        ExperimentOptions opt;
        opt.policies = kinds;
        opt.train_episodes = p.train_episodes;
        opt.eval_episodes = c.episodes.value_or(p.eval_episodes);
        opt.episode_slots = p.episode_slots;
        opt.seed = p.seed;
        const ExperimentResult res = run_experiment(p, opt);
        const std::string tag = param + "_" + std::to_string(static_cast<long>(v));
        emit_csv(res.eval_rows, out_path(c, "eval_" + tag + ".csv").string());
        std::printf("%s = %g\n", param.c_str(), v);
        print_summary(res.eval_rows, kinds);
        for (PolicyKind k : kinds) {
            const PolicySummary s = summarize(res.eval_rows, k);
            char buf[256];
            std::snprintf(buf, sizeof buf, "%s,%g,%s,%.9f,%.9f,%.9f,%.9f\n", param.c_str(), v,
                          policy_name(k), s.mean_cost, s.mean_reward, s.mean_latency, s.mean_frac_local);
            summary << buf;
        }
    }
    return 0;
}

int cmd_ne_demo(const Common& c) {
    SystemParams p = load(c);
    const World w(p, p.seed);
    World::Process proc(w, p.seed, "ne-demo");
    const ExoSlot exo = proc.next();
    GameEnv env;
    env.p = &w.params();
    env.cs = exo.channel;
    env.opt = CostOptions::from(p);
    env.users.resize(exo.requests.size());
    for (std::size_t k = 0; k < exo.requests.size(); ++k) {
        const int f = exo.requests[k];
        if (f == 0) continue;
        env.users[k].subtasks = w.tasks()[f - 1];
        env.users[k].replicas.assign(p.num_subtasks, p.r_max);
    }
    const GameOutcome g = run_to_ne(env, init_profile(env), 100000, true);
    std::ofstream out(out_path(c, "ne_trace.csv"));
    out << "iteration,potential,mover,delta_cost\n";
    char buf[128];
    for (std::size_t i = 0; i < g.potential_trace.size(); ++i) {
        const int mover = i == 0 ? -1 : g.movers[i - 1];
        const double dc = i == 0 ? 0.0 : g.delta_cost[i - 1];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g\n", i, g.potential_trace[i], mover, dc);
        out << buf;
    }
    std::printf("iterations %d, converged %d, NE %d, bound %.6g\n", g.iterations, g.converged ? 1 : 0,
                g.is_ne ? 1 : 0, g.bound);
    return g.is_ne ? 0 : 1;
}

int cmd_selftest() {
    bool ok = true;
    for (const auto& r : {acceptance::knapsack_optimality(), acceptance::ne_convergence(),
                          acceptance::ordinal_potential(), acceptance::gradient_check()}) {
        std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Redundancy-aware blockchain offloading simulator"};
    app.require_subcommand(1);

    Common train_c, eval_c, sweep_c, ne_c;
    auto* train = app.add_subcommand("train", "Train the redundancy agent and write a checkpoint");
    add_common(train, train_c);
    train->add_option("--episodes", train_c.episodes, "Training episodes");

    auto* eval = app.add_subcommand("eval", "Frozen policy comparison");
    add_common(eval, eval_c);
    std::string eval_policies = "Proposed,OPG,OPG-Rand,MEC,Random", checkpoint;
    std::optional<int> eval_train;
    eval->add_option("--policies", eval_policies, "Comma-separated policy list");
    eval->add_option("--episodes", eval_c.episodes, "Evaluation episodes");
    eval->add_option("--train-episodes", eval_train, "Training episodes when no checkpoint is given");
    eval->add_option("--checkpoint", checkpoint, "Agent checkpoint from `train`");

    auto* sweep = app.add_subcommand("sweep", "Train and evaluate over a parameter grid");
    add_common(sweep, sweep_c);
    std::string sweep_param = "r_max", sweep_policies = "Proposed,OPG";
    std::vector<double> sweep_values{5, 10, 20, 30};
    sweep->add_option("--param", sweep_param, "r_max, users or subtasks");
    sweep->add_option("--values", sweep_values, "Grid values");
    sweep->add_option("--policies", sweep_policies, "Comma-separated policy list");
    sweep->add_option("--episodes", sweep_c.episodes, "Evaluation episodes per point");

    auto* ne = app.add_subcommand("ne-demo", "Solve one slot's offloading game and dump the potential trace");
    add_common(ne, ne_c);

    app.add_subcommand("selftest", "Run the property suites");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*train) return cmd_train(train_c);
        if (*eval) return cmd_eval(eval_c, eval_policies, checkpoint, eval_train);
        if (*sweep) return cmd_sweep(sweep_c, sweep_param, sweep_values, sweep_policies);
        if (*ne) return cmd_ne_demo(ne_c);
        return cmd_selftest();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

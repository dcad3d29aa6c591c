#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "brpco/pco_game.hpp"
#include "oracles.hpp"

using namespace brpco;

namespace {

// A user whose single subtask gains from offloading by a clear margin.
UserJob offload_friendly() {
    return UserJob{{SubtaskSpec{20 * kBitsPerKB, 20 * kBitsPerKB, 4e9}}, {2}};
}

GameEnv small_env(const SystemParams& p, const std::vector<double>& distances) {
    GameEnv env;
    env.p = &p;
    env.opt = CostOptions::from(p);
    env.cs.distance = distances;
    for (double d : distances) {
        env.cs.fading.push_back(1.0);
        env.cs.gain.push_back(channel_gain(d, 1.0, p.path_loss_exp));
    }
    env.users.assign(distances.size(), offload_friendly());
    return env;
}

DecisionProfile profile_on(const GameEnv& env, const std::vector<int>& channels) {
    DecisionProfile prof(env.users.size());
    for (std::size_t k = 0; k < env.users.size(); ++k)
        prof[k].assign(env.users[k].subtasks.size(), OffloadDecisionCell{channels[k], Destination::Fin});
    return prof;
}

int sgn(double x, double tol) { return x > tol ? 1 : (x < -tol ? -1 : 0); }

}  // namespace

TEST_CASE("potential examples") {
    CHECK(potential({0, 0}, {1, 2}, {3, 4}) == doctest::Approx(11.0));
    CHECK(potential({1, 1}, {1, 2}, {3, 4}) == doctest::Approx(2.0));
    CHECK(potential({2}, {1}, {3}) == 0.0);
    CHECK(potential({1, 2}, {1, 2}, {3, 4}) == 0.0);
    CHECK_THROWS_AS(potential({1}, {1, 2}, {3, 4}), std::invalid_argument);
}

TEST_CASE("convergence bound examples") {
    CHECK(convergence_bound(2, 1, 1, 1, 1, 1) == doctest::Approx(2.0));
    const double b4 = convergence_bound(4, 1, 1, 1, 1, 1);
    CHECK(b4 == doctest::Approx(8.0));
    CHECK(b4 / convergence_bound(2, 1, 1, 1, 1, 1) == doctest::Approx(4.0));
    CHECK(convergence_bound(6, 2.5, 2.5, 0.7, 0.7, 0.3) == doctest::Approx(36 * 2.5 / (2 * 0.3)));
    CHECK_THROWS_AS(convergence_bound(2, 1, 0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(convergence_bound(2, 1, 1, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("init profile case split") {
    SystemParams p;
    GameEnv env = small_env(p, {10.0, 20.0});
    // Tiny volume makes the local efficiency dominate.
    env.users[0].subtasks[0].volume_bits = 1.0;
    // Huge volume: with the default CPUs and caches L_FIN > L_EIN.
    env.users[1].subtasks[0].volume_bits = 1e30;
    DecisionProfile prof = init_profile(env);
    CHECK(user_channel(prof[0]) == 0);
    CHECK(user_channel(prof[1]) == 1);
    CHECK(prof[1][0].dest == Destination::Fin);

    SystemParams ein_side = p;
    ein_side.cpu_ein = 1e9;
    ein_side.cache_ein = 1.0;
    GameEnv e2 = small_env(ein_side, {10.0, 20.0});
    for (auto& u : e2.users) u.subtasks[0].volume_bits = 1e30;
    prof = init_profile(e2);
    CHECK(prof[0][0].dest == Destination::Ein);
    // Round-robin channels.
    CHECK(user_channel(prof[0]) == 1);
    CHECK(user_channel(prof[1]) == 2);
}

TEST_CASE("user_channel rejects mixed channels") {
    std::vector<OffloadDecisionCell> row{{1, Destination::Fin}, {2, Destination::Ein}};
    CHECK_THROWS(user_channel(row));
    row[1].mode = 1;
    CHECK(user_channel(row) == 1);
    CHECK(user_channel({{0, Destination::Fin}}) == 0);
}

TEST_CASE("best response: crowded channels push a user local") {
    SystemParams p;
    p.num_channels = 2;
    p.queue_enabled = false;
    // Users 1-2 are very close to the FIN and blast interference on both channels.
    GameEnv env = small_env(p, {80.0, 1.0, 1.0});
    const auto lam = user_thresholds(env);
    REQUIRE(std::isfinite(lam[0]));
    REQUIRE(lam[0] > 0.0);
    REQUIRE(p.tx_power * env.cs.gain[1] > lam[0]);
    const DecisionProfile prof = profile_on(env, {0, 1, 2});
    const BestResponse br = best_response(env, 0, prof);
    CHECK(user_channel(br.cells) == 0);
    CHECK(br.cost == doctest::Approx(oracle::all_local_cost(env, 0)));
}

TEST_CASE("best response: a free channel is taken") {
    SystemParams p;
    p.num_channels = 2;
    p.queue_enabled = false;
    GameEnv env = small_env(p, {80.0, 1.0});
    const DecisionProfile prof = profile_on(env, {0, 1});
    const BestResponse br = best_response(env, 0, prof);
    CHECK(user_channel(br.cells) == 2);
    CHECK(br.cost < oracle::all_local_cost(env, 0));
    CHECK(br.cost == doctest::Approx(oracle::best_remote_cost(env, 0, 2, prof)).epsilon(1e-12));
}

TEST_CASE("best response: FIN wins cost ties and the lowest channel wins") {
    SystemParams p;
    p.cpu_ein = p.cpu_fin;
    p.queue_enabled = false;
    GameEnv env = small_env(p, {50.0});
    const BestResponse br = best_response(env, 0, profile_on(env, {0}));
    REQUIRE(user_channel(br.cells) == 1);
    CHECK(br.cells[0].dest == Destination::Fin);
}

TEST_CASE("thresholds mark the indifference point of the best split") {
    RngStream rng(31, "lambda");
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        oracle::Instance inst;
        oracle::make_instance(inst, {6, 3, 3}, rng);
        const GameEnv& env = inst.env;
        const auto lam = user_thresholds(env);
        for (int k = 0; k < env.num_users(); ++k) {
            if (!std::isfinite(lam[k]) || lam[k] <= 0.0) continue;
            for (double scale : {0.99, 1.01}) {
                // Add a one-subtask interferer on channel 1 with rho*eta = scale * lambda_k.
                GameEnv probe = env;
                probe.users.push_back(UserJob{{SubtaskSpec{1, 1, 1}}, {1}});
                probe.cs.distance.push_back(1.0);
                probe.cs.fading.push_back(1.0);
                probe.cs.gain.push_back(lam[k] * scale / inst.params.tx_power);
                DecisionProfile prof(probe.users.size());
                for (int j = 0; j < probe.num_users(); ++j)
                    prof[j].assign(probe.users[j].subtasks.size(), OffloadDecisionCell{});
                prof[k].assign(prof[k].size(), OffloadDecisionCell{1, Destination::Fin});
                prof.back()[0] = OffloadDecisionCell{1, Destination::Fin};
                const double remote = oracle::best_remote_cost(probe, k, 1, prof);
                const double local = oracle::all_local_cost(probe, k);
                if (scale < 1.0)
                    CHECK(remote < local);
                else
                    CHECK(remote > local);
            }
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("single player converges in at most one update") {
    SystemParams p;
    p.queue_enabled = false;
    GameEnv env = small_env(p, {40.0});
    const GameOutcome out = run_to_ne(env, init_profile(env), 100, true);
    CHECK(out.converged);
    CHECK(out.is_ne);
    CHECK(out.iterations <= 1);
}

TEST_CASE("the closed-form iteration bound can undercount a single offload") {
    // One player starting local that offloads alone: the potential falls from
    // omega*lambda to 0, so pi = lambda and the bound is omega / (2 lambda).
    SystemParams p;
    p.queue_enabled = false;
    GameEnv env = small_env(p, {40.0});
    env.users[0].subtasks[0].volume_bits = 1.0;  // init keeps it local
    const GameOutcome out = run_to_ne(env, init_profile(env), 100, true);
    REQUIRE(out.iterations == 1);
    const double omega = env.signal(0);
    CHECK(out.pi == doctest::Approx(out.lambda[0]));
    CHECK(out.bound == doctest::Approx(omega / (2 * out.lambda[0])));
    CHECK(out.bound < 1.0);
}

TEST_CASE("random instances reach a certified equilibrium") {
    RngStream rng(77, "ne");
    int moved = 0;
    for (int trial = 0; trial < 60; ++trial) {
        oracle::Instance inst;
        oracle::make_instance(inst, {6, 3, 3}, rng);
        const GameEnv& env = inst.env;
        const GameOutcome out = run_to_ne(env, init_profile(env), 10000, true);
        REQUIRE(out.converged);
        CHECK(out.is_ne);
        CHECK(oracle::is_nash(env, out.profile));
        CHECK(out.potential_trace.size() == static_cast<std::size_t>(out.iterations) + 1);
        for (std::size_t i = 1; i < out.potential_trace.size(); ++i)
            CHECK(out.potential_trace[i] < out.potential_trace[i - 1]);
        for (double d : out.delta_cost) CHECK(d < 0.0);
        if (out.iterations > 0) {
            ++moved;
            CHECK(out.pi > 0.0);
            // Every accepted update lowers the potential by at least pi * Omega_min.
            double om_min = 1e300;
            for (int k = 0; k < env.num_users(); ++k)
                if (std::isfinite(out.lambda[k])) om_min = std::min(om_min, env.signal(k));
            for (std::size_t i = 1; i < out.potential_trace.size(); ++i)
                CHECK(out.potential_trace[i - 1] - out.potential_trace[i] >= out.pi * om_min * (1 - 1e-9));
        }
    }
    CHECK(moved > 10);
}

TEST_CASE("sign of the potential change follows the deviator's cost change") {
    RngStream rng(5, "sgn");
    int cases[3] = {0, 0, 0};
    int disagree = 0;
    for (int trial = 0; trial < 150; ++trial) {
        oracle::Instance inst;
        oracle::make_instance(inst, {8, 3, 3}, rng);
        const GameEnv& env = inst.env;
        const int M = inst.params.num_channels;
        const auto lam = user_thresholds(env);
        std::vector<double> omega(env.num_users());
        for (int k = 0; k < env.num_users(); ++k) omega[k] = env.signal(k);
        std::vector<int> ch(env.num_users(), 0);
        for (int k = 0; k < env.num_users(); ++k)
            if (std::isfinite(lam[k])) ch[k] = static_cast<int>(rng.uniform_int(0, M));
        for (int k = 0; k < env.num_users(); ++k) {
            if (!std::isfinite(lam[k])) continue;
            for (int m = 0; m <= M; ++m) {
                if (m == ch[k] || (m > 0 && ch[k] > 0 && M == 1)) continue;
                std::vector<int> after = ch;
                after[k] = m;
                const DecisionProfile before_p = profile_on(env, ch);
                const double z0 = oracle::user_choice_cost(env, k, ch[k], before_p);
                const double z1 = oracle::user_choice_cost(env, k, m, profile_on(env, after));
                const double dphi = potential(after, omega, lam) - potential(ch, omega, lam);
                const double scale_phi = omega[k] * (std::abs(lam[k]) + 1e-6);
                const int s_phi = sgn(dphi, 1e-9 * scale_phi);
                const int s_cost = sgn(z1 - z0, 1e-12 * std::max(1.0, std::abs(z0)));
                if (s_phi != s_cost) ++disagree;
                cases[ch[k] == 0 ? 2 : (m == 0 ? 1 : 0)]++;
            }
        }
    }
    MESSAGE("remote->remote " << cases[0] << ", remote->local " << cases[1] << ", local->remote " << cases[2]);
    CHECK(cases[0] > 100);
    CHECK(cases[1] > 100);
    CHECK(cases[2] > 100);
    CHECK(disagree == 0);
}

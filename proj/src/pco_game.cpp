#include "brpco/pco_game.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace brpco {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::array<Destination, 2> kDests{Destination::Fin, Destination::Ein};

double cache_cap(Destination d, const SystemParams& p) {
    return d == Destination::Fin ? p.cache_fin : p.cache_ein;
}

// Everything about one user that does not depend on the other users.
struct UserModel {
    double omega = 0.0;
    std::vector<double> local;        // local cost per subtask
    std::vector<double> local_delay;
    std::vector<std::array<RemoteSplit, 2>> split;
    double local_total = 0.0;
    bool local_late = false;          // some subtask misses the deadline locally
    double lambda = kNeverOffload;

    bool player() const { return !local.empty() && std::isfinite(lambda); }
};

UserModel build_model(const GameEnv& env, int k) {
    const SystemParams& p = *env.p;
    const UserJob& job = env.users[k];
    UserModel u;
    u.omega = env.signal(k);
    const std::size_t n = job.subtasks.size();
    u.local.resize(n);
    u.local_delay.resize(n);
    u.split.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        const SubtaskSpec& s = job.subtasks[v];
        const ExecutionCost lc = local_cost(s, p);
        u.local[v] = lc.cost;
        u.local_delay[v] = lc.delay;
        u.local_total += lc.cost;
        if (lc.delay > p.deadline) u.local_late = true;
        double lam_v = kNeverOffload;
        for (Destination d : kDests) {
            const RemoteSplit sp = remote_split(s, job.replicas.at(v), env.queue(d).backlog(),
                                                dest_cpu(d, p), p, env.opt);
            u.split[v][static_cast<int>(d)] = sp;
            if (s.volume_bits > cache_cap(d, p)) continue;
            const double by_cost =
                interference_threshold(u.omega, sp.cost_coeff, sp.cost_fixed, lc.cost, p);
            const double by_deadline =
                interference_threshold(u.omega, sp.delay_coeff, sp.delay_fixed, p.deadline, p);
            lam_v = std::max(lam_v, std::min(by_cost, by_deadline));
        }
        u.lambda = std::max(u.lambda, lam_v);
    }
    return u;
}

struct Split {
    std::vector<OffloadDecisionCell> cells;
    double cost = kInf;     // +inf when no remote choice meets the deadline
    bool late = false;
};

class Solver {
public:
    explicit Solver(const GameEnv& env) : env_(env), p_(*env.p) {
        const int K = env.num_users();
        models_.reserve(K);
        for (int k = 0; k < K; ++k) models_.push_back(build_model(env, k));
    }

    const UserModel& model(int k) const { return models_[k]; }

    void load(const DecisionProfile& prof) {
        prof_ = prof;
        ch_ = channels_of(prof);
        recompute_loads();
    }

    double interference_on(int k, int m) const {
        double sum = 0.0;
        for (std::size_t n = 0; n < ch_.size(); ++n)
            if (static_cast<int>(n) != k && ch_[n] == m) sum += env_.signal(static_cast<int>(n));
        return sum;
    }

    std::array<double, 2> others_load(int k) const {
        std::array<double, 2> l = load_;
        const auto& job = env_.users[k];
        for (std::size_t v = 0; v < prof_[k].size(); ++v) {
            if (prof_[k][v].remote())
                l[static_cast<int>(prof_[k][v].dest)] -= job.subtasks[v].volume_bits;
        }
        return l;
    }

    Split local_split(int k) const {
        Split s;
        s.cells.assign(models_[k].local.size(), OffloadDecisionCell{});
        s.cost = models_[k].local_total;
        s.late = models_[k].local_late;
        return s;
    }

    // Best assignment of user k's subtasks when the user transmits on channel m.
    Split channel_split(int k, int m) const {
        const UserModel& u = models_[k];
        const auto& job = env_.users[k];
        const double rate = rate_from_sinr(u.omega, interference_on(k, m), p_);
        std::array<double, 2> load = others_load(k);
        const std::size_t n = u.local.size();
        Split s;
        s.cells.assign(n, OffloadDecisionCell{});
        double total = 0.0;
        bool any_remote = false;
        // Cheapest feasible remote option per subtask, for the forced-remote fallback.
        std::vector<double> best_remote(n, kInf);
        std::vector<int> best_dest(n, -1);
        for (std::size_t v = 0; v < n; ++v) {
            const double vol = job.subtasks[v].volume_bits;
            double best = u.local[v];
            int pick = -1;
            for (Destination d : kDests) {
                const int b = static_cast<int>(d);
                if (load[b] + vol > cache_cap(d, p_)) continue;
                const RemoteSplit& sp = u.split[v][b];
                if (sp.delay(rate) > p_.deadline) continue;
                const double c = sp.cost(rate);
                if (c < best_remote[v]) {
                    best_remote[v] = c;
                    best_dest[v] = b;
                }
                if (c < best) {
                    best = c;
                    pick = b;
                }
            }
            if (pick >= 0) {
                s.cells[v] = {m, static_cast<Destination>(pick)};
                load[pick] += vol;
                any_remote = true;
            } else if (u.local_delay[v] > p_.deadline) {
                s.late = true;
            }
            total += best;
        }
        if (!any_remote) {
            std::size_t arg = n;
            double penalty = kInf;
            for (std::size_t v = 0; v < n; ++v) {
                if (best_dest[v] < 0) continue;
                const double extra = best_remote[v] - u.local[v];
                if (extra < penalty) {
                    penalty = extra;
                    arg = v;
                }
            }
            if (arg == n) return s;  // cost stays +inf
            s.cells[arg] = {m, static_cast<Destination>(best_dest[arg])};
            total += penalty;
            s.late = false;
            for (std::size_t v = 0; v < n; ++v)
                if (v != arg && u.local_delay[v] > p_.deadline) s.late = true;
        }
        s.cost = total;
        return s;
    }

    Split current_split(int k) const {
        return ch_[k] == 0 ? local_split(k) : channel_split(k, ch_[k]);
    }

    // Ties: local first, then lowest channel.
    Split best(int k) const {
        Split b = local_split(k);
        if (!models_[k].player()) return b;
        for (int m = 1; m <= p_.num_channels; ++m) {
            Split s = channel_split(k, m);
            if (s.cost < b.cost) b = std::move(s);
        }
        return b;
    }

    void apply(int k, const std::vector<OffloadDecisionCell>& row) {
        const int old_ch = ch_[k];
        set_row(k, row);
        const int new_ch = ch_[k];
        // Co-channel users see new interference; re-optimize their splits.
        for (int n = 0; n < static_cast<int>(ch_.size()); ++n) {
            if (n == k || ch_[n] == 0) continue;
            if (ch_[n] != old_ch && ch_[n] != new_ch) continue;
            Split s = channel_split(n, ch_[n]);
            if (std::isfinite(s.cost)) set_row(n, s.cells);
        }
    }

    double phi() const {
        std::vector<double> om(ch_.size()), lam(ch_.size());
        for (std::size_t k = 0; k < ch_.size(); ++k) {
            om[k] = models_[k].omega;
            lam[k] = models_[k].player() ? models_[k].lambda : kNeverOffload;
        }
        return potential(ch_, om, lam);
    }

    const DecisionProfile& profile() const { return prof_; }
    const ChannelAssignment& channels() const { return ch_; }

private:
    void set_row(int k, const std::vector<OffloadDecisionCell>& row) {
        const auto& job = env_.users[k];
        for (std::size_t v = 0; v < prof_[k].size(); ++v)
            if (prof_[k][v].remote())
                load_[static_cast<int>(prof_[k][v].dest)] -= job.subtasks[v].volume_bits;
        prof_[k] = row;
        for (std::size_t v = 0; v < row.size(); ++v)
            if (row[v].remote()) load_[static_cast<int>(row[v].dest)] += job.subtasks[v].volume_bits;
        ch_[k] = user_channel(row);
    }

    void recompute_loads() {
        load_ = {0.0, 0.0};
        for (std::size_t k = 0; k < prof_.size(); ++k)
            for (std::size_t v = 0; v < prof_[k].size(); ++v)
                if (prof_[k][v].remote())
                    load_[static_cast<int>(prof_[k][v].dest)] +=
                        env_.users[k].subtasks[v].volume_bits;
    }

    const GameEnv& env_;
    const SystemParams& p_;
    std::vector<UserModel> models_;
    DecisionProfile prof_;
    ChannelAssignment ch_;
    std::array<double, 2> load_{0.0, 0.0};
};

void check_env(const GameEnv& env) {
    if (!env.p) throw std::invalid_argument("game: params not set");
    if (env.cs.size() != env.users.size())
        throw std::invalid_argument("game: channel state size does not match users");
    for (const auto& u : env.users)
        if (u.replicas.size() != u.subtasks.size())
            throw std::invalid_argument("game: replicas size does not match subtasks");
}

void check_profile(const GameEnv& env, const DecisionProfile& prof) {
    if (prof.size() != env.users.size()) throw std::invalid_argument("game: profile has wrong user count");
    for (std::size_t k = 0; k < prof.size(); ++k) {
        if (prof[k].size() != env.users[k].subtasks.size())
            throw std::invalid_argument("game: profile row has wrong subtask count");
        for (const auto& c : prof[k])
            if (c.mode < 0 || c.mode > env.p->num_channels)
                throw std::invalid_argument("game: channel index out of range");
        user_channel(prof[k]);
    }
}

bool improves(double current, double candidate) {
    if (!std::isfinite(candidate)) return false;
    if (!std::isfinite(current)) return true;
    return current - candidate > kImproveTol * std::max(std::abs(current), 1e-300);
}

}  // namespace

int user_channel(const std::vector<OffloadDecisionCell>& row) {
    int m = 0;
    for (const auto& c : row) {
        if (!c.remote()) continue;
        if (m != 0 && c.mode != m)
            throw std::invalid_argument("game: a user's remote subtasks must share one channel");
        m = c.mode;
    }
    return m;
}

ChannelAssignment channels_of(const DecisionProfile& prof) {
    ChannelAssignment ch(prof.size());
    for (std::size_t k = 0; k < prof.size(); ++k) ch[k] = user_channel(prof[k]);
    return ch;
}

ExecutionCost cell_cost(const GameEnv& env, int k, int v, const OffloadDecisionCell& cell,
                        const ChannelAssignment& ch) {
    const SystemParams& p = *env.p;
    const SubtaskSpec& s = env.users[k].subtasks.at(v);
    if (!cell.remote()) return local_cost(s, p);
    double interf = 0.0;
    for (std::size_t n = 0; n < ch.size(); ++n)
        if (static_cast<int>(n) != k && ch[n] == cell.mode) interf += env.signal(static_cast<int>(n));
    const double rate = rate_from_sinr(env.signal(k), interf, p);
    const int r = env.users[k].replicas.at(v);
    return cell.dest == Destination::Fin ? fin_cost(s, rate, r, env.fin_q, p, env.opt)
                                         : ein_cost(s, rate, r, env.ein_q, p, env.opt);
}

double user_cost(const GameEnv& env, int k, const DecisionProfile& prof) {
    const ChannelAssignment ch = channels_of(prof);
    double total = 0.0;
    for (std::size_t v = 0; v < prof[k].size(); ++v)
        total += cell_cost(env, k, static_cast<int>(v), prof[k][v], ch).cost;
    return total;
}

std::vector<double> user_thresholds(const GameEnv& env) {
    check_env(env);
    std::vector<double> out(env.users.size());
    for (int k = 0; k < env.num_users(); ++k) {
        const UserModel u = build_model(env, k);
        out[k] = u.player() ? u.lambda : kNeverOffload;
    }
    return out;
}

DecisionProfile init_profile(const GameEnv& env) {
    check_env(env);
    const SystemParams& p = *env.p;
    DecisionProfile prof(env.users.size());
    int next_channel = 0;
    for (std::size_t k = 0; k < env.users.size(); ++k) {
        const auto& job = env.users[k];
        prof[k].assign(job.subtasks.size(), OffloadDecisionCell{});
        if (job.subtasks.empty()) continue;
        double cycles = 0.0, volume = 0.0;
        for (const auto& s : job.subtasks) {
            cycles += s.cycles;
            volume += s.volume_bits;
        }
        const double l_local = cycles * p.cpu_local / (p.tx_power * volume);
        const double l_fin = cycles * p.cpu_local / (p.cpu_fin * p.cache_fin);
        const double l_ein = cycles * p.cpu_local / (p.cpu_ein * p.cache_ein);
        if (l_local >= l_fin && l_local >= l_ein) continue;
        const Destination d = l_fin > l_ein ? Destination::Fin : Destination::Ein;
        const int m = next_channel % p.num_channels + 1;
        ++next_channel;
        for (auto& c : prof[k]) c = {m, d};
    }
    return prof;
}

double potential(const ChannelAssignment& ch, const std::vector<double>& omega,
                 const std::vector<double>& lambda) {
    if (omega.size() != ch.size() || lambda.size() != ch.size())
        throw std::invalid_argument("potential: size mismatch");
    double pairs = 0.0, local = 0.0;
    for (std::size_t k = 0; k < ch.size(); ++k) {
        if (ch[k] == 0) {
            if (std::isfinite(lambda[k])) local += omega[k] * lambda[k];
            continue;
        }
        for (std::size_t n = 0; n < ch.size(); ++n)
            if (n != k && ch[n] == ch[k]) pairs += omega[k] * omega[n];
    }
    return 0.5 * pairs + local;
}

BestResponse best_response(const GameEnv& env, int k, const DecisionProfile& prof) {
    check_env(env);
    check_profile(env, prof);
    Solver solver(env);
    solver.load(prof);
    Split s = solver.best(k);
    return {s.cells, s.cost, s.late};
}

GameOutcome run_to_ne(const GameEnv& env, DecisionProfile initial, int max_iters,
                      bool exhaustive_check) {
    check_env(env);
    check_profile(env, initial);
    Solver solver(env);
    const int K = env.num_users();
    // Non-players never leave local execution.
    for (int k = 0; k < K; ++k)
        if (!solver.model(k).player())
            initial[k].assign(initial[k].size(), OffloadDecisionCell{});
    solver.load(initial);
    for (int k = 0; k < K; ++k) {
        if (solver.channels()[k] == 0) continue;
        Split s = solver.current_split(k);
        solver.apply(k, std::isfinite(s.cost) ? s.cells : solver.local_split(k).cells);
    }

    GameOutcome out;
    out.potential_trace.push_back(solver.phi());
    double min_pi = kInf;
    while (out.iterations < max_iters) {
        int mover = -1;
        double best_gain = 0.0;
        Split best_split;
        double mover_cost = 0.0;
        for (int k = 0; k < K; ++k) {
            if (!solver.model(k).player()) continue;
            const double cur = solver.current_split(k).cost;
            Split b = solver.best(k);
            if (!improves(cur, b.cost)) continue;
            const double gain = std::isfinite(cur) ? cur - b.cost : kInf;
            if (mover < 0 || gain > best_gain) {
                mover = k;
                best_gain = gain;
                mover_cost = cur;
                best_split = std::move(b);
            }
        }
        if (mover < 0) {
            out.converged = true;
            break;
        }
        solver.apply(mover, best_split.cells);
        const double phi = solver.phi();
        // Per-update pi: the drop equals pi * omega of the mover.
        min_pi = std::min(min_pi, (out.potential_trace.back() - phi) / solver.model(mover).omega);
        out.potential_trace.push_back(phi);
        out.movers.push_back(mover);
        out.delta_cost.push_back(best_split.cost - mover_cost);
        ++out.iterations;
    }
    if (!out.converged) {
        // One more scan: the last accepted update may have reached equilibrium.
        bool any = false;
        for (int k = 0; k < K && !any; ++k)
            if (solver.model(k).player() && improves(solver.current_split(k).cost, solver.best(k).cost))
                any = true;
        out.converged = !any;
    }
    out.profile = solver.profile();
    out.is_ne = out.converged && (!exhaustive_check || is_exhaustive_ne(env, out.profile));

    double om_max = 0.0, om_min = kInf, lam_max = -kInf, lam_min = kInf;
    int players = 0;
    out.lambda.resize(K);
    for (int k = 0; k < K; ++k) {
        const UserModel& u = solver.model(k);
        out.lambda[k] = u.player() ? u.lambda : kNeverOffload;
        if (!u.player()) continue;
        ++players;
        om_max = std::max(om_max, u.omega);
        om_min = std::min(om_min, u.omega);
        lam_max = std::max(lam_max, u.lambda);
        lam_min = std::min(lam_min, u.lambda);
    }
    if (out.iterations > 0 && min_pi > 0.0 && players > 0) {
        out.pi = min_pi;
        out.bound = convergence_bound(players, om_max, om_min, lam_max, lam_min, out.pi);
    }
    return out;
}

bool is_exhaustive_ne(const GameEnv& env, const DecisionProfile& prof) {
    check_env(env);
    check_profile(env, prof);
    const SystemParams& p = *env.p;
    const int K = env.num_users();
    const ChannelAssignment ch = channels_of(prof);
    std::array<double, 2> load{0.0, 0.0};
    for (int k = 0; k < K; ++k)
        for (std::size_t v = 0; v < prof[k].size(); ++v)
            if (prof[k][v].remote())
                load[static_cast<int>(prof[k][v].dest)] += env.users[k].subtasks[v].volume_bits;

    for (int k = 0; k < K; ++k) {
        const auto& job = env.users[k];
        const std::size_t n = job.subtasks.size();
        if (n == 0) continue;
        double current = user_cost(env, k, prof);
        // A remote subtask that misses the deadline makes the current row infeasible.
        for (std::size_t v = 0; v < n; ++v)
            if (prof[k][v].remote() &&
                cell_cost(env, k, static_cast<int>(v), prof[k][v], ch).delay > p.deadline)
                current = kInf;

        double local_total = 0.0;
        for (const auto& s : job.subtasks) local_total += local_cost(s, p).cost;
        if (improves(current, local_total)) return false;

        std::array<double, 2> others = load;
        for (std::size_t v = 0; v < n; ++v)
            if (prof[k][v].remote())
                others[static_cast<int>(prof[k][v].dest)] -= job.subtasks[v].volume_bits;

        std::size_t combos = 1;
        for (std::size_t v = 0; v < n; ++v) combos *= 3;
        ChannelAssignment trial = ch;
        for (int m = 1; m <= p.num_channels; ++m) {
            trial[k] = m;
            // option[v]: 0 local, 1 FIN, 2 EIN.
            std::vector<std::array<ExecutionCost, 3>> opt(n);
            for (std::size_t v = 0; v < n; ++v) {
                opt[v][0] = local_cost(job.subtasks[v], p);
                opt[v][1] = cell_cost(env, k, static_cast<int>(v), {m, Destination::Fin}, trial);
                opt[v][2] = cell_cost(env, k, static_cast<int>(v), {m, Destination::Ein}, trial);
            }
            for (std::size_t code = 1; code < combos; ++code) {
                std::size_t c = code;
                double total = 0.0;
                std::array<double, 2> l = others;
                bool ok = true;
                for (std::size_t v = 0; v < n && ok; ++v, c /= 3) {
                    const int o = static_cast<int>(c % 3);
                    total += opt[v][o].cost;
                    if (o == 0) continue;
                    if (opt[v][o].delay > p.deadline) ok = false;
                    l[o - 1] += job.subtasks[v].volume_bits;
                }
                if (!ok || l[0] > p.cache_fin || l[1] > p.cache_ein) continue;
                if (improves(current, total)) return false;
            }
        }
    }
    return true;
}

double convergence_bound(int K, double omega_max, double omega_min, double lambda_max,
                         double lambda_min, double pi) {
    if (!(omega_min > 0.0)) throw std::invalid_argument("convergence_bound: Omega_min must be > 0");
    if (!(pi > 0.0)) throw std::invalid_argument("convergence_bound: pi must be > 0");
    const double k = K;
    return (0.5 * k * k * omega_max * omega_max +
            k * (omega_max * lambda_max - omega_min * lambda_min)) /
           (pi * omega_min);
}

}  // namespace brpco

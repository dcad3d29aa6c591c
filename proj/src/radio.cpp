#include "brpco/radio.hpp"

#include <cmath>
#include <stdexcept>

namespace brpco {

double channel_gain(double distance, double fading, double n) {
    if (!(distance > 0.0)) throw std::invalid_argument("channel_gain: distance must be > 0");
    return fading * std::pow(distance, -n);
}

std::vector<double> sample_distances(const SystemParams& p, RngStream& rng) {
    std::vector<double> d(p.num_users);
    const double half = p.cell_size / 2.0;
    for (auto& x : d) {
        const double dx = rng.uniform(-half, half);
        const double dy = rng.uniform(-half, half);
        x = std::max(p.min_distance, std::hypot(dx, dy));
    }
    return d;
}

ChannelState draw_channel_state(const std::vector<double>& distances, const SystemParams& p,
                                RngStream& rng) {
    ChannelState cs;
    cs.distance = distances;
    cs.fading.resize(distances.size());
    cs.gain.resize(distances.size());
    for (std::size_t k = 0; k < distances.size(); ++k) {
        cs.fading[k] = rng.exponential(1.0);
        cs.gain[k] = channel_gain(distances[k], cs.fading[k], p.path_loss_exp);
    }
    return cs;
}

double interference(int k, const ChannelAssignment& a, const ChannelState& cs,
                    const SystemParams& p) {
    if (a.at(k) < 1) throw std::logic_error("interference: user is not on a channel");
    double sum = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (static_cast<int>(n) != k && a[n] == a[k]) sum += p.tx_power * cs.gain[n];
    }
    return sum;
}

double rate_from_sinr(double signal, double interf, const SystemParams& p) {
    return p.bandwidth / p.num_channels * std::log2(1.0 + signal / (interf + p.noise_var));
}

double uplink_rate(int k, const ChannelAssignment& a, const ChannelState& cs,
                   const SystemParams& p) {
    return rate_from_sinr(p.tx_power * cs.gain.at(k), interference(k, a, cs, p), p);
}

double interference_threshold(double signal, double rate_coeff, double fixed_cost,
                              double local_cost, const SystemParams& p) {
    const double margin = local_cost - fixed_cost;
    if (!(margin > 0.0)) return kNeverOffload;
    const double exponent = rate_coeff * p.num_channels / (p.bandwidth * margin);
    return signal / std::expm1(exponent * std::log(2.0)) - p.noise_var;
}

}  // namespace brpco

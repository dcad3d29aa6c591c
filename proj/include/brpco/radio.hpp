#pragma once

#include <limits>
#include <vector>

#include "brpco/config.hpp"
#include "brpco/rng.hpp"

namespace brpco {

// Threshold value meaning "local execution is always better".
inline constexpr double kNeverOffload = -std::numeric_limits<double>::infinity();

struct ChannelState {
    std::vector<double> distance;  // d_k, m
    std::vector<double> fading;    // p_k, unit-mean exponential
    std::vector<double> gain;      // eta_k = p_k d_k^-n

    std::size_t size() const { return gain.size(); }
};

// Per user: 0 = local, 1..M = channel.
using ChannelAssignment = std::vector<int>;

double channel_gain(double distance, double fading, double n);

// Users placed uniformly in a square cell with the FIN at its center.
std::vector<double> sample_distances(const SystemParams& p, RngStream& rng);
ChannelState draw_channel_state(const std::vector<double>& distances, const SystemParams& p,
                                RngStream& rng);

// Sum of rho*eta over the other users on k's channel. Throws std::logic_error
// if k is local.
double interference(int k, const ChannelAssignment& a, const ChannelState& cs,
                    const SystemParams& p);

// (B/M) log2(1 + signal / (interference + sigma^2)).
double rate_from_sinr(double signal, double interf, const SystemParams& p);
double uplink_rate(int k, const ChannelAssignment& a, const ChannelState& cs,
                   const SystemParams& p);

// Interference at which a remote cost A/omega + D equals `local_cost`:
// signal / (2^(A M / (B (local_cost - D))) - 1) - sigma^2.
// Returns kNeverOffload when local_cost <= D.
double interference_threshold(double signal, double rate_coeff, double fixed_cost,
                              double local_cost, const SystemParams& p);

}  // namespace brpco

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "brpco/rng.hpp"

namespace brpco {

struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;

    double& at(int o, int i) { return w[static_cast<std::size_t>(o) * in + i]; }
    double at(int o, int i) const { return w[static_cast<std::size_t>(o) * in + i]; }
};

// Dense ReLU MLP with a linear output head Theta. The action-aggregation
// layer (Q = action . Theta) has no parameters of its own.
struct NetworkWeights {
    std::vector<Layer> layers;

    int input_size() const { return layers.front().in; }
    int output_size() const { return layers.back().out; }
    std::vector<int> sizes() const;
    bool all_finite() const;
};

using ThetaVector = std::vector<double>;

// sizes = {input, hidden..., output}. Uniform(+-sqrt(6/fan_in)) weights, zero biases.
NetworkWeights init_network(const std::vector<int>& sizes, RngStream& rng);
NetworkWeights zero_network(const std::vector<int>& sizes);

// Inverted input dropout with probability `dropout` when `rng` is non-null;
// pure inference otherwise.
ThetaVector forward(const NetworkWeights& net, const std::vector<double>& x, double dropout = 0.0,
                    RngStream* rng = nullptr);

double q_value(const ThetaVector& theta, const std::vector<double>& action);

double huber_loss(double error, double delta = 1.0);
double huber_grad(double error, double delta = 1.0);

struct TrainSample {
    std::vector<double> x;
    std::vector<double> action;  // aggregation weights
    double target = 0.0;
};

// Mean Huber loss of q_value(forward(x), action) against target, and its
// gradient with respect to every weight and bias (same shape as `net`).
struct LossGrad {
    double loss = 0.0;
    NetworkWeights grad;
};
LossGrad loss_and_gradient(const NetworkWeights& net, const std::vector<TrainSample>& batch,
                           double huber_delta, double dropout = 0.0, RngStream* rng = nullptr);

struct Optimizer {
    double lr = 0.0008;
    double momentum = 0.0;
    NetworkWeights velocity;  // empty until the first step
};

// One gradient step. Throws std::runtime_error and leaves `net` untouched if
// the loss or any gradient or updated weight is non-finite.
double train_step(NetworkWeights& net, Optimizer& opt, const std::vector<TrainSample>& batch,
                  double huber_delta, double dropout = 0.0, RngStream* rng = nullptr);

inline NetworkWeights sync_target(const NetworkWeights& main) { return main; }

nlohmann::json to_json(const NetworkWeights& net);
NetworkWeights network_from_json(const nlohmann::json& j);

inline constexpr int kCheckpointVersion = 1;

}  // namespace brpco

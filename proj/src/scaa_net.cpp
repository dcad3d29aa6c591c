#include "brpco/scaa_net.hpp"

#include <cmath>
#include <stdexcept>

namespace brpco {

std::vector<int> NetworkWeights::sizes() const {
    std::vector<int> s;
    if (layers.empty()) return s;
    s.push_back(layers.front().in);
    for (const auto& l : layers) s.push_back(l.out);
    return s;
}

bool NetworkWeights::all_finite() const {
    for (const auto& l : layers) {
        for (double x : l.w)
            if (!std::isfinite(x)) return false;
        for (double x : l.b)
            if (!std::isfinite(x)) return false;
    }
    return true;
}

NetworkWeights zero_network(const std::vector<int>& sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("network: need at least input and output sizes");
    NetworkWeights net;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        if (sizes[i] < 1 || sizes[i + 1] < 1) throw std::invalid_argument("network: layer sizes must be >= 1");
        Layer l;
        l.in = sizes[i];
        l.out = sizes[i + 1];
        l.w.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
        l.b.assign(l.out, 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

NetworkWeights init_network(const std::vector<int>& sizes, RngStream& rng) {
    NetworkWeights net = zero_network(sizes);
    for (auto& l : net.layers) {
        const double a = std::sqrt(6.0 / l.in);
        for (auto& x : l.w) x = rng.uniform(-a, a);
    }
    return net;
}

namespace {

// Activations of every layer; acts[0] is the (dropped-out) input, the last
// entry is Theta.
struct Trace {
    std::vector<std::vector<double>> acts;
};

Trace run(const NetworkWeights& net, const std::vector<double>& x, double dropout, RngStream* rng) {
    if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
    if (static_cast<int>(x.size()) != net.input_size())
        throw std::invalid_argument("forward: input size mismatch");
    Trace t;
    t.acts.reserve(net.layers.size() + 1);
    std::vector<double> in = x;
    if (rng && dropout > 0.0) {
        const double keep = 1.0 - dropout;
        for (auto& v : in) v = rng->bernoulli(keep) ? v / keep : 0.0;
    }
    t.acts.push_back(std::move(in));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const Layer& l = net.layers[li];
        const auto& a = t.acts.back();
        std::vector<double> z = l.b;
        for (int i = 0; i < l.in; ++i) {
            const double ai = a[i];
            if (ai == 0.0) continue;  // indicator inputs are mostly zero
            for (int o = 0; o < l.out; ++o) z[o] += l.at(o, i) * ai;
        }
        if (li + 1 < net.layers.size())
            for (auto& v : z) v = v > 0.0 ? v : 0.0;
        t.acts.push_back(std::move(z));
    }
    return t;
}

}  // namespace

ThetaVector forward(const NetworkWeights& net, const std::vector<double>& x, double dropout,
                    RngStream* rng) {
    return run(net, x, dropout, rng).acts.back();
}

double q_value(const ThetaVector& theta, const std::vector<double>& action) {
    if (theta.size() != action.size()) throw std::invalid_argument("q_value: length mismatch");
    double q = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) q += theta[i] * action[i];
    return q;
}

double huber_loss(double error, double delta) {
    const double a = std::abs(error);
    return a <= delta ? 0.5 * error * error : delta * (a - 0.5 * delta);
}

double huber_grad(double error, double delta) {
    if (error > delta) return delta;
    if (error < -delta) return -delta;
    return error;
}

LossGrad loss_and_gradient(const NetworkWeights& net, const std::vector<TrainSample>& batch,
                           double huber_delta, double dropout, RngStream* rng) {
    if (batch.empty()) throw std::invalid_argument("train: empty batch");
    LossGrad out;
    out.grad = zero_network(net.sizes());
    const double scale = 1.0 / static_cast<double>(batch.size());
    const std::size_t L = net.layers.size();
    for (const auto& s : batch) {
        const Trace t = run(net, s.x, dropout, rng);
        const ThetaVector& theta = t.acts.back();
        const double err = q_value(theta, s.action) - s.target;
        out.loss += scale * huber_loss(err, huber_delta);
        const double dq = scale * huber_grad(err, huber_delta);
        // Gradient w.r.t. Theta flows through the aggregation dot product.
        std::vector<double> delta(theta.size());
        for (std::size_t i = 0; i < theta.size(); ++i) delta[i] = dq * s.action[i];
        for (std::size_t li = L; li-- > 0;) {
            const Layer& l = net.layers[li];
            Layer& g = out.grad.layers[li];
            const auto& a = t.acts[li];
            for (int o = 0; o < l.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                g.b[o] += d;
                for (int i = 0; i < l.in; ++i) g.at(o, i) += d * a[i];
            }
            if (li == 0) break;
            std::vector<double> prev(l.in, 0.0);
            for (int o = 0; o < l.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                for (int i = 0; i < l.in; ++i) prev[i] += l.at(o, i) * d;
            }
            // ReLU derivative of the previous layer's output.
            for (int i = 0; i < l.in; ++i)
                if (a[i] <= 0.0) prev[i] = 0.0;
            delta = std::move(prev);
        }
    }
    return out;
}

double train_step(NetworkWeights& net, Optimizer& opt, const std::vector<TrainSample>& batch,
                  double huber_delta, double dropout, RngStream* rng) {
    LossGrad lg = loss_and_gradient(net, batch, huber_delta, dropout, rng);
    if (!std::isfinite(lg.loss) || !lg.grad.all_finite())
        throw std::runtime_error("train_step: non-finite loss or gradient, step rejected");
    if (opt.velocity.layers.empty()) opt.velocity = zero_network(net.sizes());
    NetworkWeights next = net;
    NetworkWeights vel = opt.velocity;
    for (std::size_t li = 0; li < next.layers.size(); ++li) {
        auto step = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = opt.momentum * v[i] - opt.lr * g[i];
                w[i] += v[i];
            }
        };
        step(next.layers[li].w, vel.layers[li].w, lg.grad.layers[li].w);
        step(next.layers[li].b, vel.layers[li].b, lg.grad.layers[li].b);
    }
    if (!next.all_finite()) throw std::runtime_error("train_step: non-finite weights, step rejected");
    net = std::move(next);
    opt.velocity = std::move(vel);
    return lg.loss;
}

nlohmann::json to_json(const NetworkWeights& net) {
    nlohmann::json j;
    j["sizes"] = net.sizes();
    j["layers"] = nlohmann::json::array();
    for (const auto& l : net.layers) j["layers"].push_back({{"w", l.w}, {"b", l.b}});
    return j;
}

NetworkWeights network_from_json(const nlohmann::json& j) {
    NetworkWeights net = zero_network(j.at("sizes").get<std::vector<int>>());
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers.size()) throw std::runtime_error("checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto w = layers[i].at("w").get<std::vector<double>>();
        auto b = layers[i].at("b").get<std::vector<double>>();
        if (w.size() != net.layers[i].w.size() || b.size() != net.layers[i].b.size())
            throw std::runtime_error("checkpoint: layer shape mismatch");
        net.layers[i].w = std::move(w);
        net.layers[i].b = std::move(b);
    }
    return net;
}

}  // namespace brpco

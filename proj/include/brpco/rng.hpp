#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace brpco {

// Named random stream. Each consumer (tasks, fading, exploration, ...) owns
// its own stream seeded from (seed, label) so that adding draws in one place
// does not shift the sequence seen by another.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    RngStream() : RngStream(0, "") {}
    RngStream(std::uint64_t seed, std::string_view label);

    engine_type& engine() { return eng_; }

    double uniform();
    double uniform(double lo, double hi);
    // Inclusive on both ends.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    bool bernoulli(double p);
    double exponential(double mean = 1.0);

    // Engine state as produced by operator<<; round-trips exactly.
    std::string save_state() const;
    void load_state(const std::string& s);

private:
    engine_type eng_;
};

}  // namespace brpco

#include "brpco/rng.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace brpco {

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                     static_cast<std::uint32_t>(seed >> 32)};
    for (unsigned char c : label) words.push_back(c);
    std::seed_seq seq(words.begin(), words.end());
    eng_.seed(seq);
}

double RngStream::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
}

double RngStream::uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(eng_);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
}

bool RngStream::bernoulli(double p) {
    return std::bernoulli_distribution(p)(eng_);
}

double RngStream::exponential(double mean) {
    return std::exponential_distribution<double>(1.0 / mean)(eng_);
}

std::string RngStream::save_state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
}

void RngStream::load_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (!is) throw std::runtime_error("rng: malformed engine state");
}

}  // namespace brpco

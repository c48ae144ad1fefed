#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace spikelearn {

// Purpose-labelled random stream. The engine is mt19937_64, whose output
// sequence is fixed by the standard; all distributions are implemented here
// so the draws do not depend on the standard library vendor.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    const std::string& stream_id() const noexcept { return stream_id_; }

    // Independent child stream, e.g. one per Poisson source.
    RandomStream derive(std::string_view label) const;
    RandomStream derive(std::uint64_t index) const;

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 bits of resolution.
    double uniform();
    // Uniform integer on [0, n).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }
    double exponential(double rate);
    double gaussian();

private:
    std::uint64_t seed_;
    std::string stream_id_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) noexcept;

} // namespace spikelearn

#include "spikelearn/random_stream.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spikelearn {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) noexcept
{
    return splitmix64(splitmix64(seed) ^ fnv1a(label));
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(mix_seed(seed, stream_id))
{
}

RandomStream RandomStream::derive(std::string_view label) const
{
    std::string id = stream_id_;
    id += '/';
    id += label;
    return RandomStream(seed_, id);
}

RandomStream RandomStream::derive(std::uint64_t index) const
{
    return derive(std::to_string(index));
}

double RandomStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomStream::below(std::uint64_t n)
{
    if (n == 0) {
        throw std::invalid_argument("RandomStream::below: empty range");
    }
    // Rejection sampling keeps the result unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

double RandomStream::exponential(double rate)
{
    if (!(rate > 0.0)) {
        throw std::invalid_argument("RandomStream::exponential: rate must be positive");
    }
    return -std::log1p(-uniform()) / rate;
}

double RandomStream::gaussian()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
}

} // namespace spikelearn

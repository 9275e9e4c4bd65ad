#pragma once

#include <cstdint>
#include <limits>

namespace htev {

std::uint64_t mix64(std::uint64_t x);

// Derive an independent stream key from a master seed and a list of
// integer coordinates (n, replicate, purpose, ...).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0);

// Counter-based generator: output k is mix64(key + k * golden). Two streams
// with different keys never share state, so replicate order is irrelevant.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // uniform on (0, 1], never exactly 0
    double uniform_pos();
    // uniform on [0, 1)
    double uniform();
    double normal();
    // uniform integer in [0, bound)
    std::uint64_t below(std::uint64_t bound);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace htev

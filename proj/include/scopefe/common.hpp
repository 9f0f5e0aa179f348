#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scopefe {

/// Error raised for violated preconditions and failed stages.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric cells use NaN as the missing marker.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
/// Categorical cells use a negative code as the missing marker.
inline constexpr std::int32_t kMissingCode = -1;

inline bool is_missing(double v) { return std::isnan(v); }
inline bool is_missing(std::int32_t code) { return code < 0; }

/// Stable 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Derives a stage seed from the global seed, a stage name and indices.
/// Pure function of its inputs, independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                          std::initializer_list<std::uint64_t> indices = {});

/// Small deterministic generator. Sampling helpers are written out
/// explicitly so results do not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform integer in [0, bound).
    std::uint64_t uniform_index(std::uint64_t bound);
    /// Uniform real in [0, 1).
    double uniform01();
    /// Standard normal via Box-Muller.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). Results must be written to index-addressed slots; the first
/// exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

/// Configures the shared logger from SCOPEFE_LOG (trace..off, default warn).
void init_logging();

}  // namespace scopefe

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace idsm {

// Error raised by linear/Newton solvers; carries the last residual seen.
struct SolverError : std::runtime_error {
    double residual;
    explicit SolverError(const std::string& what, double res = 0.0)
        : std::runtime_error(what), residual(res) {}
};

// Deterministic 64-bit generator (splitmix64). std::uniform_real_distribution
// is implementation-defined, so all randomness that ends up in files or frozen
// expectations goes through this.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in [-1, 1)
    double next_symmetric() { return 2.0 * next_unit() - 1.0; }

  private:
    std::uint64_t state_;
};

// Shortest round-trip decimal formatting used by every text writer.
std::string format_double(double v);

}  // namespace idsm

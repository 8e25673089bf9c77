#pragma once

#include "kirchwell/grid.hpp"

#include <cstdint>
#include <optional>

namespace kw {

struct CgResult {
    Field x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for an SPD sparse system.
CgResult pcg_solve(const SparseMat& A, const Field& b, double tol = 1e-10,
                   int max_iter = 0, const Field* x0 = nullptr);

/// Deterministic counter-based stream: every draw is a pure function of
/// (seed, tag, counter), so multistarts are reproducible regardless of
/// evaluation order.
class RngStream {
  public:
    RngStream(uint64_t seed, std::string_view op, uint64_t start_index);

    double uniform();                    // [0,1)
    double uniform(double a, double b);  // [a,b)
    double normal();

  private:
    uint64_t next_u64();
    uint64_t state_;
    std::optional<double> cached_normal_;
};

}  // namespace kw

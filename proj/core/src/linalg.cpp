#include "kirchwell/linalg.hpp"

#include <cmath>
#include <numbers>

namespace kw {

CgResult pcg_solve(const SparseMat& A, const Field& b, double tol, int max_iter,
                   const Field* x0) {
    const Eigen::Index n = A.rows();
    KW_REQUIRE(b.size() == n, "pcg_solve: rhs size mismatch");
    if (max_iter <= 0) max_iter = static_cast<int>(4 * n) + 200;

    Field invdiag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = A.coeff(i, i);
        invdiag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }

    CgResult out;
    out.x = x0 ? *x0 : Field::Zero(n);
    Field r = b - A * out.x;
    const double bnorm = b.norm();
    const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);

    Field z = invdiag.cwiseProduct(r);
    Field p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        out.residual = r.norm();
        if (out.residual <= stop) {
            out.converged = true;
            out.iterations = it;
            return out;
        }
        Field Ap = A * p;
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) break;  // lost positive definiteness
        const double alpha = rz / pAp;
        out.x += alpha * p;
        r -= alpha * Ap;
        z = invdiag.cwiseProduct(r);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
        out.iterations = it + 1;
    }
    out.residual = r.norm();
    out.converged = out.residual <= stop;
    return out;
}

namespace {

uint64_t splitmix64(uint64_t& s) {
    uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed, std::string_view op, uint64_t start_index) {
    state_ = seed;
    state_ ^= fnv1a(op) + 0x9e3779b97f4a7c15ULL;
    (void)splitmix64(state_);
    state_ ^= start_index * 0xda942042e4dd58b5ULL;
    (void)splitmix64(state_);
}

uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() {
    if (cached_normal_) {
        const double v = *cached_normal_;
        cached_normal_.reset();
        return v;
    }
    // Box-Muller
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    cached_normal_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    return rad * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace kw

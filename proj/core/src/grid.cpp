#include "kirchwell/grid.hpp"

#include <cmath>
#include <numbers>

namespace kw {

namespace {

double sphere_surface_area(int N) {
    // |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2)
    return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

}  // namespace

Grid Grid::build(const GridSpec& spec) {
    KW_REQUIRE(spec.half_length > 0.0, "build_grid: half_length must be positive");
    KW_REQUIRE(spec.nodes_per_axis >= 9, "build_grid: nodes_per_axis must be >= 9");
    KW_REQUIRE(spec.nodes_per_axis % 2 == 1, "build_grid: nodes_per_axis must be odd");
    if (spec.mode == GridMode::tensor) {
        KW_REQUIRE(spec.dim >= 1 && spec.dim <= 3, "build_grid: tensor dim must be 1..3");
    } else {
        KW_REQUIRE(spec.dim >= 3, "build_grid: radial mode requires dim >= 3");
    }

    Grid g;
    g.spec_ = spec;
    g.h_ = spec.spacing();
    const int n = spec.nodes_per_axis;
    const double h = g.h_;

    if (spec.mode == GridMode::radial) {
        const int N = spec.dim;
        const double omega = sphere_surface_area(N);
        g.sphere_area_ = omega;
        const Eigen::Index ndof = n - 1;  // nodes 0..n-2, r = L is the Dirichlet trace

        g.full_weights_.resize(n);
        for (int i = 0; i < n; ++i) {
            const double r = i * h;
            g.full_weights_[i] = omega * std::pow(r, N - 1) * h;
        }
        // origin: half-cell volume (keeps summation by parts exact with the
        // symmetric origin stencil); outer endpoint: trapezoid half weight
        g.full_weights_[0] = omega * std::pow(0.5 * h, N) / N;
        g.full_weights_[n - 1] *= 0.5;

        g.interior_weights_ = g.full_weights_.head(ndof);
        g.coords_.resize(static_cast<size_t>(ndof));
        for (Eigen::Index i = 0; i < ndof; ++i) g.coords_[static_cast<size_t>(i)] = {i * h};

        // edge-midpoint stiffness: sum_e omega r_{e+1/2}^{N-1} h (Du)(Dv)
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(3 * ndof));
        for (int e = 0; e < n - 1; ++e) {
            const double rm = (e + 0.5) * h;
            const double c = omega * std::pow(rm, N - 1) / h;
            if (e < ndof) trip.emplace_back(e, e, c);
            if (e + 1 < ndof) {
                trip.emplace_back(e + 1, e + 1, c);
                trip.emplace_back(e, e + 1, -c);
                trip.emplace_back(e + 1, e, -c);
            }
        }
        g.stiffness_.resize(ndof, ndof);
        g.stiffness_.setFromTriplets(trip.begin(), trip.end());
        return g;
    }

    // tensor mode
    const int d = spec.dim;
    const Eigen::Index ni = n - 2;  // interior nodes per axis
    g.inodes_axis_ = ni;
    Eigen::Index ndof = 1;
    for (int k = 0; k < d; ++k) ndof *= ni;

    g.istride_ = {1, ni, ni * ni};
    const double cell = std::pow(h, d);
    g.interior_weights_ = Field::Constant(ndof, cell);

    Eigen::Index ntot = 1;
    for (int k = 0; k < d; ++k) ntot *= n;
    g.full_weights_.resize(ntot);
    {
        // trapezoid product weights on the full node set
        std::vector<double> w1(static_cast<size_t>(n), h);
        w1.front() = 0.5 * h;
        w1.back() = 0.5 * h;
        for (Eigen::Index idx = 0; idx < ntot; ++idx) {
            Eigen::Index rem = idx;
            double w = 1.0;
            for (int k = 0; k < d; ++k) {
                w *= w1[static_cast<size_t>(rem % n)];
                rem /= n;
            }
            g.full_weights_[idx] = w;
        }
    }

    g.coords_.resize(static_cast<size_t>(ndof));
    for (Eigen::Index idx = 0; idx < ndof; ++idx) {
        Eigen::Index rem = idx;
        std::vector<double> x(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) {
            const Eigen::Index ik = rem % ni;
            rem /= ni;
            x[static_cast<size_t>(k)] = -spec.half_length + (ik + 1) * h;
        }
        g.coords_[static_cast<size_t>(idx)] = std::move(x);
    }

    // 2nd-order stencil stiffness: per-edge coefficient h^{d-2}
    const double ec = std::pow(h, d - 2);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>((2 * d + 1) * ndof));
    for (Eigen::Index idx = 0; idx < ndof; ++idx) {
        Eigen::Index rem = idx;
        std::array<Eigen::Index, 3> ijk{};
        for (int k = 0; k < d; ++k) {
            ijk[static_cast<size_t>(k)] = rem % ni;
            rem /= ni;
        }
        double diag = 0.0;
        for (int k = 0; k < d; ++k) {
            diag += 2.0 * ec;
            const Eigen::Index ik = ijk[static_cast<size_t>(k)];
            if (ik > 0) trip.emplace_back(idx, idx - g.istride_[static_cast<size_t>(k)], -ec);
            if (ik < ni - 1) trip.emplace_back(idx, idx + g.istride_[static_cast<size_t>(k)], -ec);
        }
        trip.emplace_back(idx, idx, diag);
    }
    g.stiffness_.resize(ndof, ndof);
    g.stiffness_.setFromTriplets(trip.begin(), trip.end());
    return g;
}

Field Grid::sample(const Sampler& fn) const {
    Field out(interior_count());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = fn(coords_[static_cast<size_t>(i)]);
    return out;
}

Field Grid::sample_full(const Sampler& fn) const {
    Field out(total_count());
    const int n = spec_.nodes_per_axis;
    if (spec_.mode == GridMode::radial) {
        for (int i = 0; i < n; ++i) out[i] = fn({i * h_});
        return out;
    }
    const int d = spec_.dim;
    for (Eigen::Index idx = 0; idx < out.size(); ++idx) {
        Eigen::Index rem = idx;
        std::vector<double> x(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k) {
            x[static_cast<size_t>(k)] = -spec_.half_length + static_cast<double>(rem % n) * h_;
            rem /= n;
        }
        out[idx] = fn(x);
    }
    return out;
}

Field Grid::laplacian_apply(const Field& u) const {
    check_field(u, "laplacian_apply");
    Field Ku = stiffness_ * u;
    return Ku.cwiseQuotient(interior_weights_);
}

double Grid::integrate(const Field& w) const {
    if (w.size() == interior_count()) return interior_weights_.dot(w);
    if (w.size() == total_count()) return full_weights_.dot(w);
    throw Error("integrate: vector size matches neither interior nor full node count");
}

double Grid::inner_dirichlet(const Field& u, const Field& v) const {
    check_field(u, "inner_dirichlet");
    check_field(v, "inner_dirichlet");
    return u.dot(stiffness_ * v);
}

double Grid::inner_mu(const Field& V, const Field& u, const Field& v, double mu) const {
    KW_REQUIRE(mu >= 0.0, "inner_mu: mu must be nonnegative");
    check_field(V, "inner_mu");
    check_field(u, "inner_mu");
    check_field(v, "inner_mu");
    const double well = (interior_weights_.array() * V.array() * u.array() * v.array()).sum();
    return inner_dirichlet(u, v) + mu * well;
}

}  // namespace kw

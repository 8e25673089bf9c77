#include "kirchwell/functional.hpp"

#include "kirchwell/linalg.hpp"

#include <cmath>

namespace kw {

double odd_power(double u, double p) {
    if (u == 0.0) return 0.0;
    const double mag = std::exp((p - 1.0) * std::log(std::abs(u)));
    return u > 0.0 ? mag : -mag;
}

EnergyBreakdown energy(const Problem& pr, const Field& u) {
    const Grid& grid = pr.grid();
    grid.check_field(u, "energy");
    EnergyBreakdown e;
    const double s = grid.inner_dirichlet(u, u);
    const Field& w = grid.weights();
    const double qV = (w.array() * pr.V().array() * u.array().square()).sum();
    const double qf = (w.array() * pr.f().array() * u.array().square()).sum();
    const double qg = (w.array() * pr.g().array() * u.array().abs().pow(pr.p())).sum();
    e.dirichlet4 = 0.25 * pr.a() * s * s;
    e.mu_half = 0.5 * (s + pr.mu() * qV);
    e.f_term = 0.5 * pr.lambda() * qf;
    e.g_term = qg / pr.p();
    e.total = e.dirichlet4 + e.mu_half - e.f_term - e.g_term;
    return e;
}

double directional_derivative(const Problem& pr, const Field& u, const Field& phi) {
    const Grid& grid = pr.grid();
    grid.check_field(u, "directional_derivative");
    grid.check_field(phi, "directional_derivative");
    const double s = grid.inner_dirichlet(u, u);
    const double kuphi = grid.inner_dirichlet(u, phi);
    const Field& w = grid.weights();
    double acc = (pr.a() * s + 1.0) * kuphi;
    acc += pr.mu() * (w.array() * pr.V().array() * u.array() * phi.array()).sum();
    acc -= pr.lambda() * (w.array() * pr.f().array() * u.array() * phi.array()).sum();
    const double pp = pr.p();
    double gpart = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        gpart += w[i] * pr.g()[i] * odd_power(u[i], pp) * phi[i];
    return acc - gpart;
}

Field gradient_field(const Problem& pr, const Field& u) {
    const Grid& grid = pr.grid();
    grid.check_field(u, "gradient_field");
    const double s = grid.inner_dirichlet(u, u);
    Field r = (pr.a() * s + 1.0) * grid.laplacian_apply(u);
    const double pp = pr.p();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        r[i] += pr.mu() * pr.V()[i] * u[i] - pr.lambda() * pr.f()[i] * u[i] -
                pr.g()[i] * odd_power(u[i], pp);
    }
    return r;
}

SparseMat dual_operator(const Problem& pr) {
    const Grid& grid = pr.grid();
    SparseMat P = grid.stiffness();
    std::vector<Eigen::Triplet<double>> shift;
    shift.reserve(static_cast<size_t>(grid.interior_count()));
    for (Eigen::Index i = 0; i < grid.interior_count(); ++i)
        shift.emplace_back(i, i, grid.weights()[i] * (pr.mu() * pr.V()[i] + 1.0));
    SparseMat D(grid.interior_count(), grid.interior_count());
    D.setFromTriplets(shift.begin(), shift.end());
    return P + D;
}

double dual_norm(const Problem& pr, const Field& r, const ResidualNormOptions& opt) {
    const Grid& grid = pr.grid();
    grid.check_field(r, "dual_norm");
    SparseMat P = dual_operator(pr);
    Field rhs = grid.weights().cwiseProduct(r);
    auto sol = pcg_solve(P, rhs, opt.cg_tol, opt.cg_max_iter);
    KW_REQUIRE(sol.converged, "residual_norm: preconditioner CG did not converge; "
                              "the system is ill-conditioned, raise the tolerance");
    return std::sqrt(std::max(0.0, rhs.dot(sol.x)));
}

double residual_norm(const Problem& pr, const Field& u, const ResidualNormOptions& opt) {
    return dual_norm(pr, gradient_field(pr, u), opt);
}

}  // namespace kw

#include "kirchwell/continuation.hpp"

#include "kirchwell/linalg.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace kw {

namespace {

/// Bordered corrector for (grad J(u), arclength) = 0 in the unknowns
/// (u, lambda). The nonlocal rank-one enters through an auxiliary unknown q,
/// keeping the matrix sparse.
struct Corrector {
    const Problem& pr;
    const Field& tangent_u;  // weighted in the combined metric
    double tangent_l;
    const Field& pred_u;
    double pred_l;

    // returns true on convergence, updating (u, lambda)
    bool run(Field& u, double& lambda, int max_iter, double tol) const {
        const Grid& grid = pr.grid();
        const Field& w = grid.weights();
        const Eigen::Index n = grid.interior_count();
        for (int it = 0; it < max_iter; ++it) {
            const double s = grid.inner_dirichlet(u, u);
            Field Au = grid.laplacian_apply(u);
            Field r(n);
            for (Eigen::Index i = 0; i < n; ++i)
                r[i] = (pr.a() * s + 1.0) * Au[i] + pr.mu() * pr.V()[i] * u[i] -
                       lambda * pr.f()[i] * u[i] - pr.g()[i] * odd_power(u[i], pr.p());
            double arc = tangent_l * (lambda - pred_l);
            for (Eigen::Index i = 0; i < n; ++i) arc += w[i] * tangent_u[i] * (u[i] - pred_u[i]);
            const double rn = std::sqrt((w.array() * r.array().square()).sum()) + std::abs(arc);
            if (rn <= tol) return true;

            std::vector<Eigen::Triplet<double>> trip;
            const SparseMat& K = grid.stiffness();
            const double kfac = pr.a() * s + 1.0;
            for (Eigen::Index col = 0; col < K.outerSize(); ++col)
                for (SparseMat::InnerIterator kit(K, col); kit; ++kit)
                    trip.emplace_back(kit.row(), col, kfac * kit.value());
            for (Eigen::Index i = 0; i < n; ++i) {
                const double diag = pr.mu() * pr.V()[i] - lambda * pr.f()[i] -
                                    (pr.p() - 1.0) * pr.g()[i] *
                                        std::pow(std::abs(u[i]), pr.p() - 2.0);
                trip.emplace_back(i, i, w[i] * diag);
                trip.emplace_back(i, n, 2.0 * pr.a() * w[i] * Au[i]);  // q column
                trip.emplace_back(n, i, w[i] * Au[i]);                 // q row
                trip.emplace_back(i, n + 1, -w[i] * pr.f()[i] * u[i]);  // d/dlambda
                trip.emplace_back(n + 1, i, w[i] * tangent_u[i]);       // arclength row
            }
            trip.emplace_back(n, n, -1.0);
            trip.emplace_back(n + 1, n + 1, tangent_l);
            SparseMat Sys(n + 2, n + 2);
            Sys.setFromTriplets(trip.begin(), trip.end());
            Eigen::SparseLU<SparseMat> lu(Sys);
            if (lu.info() != Eigen::Success) return false;
            Field rhs = Field::Zero(n + 2);
            rhs.head(n) = -w.cwiseProduct(r);
            rhs[n + 1] = -arc;
            Field sol = lu.solve(rhs);
            u += sol.head(n);
            lambda += sol[n + 1];
        }
        return false;
    }
};

/// Smallest-magnitude eigenvalue of the linearization (20 inverse-iteration
/// steps on the bordered Hessian, Rayleigh value in the mass metric).
double linearization_eigenvalue(const Problem& pr, const Field& u) {
    const Grid& grid = pr.grid();
    const Field& w = grid.weights();
    const Eigen::Index n = grid.interior_count();
    const double s = grid.inner_dirichlet(u, u);
    Field Au = grid.laplacian_apply(u);

    std::vector<Eigen::Triplet<double>> trip;
    const SparseMat& K = grid.stiffness();
    const double kfac = pr.a() * s + 1.0;
    for (Eigen::Index col = 0; col < K.outerSize(); ++col)
        for (SparseMat::InnerIterator kit(K, col); kit; ++kit)
            trip.emplace_back(kit.row(), col, kfac * kit.value());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double diag = pr.mu() * pr.V()[i] - pr.lambda() * pr.f()[i] -
                            (pr.p() - 1.0) * pr.g()[i] * std::pow(std::abs(u[i]), pr.p() - 2.0);
        trip.emplace_back(i, i, w[i] * diag);
        trip.emplace_back(i, n, 2.0 * pr.a() * w[i] * Au[i]);
        trip.emplace_back(n, i, w[i] * Au[i]);
    }
    trip.emplace_back(n, n, -1.0);
    SparseMat Sys(n + 1, n + 1);
    Sys.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SparseMat> lu(Sys);
    if (lu.info() != Eigen::Success) return 0.0;

    Field z = Field::Ones(n);
    double rayleigh = 0.0;
    for (int it = 0; it < 20; ++it) {
        Field rhs(n + 1);
        rhs.head(n) = w.cwiseProduct(z);
        rhs[n] = 0.0;
        Field sol = lu.solve(rhs);
        z = sol.head(n);
        const double nz = std::sqrt((w.array() * z.array().square()).sum());
        if (!(nz > 0.0)) return 0.0;
        z /= nz;
        // H z . z in the mass metric; d/dt ||u+tz||_D^2 = 2 (u,z)_D
        const double s2 = grid.inner_dirichlet(u, z);
        Field Hz = kfac * grid.laplacian_apply(z) + 2.0 * pr.a() * s2 * Au;
        for (Eigen::Index i = 0; i < n; ++i)
            Hz[i] += (pr.mu() * pr.V()[i] - pr.lambda() * pr.f()[i] -
                      (pr.p() - 1.0) * pr.g()[i] * std::pow(std::abs(u[i]), pr.p() - 2.0)) *
                     z[i];
        rayleigh = (w.array() * Hz.array() * z.array()).sum();
    }
    return rayleigh;
}

double combined_norm(const Grid& grid, const Field& du, double dl) {
    return std::sqrt((grid.weights().array() * du.array().square()).sum() + dl * dl);
}

}  // namespace

Branch trace_branch(Problem& pr, double range_lo, double range_hi, const SolveResult& seed,
                    double lambda1_omega, const TraceOptions& opt) {
    KW_REQUIRE(range_hi >= range_lo, "trace_branch: empty range");
    const Grid& grid = pr.grid();
    Branch out;

    auto record = [&](const Field& u, double lam) {
        BranchPoint bp;
        bp.lambda = lam;
        bp.field = u;
        pr.set_lambda(lam);
        bp.norm_mu = pr.norm_mu(u);
        bp.energy = energy(pr, u).total;
        bp.residual = dual_norm(pr, gradient_field(pr, u));
        if (opt.diagnostics) bp.smallest_linearization_eigenvalue = linearization_eigenvalue(pr, u);
        out.points.push_back(std::move(bp));
    };

    const double lam0 = pr.lambda();
    KW_REQUIRE(lam0 >= range_lo - 1e-12 && lam0 <= range_hi + 1e-12,
               "trace_branch: seed lambda outside the range");
    record(seed.field, lam0);
    if (range_hi == range_lo) {
        out.stop_reason = "zero-length range";
        return out;
    }

    // direction: march toward the farther end first
    const double toward = (range_hi - lam0 >= lam0 - range_lo) ? 1.0 : -1.0;
    const double ds_max = opt.ds_max_rel * lambda1_omega;
    const double ds_min = opt.ds_min_rel * lambda1_omega;

    // second point by natural continuation
    double lam1 = lam0 + toward * std::min(0.25 * ds_max, 0.45 * (range_hi - range_lo));
    {
        pr.set_lambda(lam1);
        SolveResult second = newton_refine(pr, seed.field, opt.solver);
        if (second.residual > 1e-6) {
            out.stop_reason = "first natural step failed";
            return out;
        }
        record(second.field, lam1);
    }

    Field u_prev = out.points[0].field, u_cur = out.points[1].field;
    double l_prev = out.points[0].lambda, l_cur = out.points[1].lambda;
    double ds = combined_norm(grid, Field(u_cur - u_prev), l_cur - l_prev);

    for (int step = 0; step < opt.max_points; ++step) {
        Field du = u_cur - u_prev;
        double dl = l_cur - l_prev;
        const double nt = combined_norm(grid, du, dl);
        if (!(nt > 0.0)) {
            out.stop_reason = "stagnant tangent";
            break;
        }
        du /= nt;
        dl /= nt;

        bool stepped = false;
        Field u_new;
        double l_new = 0.0;
        for (int h = 0; h <= opt.max_halvings; ++h) {
            Field up = u_cur + ds * du;
            double lp = l_cur + ds * dl;
            Field uc = up;
            double lc = lp;
            Corrector corr{pr, du, dl, up, lp};
            if (corr.run(uc, lc, opt.corrector_max_iter, opt.corrector_tol)) {
                u_new = uc;
                l_new = lc;
                stepped = true;
                break;
            }
            ds *= 0.5;
            if (ds < ds_min) break;
        }
        if (!stepped) {
            out.stop_reason = "corrector divergence";
            break;
        }
        record(u_new, l_new);
        u_prev = u_cur;
        l_prev = l_cur;
        u_cur = u_new;
        l_cur = l_new;
        ds = std::min(ds * 1.3, ds_max);
        if (l_cur > range_hi + 1e-12 || l_cur < range_lo - 1e-12) {
            out.stop_reason = "range end";
            break;
        }
    }
    if (out.stop_reason.empty()) out.stop_reason = "point budget";

    // fold flags from the lambda-direction sign changes
    for (size_t i = 1; i + 1 < out.points.size(); ++i) {
        const double dl0 = out.points[i].lambda - out.points[i - 1].lambda;
        const double dl1 = out.points[i + 1].lambda - out.points[i].lambda;
        if (dl0 * dl1 < 0.0) {
            out.points[i].fold_flag = true;
            ++out.fold_count;
        }
    }
    pr.set_lambda(lam0);
    return out;
}

Diagram bifurcation_diagram(Problem& pr, double lambda_lo, double lambda_hi,
                            double lambda_anchor, const std::vector<double>& a_list,
                            const CensusOptions& copt, const TraceOptions& topt) {
    Diagram diag;
    if (a_list.empty() || !(lambda_hi > lambda_lo)) return diag;
    const double a_saved = pr.a();
    const double lam_saved = pr.lambda();

    for (double a : a_list) {
        pr.set_a(a);
        pr.set_lambda(lambda_anchor);
        CensusOptions c = copt;
        c.expected_count = 0;
        auto census = multiplicity_census(pr, c);
        int branch_id = 0;
        for (const auto& sol : census.solutions) {
            pr.set_lambda(lambda_anchor);
            Branch br = trace_branch(pr, lambda_lo, lambda_hi, sol,
                                     census.eigs.lambda1_omega, topt);
            double lam_star = 0.0;
            bool has_fold = false;
            for (const auto& bp : br.points) {
                diag.rows.push_back({a, bp.lambda, bp.norm_mu, bp.energy, branch_id,
                                     bp.fold_flag, bp.residual});
                if (bp.fold_flag && !has_fold) {
                    lam_star = bp.lambda;
                    has_fold = true;
                }
            }
            if (has_fold) diag.folds.push_back({a, branch_id, lam_star});
            ++branch_id;
        }
    }
    pr.set_a(a_saved);
    pr.set_lambda(lam_saved);
    return diag;
}

}  // namespace kw

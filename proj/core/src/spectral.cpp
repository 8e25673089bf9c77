#include "kirchwell/spectral.hpp"

#include "kirchwell/linalg.hpp"

#include <cmath>

namespace kw {

namespace {

/// Rayleigh-quotient minimization of  u^T A u / u^T F u  over the open cone
/// {u^T F u > 0}, optionally restricted to {c^T u = 0}. Preconditioned
/// descent with exact line search on the pencil; each linear solve is
/// Jacobi-PCG on A.
struct ConeMinimizer {
    const SparseMat& A;   // SPD on the active subspace
    const Field& Fw;      // diagonal weight entries (w_i f_i), may change sign
    const Field* constraint = nullptr;  // c, enforce c^T u = 0
    double dual_tol = 1e-9;
    int max_iter = 600;
    SparseMat P;  // dual-norm operator (A shifted by the mass weights)

    void project(Field& u) const {
        if (!constraint) return;
        const double cc = constraint->squaredNorm();
        if (cc > 0.0) u -= (*constraint) * (constraint->dot(u) / cc);
    }

    double mass(const Field& u) const { return (Fw.array() * u.array() * u.array()).sum(); }

    // minimize the quotient along u + t d; returns best t (0 if no improvement)
    double line_search(const Field& u, const Field& d, const Field& Au, const Field& Ad) const {
        const double a0 = u.dot(Au), a1 = u.dot(Ad), a2 = d.dot(Ad);
        const double b0 = mass(u);
        const double b1 = (Fw.array() * u.array() * d.array()).sum();
        const double b2 = mass(d);
        // d/dt [(a0+2a1 t+a2 t^2)/(b0+2b1 t+b2 t^2)] = 0
        const double qa = a2 * b1 - a1 * b2;
        const double qb = a2 * b0 - a0 * b2;
        const double qc = a1 * b0 - a0 * b1;
        double best_t = 0.0;
        double best_q = a0 / b0;
        auto consider = [&](double t) {
            if (!std::isfinite(t)) return;
            const double den = b0 + 2.0 * b1 * t + b2 * t * t;
            if (den <= 0.0) return;
            const double q = (a0 + 2.0 * a1 * t + a2 * t * t) / den;
            if (q < best_q) {
                best_q = q;
                best_t = t;
            }
        };
        if (std::abs(qa) > 1e-300) {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                consider((-qb + sq) / (2.0 * qa));
                consider((-qb - sq) / (2.0 * qa));
            }
        } else if (std::abs(qb) > 1e-300) {
            consider(-qc / qb);
        }
        return best_t;
    }

    double dual_residual(const Field& u, double rho, const Field& Au) const {
        Field rhs = Au - rho * Fw.cwiseProduct(u);
        const auto sol = pcg_solve(P, rhs, 1e-10);
        return std::sqrt(std::max(0.0, rhs.dot(sol.x)));
    }

    // returns {rho, u normalized to mass 1}; u0 is the start
    std::pair<double, Field> run(Field u0, double* out_resid) const {
        project(u0);
        double m = mass(u0);
        KW_REQUIRE(m > 0.0, "eigen solve: start outside the positive-mass cone");
        Field u = u0 / std::sqrt(m);
        double rho = u.dot(A * u);
        double resid = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            Field Au = A * u;
            rho = u.dot(Au);
            Field grad = Au - rho * Fw.cwiseProduct(u);
            resid = dual_residual(u, rho, Au);
            if (resid <= dual_tol) break;
            auto pre = pcg_solve(A, grad, 1e-10);
            Field d = pre.x;
            project(d);
            const double t = line_search(u, d, Au, A * d);
            if (t == 0.0) break;
            u += t * d;
            m = mass(u);
            if (m <= 0.0) break;  // left the cone; restart handled by caller
            u /= std::sqrt(m);
        }
        if (out_resid) *out_resid = resid;
        return {rho, u};
    }
};

struct ActiveSet {
    std::vector<Eigen::Index> idx;   // active dof -> grid dof
    SparseMat A;                     // restricted operator
    Field Fw;                        // restricted w.*f
    SparseMat P;                     // restricted dual operator
    Field w;                         // restricted quadrature weights
};

ActiveSet restrict_system(const Problem& pr, double mu, bool omega_only) {
    const Grid& grid = pr.grid();
    ActiveSet as;
    const Eigen::Index n = grid.interior_count();
    std::vector<Eigen::Index> map(static_cast<size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!omega_only || pr.omega_mask()[static_cast<size_t>(i)]) {
            map[static_cast<size_t>(i)] = static_cast<Eigen::Index>(as.idx.size());
            as.idx.push_back(i);
        }
    }
    const Eigen::Index m = static_cast<Eigen::Index>(as.idx.size());
    KW_REQUIRE(m > 0, "eigen solve: empty active set");

    std::vector<Eigen::Triplet<double>> ta, tp;
    const SparseMat& K = grid.stiffness();
    for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
        const Eigen::Index jc = map[static_cast<size_t>(col)];
        if (jc < 0) continue;
        for (SparseMat::InnerIterator it(K, col); it; ++it) {
            const Eigen::Index ir = map[static_cast<size_t>(it.row())];
            if (ir < 0) continue;
            ta.emplace_back(ir, jc, it.value());
            tp.emplace_back(ir, jc, it.value());
        }
    }
    as.Fw.resize(m);
    as.w.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index i = as.idx[static_cast<size_t>(k)];
        const double wi = grid.weights()[i];
        as.w[k] = wi;
        as.Fw[k] = wi * pr.f()[i];
        const double vshift = omega_only ? 0.0 : mu * pr.V()[i];
        if (vshift > 0.0) ta.emplace_back(k, k, wi * vshift);
        tp.emplace_back(k, k, wi * (vshift + 1.0));
    }
    as.A.resize(m, m);
    as.A.setFromTriplets(ta.begin(), ta.end());
    as.P.resize(m, m);
    as.P.setFromTriplets(tp.begin(), tp.end());
    return as;
}

Field expand(const ActiveSet& as, const Field& sub, Eigen::Index n) {
    Field full = Field::Zero(n);
    for (size_t k = 0; k < as.idx.size(); ++k) full[as.idx[k]] = sub[static_cast<Eigen::Index>(k)];
    return full;
}

Field restrict_field(const ActiveSet& as, const Field& full) {
    Field sub(static_cast<Eigen::Index>(as.idx.size()));
    for (size_t k = 0; k < as.idx.size(); ++k) sub[static_cast<Eigen::Index>(k)] = full[as.idx[k]];
    return sub;
}

std::vector<Field> seed_fields(const Problem& pr, const ActiveSet& as, const EigenOptions& opt,
                               std::string_view op, bool second) {
    const Grid& grid = pr.grid();
    std::vector<Field> seeds;
    const Eigen::Index m = static_cast<Eigen::Index>(as.idx.size());

    Field bump(m), one = Field::Ones(m), wiggle(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& x = grid.node(as.idx[static_cast<size_t>(k)]);
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        bump[k] = std::exp(-2.0 * r2);
        wiggle[k] = (1.0 - 2.0 * r2) * std::exp(-r2);
    }
    seeds.push_back(bump);
    seeds.push_back(second ? wiggle : one);
    for (int s = static_cast<int>(seeds.size()); s < opt.multistarts; ++s) {
        RngStream rng(opt.seed, op, static_cast<uint64_t>(s));
        Field r(m);
        for (Eigen::Index k = 0; k < m; ++k)
            r[k] = second ? rng.normal() : std::abs(rng.normal());
        seeds.push_back(std::move(r));
    }
    return seeds;
}

EigenPair best_of(const Problem& pr, ActiveSet& as, std::vector<Field> seeds,
                  const Field* constraint_full, const EigenOptions& opt, bool principal) {
    const Grid& grid = pr.grid();
    Field csub;
    ConeMinimizer mini{as.A, as.Fw, nullptr, opt.dual_tol, opt.max_iter, as.P};
    if (constraint_full) {
        csub = restrict_field(as, *constraint_full);
        mini.constraint = &csub;
    }

    double best = 1e300;
    Field best_u;
    double best_resid = 0.0;
    for (auto& s : seeds) {
        Field s2 = s;
        mini.project(s2);
        if (mini.mass(s2) <= 0.0) continue;
        double resid = 0.0;
        auto [rho, u] = mini.run(s2, &resid);
        if (rho < best) {
            best = rho;
            best_u = u;
            best_resid = resid;
        }
    }
    KW_REQUIRE(best_u.size() > 0, "eigen solve: no start found a positive-mass field");

    // exact mass normalization, then sign
    const double m = mini.mass(best_u);
    best_u /= std::sqrt(m);
    if (principal) {
        Eigen::Index imax = 0;
        best_u.cwiseAbs().maxCoeff(&imax);
        if (best_u[imax] < 0.0) best_u = -best_u;
    }

    EigenPair out;
    out.value = best;
    out.field = expand(as, best_u, grid.interior_count());
    out.residual = best_resid;
    out.f_mass = mini.mass(best_u);
    if (constraint_full) out.orth = constraint_full->dot(out.field);
    return out;
}

}  // namespace

EigenPair lambda1_omega(const Problem& pr, const EigenOptions& opt) {
    auto as = restrict_system(pr, 0.0, true);
    bool fpos = false;
    for (Eigen::Index k = 0; k < as.Fw.size(); ++k)
        if (as.Fw[k] > 0.0) fpos = true;
    KW_REQUIRE(fpos, "lambda1_omega: f has no positive part on Omega");
    return best_of(pr, as, seed_fields(pr, as, opt, "lambda1_omega", false), nullptr, opt, true);
}

EigenPair lambda2_omega(const Problem& pr, const EigenPair& phi1, const EigenOptions& opt) {
    auto as = restrict_system(pr, 0.0, true);
    Field c = pr.grid().stiffness() * phi1.field;
    auto pair = best_of(pr, as, seed_fields(pr, as, opt, "lambda2_omega", true), &c, opt, false);
    return pair;
}

EigenPair lambda1_mu(const Problem& pr, double mu, const EigenOptions& opt,
                     const Field* omega_phi1) {
    auto as = restrict_system(pr, mu, false);
    auto seeds = seed_fields(pr, as, opt, "lambda1_mu", false);
    if (omega_phi1) seeds.insert(seeds.begin(), restrict_field(as, *omega_phi1));
    return best_of(pr, as, std::move(seeds), nullptr, opt, true);
}

EigenPair lambda2_mu(const Problem& pr, double mu, const EigenPair& phi1mu,
                     const EigenOptions& opt) {
    auto as = restrict_system(pr, mu, false);
    // mu-inner-product orthogonality: c = (K + mu W V) phi1mu
    Field c = as.A * restrict_field(as, phi1mu.field);
    Field cfull = expand(as, c, pr.grid().interior_count());
    // note: constraint lives on the active set; expand/restrict is lossless here
    auto pair = best_of(pr, as, seed_fields(pr, as, opt, "lambda2_mu", true), &cfull, opt, false);
    return pair;
}

MuScan mu_convergence_scan(const Problem& pr, const std::vector<double>& mu_list,
                           const EigenOptions& opt) {
    MuScan scan;
    auto p1 = lambda1_omega(pr, opt);
    auto p2 = lambda2_omega(pr, p1, opt);
    scan.lambda1_omega = p1.value;
    scan.lambda2_omega = p2.value;
    for (double mu : mu_list) {
        auto q1 = lambda1_mu(pr, mu, opt, &p1.field);
        auto q2 = lambda2_mu(pr, mu, q1, opt);
        Field d = q1.field - p1.field;
        MuScanRow row;
        row.mu = mu;
        row.lambda1_mu = q1.value;
        row.lambda2_mu = q2.value;
        row.gap1 = p1.value - q1.value;
        row.eigfield_dist = std::sqrt(std::max(0.0, pr.grid().inner_dirichlet(d, d)));
        scan.rows.push_back(row);
    }
    return scan;
}

double f_half_critical_norm(const Problem& pr) {
    const double q = pr.spec().N / 2.0;
    Field fabsq = pr.f().array().abs().pow(q);
    return std::pow(pr.grid().integrate(fabsq), 1.0 / q);
}

}  // namespace kw

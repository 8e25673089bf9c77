#include "kirchwell/solvers.hpp"

#include "kirchwell/linalg.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace kw {

namespace {

SparseMat well_operator(const Problem& pr) {
    const Grid& grid = pr.grid();
    SparseMat A = grid.stiffness();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(grid.interior_count()));
    for (Eigen::Index i = 0; i < grid.interior_count(); ++i) {
        const double v = pr.mu() * pr.V()[i];
        if (v != 0.0) trip.emplace_back(i, i, grid.weights()[i] * v);
    }
    SparseMat D(grid.interior_count(), grid.interior_count());
    D.setFromTriplets(trip.begin(), trip.end());
    return A + D;
}

/// Prefactored dual operator; turns nodal residuals into descent directions
/// and dual norms without re-running CG.
struct DualSolver {
    explicit DualSolver(const Problem& pr) {
        P = dual_operator(pr);
        lu.compute(P);
        KW_REQUIRE(lu.info() == Eigen::Success, "dual operator factorization failed");
    }
    SparseMat P;
    Eigen::SimplicialLDLT<SparseMat> lu;

    // returns (direction z = P^{-1} W r, dual norm sqrt(z . W r))
    std::pair<Field, double> direction(const Problem& pr, const Field& nodal_residual) const {
        Field rhs = pr.grid().weights().cwiseProduct(nodal_residual);
        Field z = lu.solve(rhs);
        return {z, std::sqrt(std::max(0.0, rhs.dot(z)))};
    }
};

Field positive_part(const Field& u) { return u.cwiseMax(0.0); }

double weighted_l2(const Grid& grid, const Field& r) {
    return std::sqrt((grid.weights().array() * r.array().square()).sum());
}

struct RayPoly {
    double c4 = 0.0;  // a/4 (d,K d)^2
    double c2 = 0.0;  // 1/2 (||d||_mu^2 - lambda int f d^2)
    double cp = 0.0;  // 1/p int g |d|^p
    double p = 0.0;
    double value(double s) const {
        return c4 * s * s * s * s + c2 * s * s - cp * std::pow(s, p);
    }
    double dvalue(double s) const {
        return 4.0 * c4 * s * s * s + 2.0 * c2 * s - p * cp * std::pow(s, p - 1.0);
    }
};

RayPoly ray_poly(const Problem& pr, const Field& d) {
    const Grid& grid = pr.grid();
    RayPoly poly;
    const double sK = grid.inner_dirichlet(d, d);
    const Field& w = grid.weights();
    const double qV = (w.array() * pr.V().array() * d.array().square()).sum();
    const double qf = (w.array() * pr.f().array() * d.array().square()).sum();
    poly.c4 = 0.25 * pr.a() * sK * sK;
    poly.c2 = 0.5 * (sK + pr.mu() * qV - pr.lambda() * qf);
    poly.cp = (w.array() * pr.g().array() * d.array().abs().pow(pr.p())).sum() / pr.p();
    poly.p = pr.p();
    return poly;
}

}  // namespace

std::string to_string(SolutionClass c) {
    switch (c) {
        case SolutionClass::ball_min: return "ball-min";
        case SolutionClass::exterior_min: return "exterior-min";
        case SolutionClass::mountain_pass: return "mountain-pass";
        case SolutionClass::refined: return "refined";
    }
    return "?";
}

void sign_normalize(Field& u) {
    Eigen::Index imax = 0;
    if (u.size() == 0) return;
    u.cwiseAbs().maxCoeff(&imax);
    if (u[imax] < 0.0) u = -u;
}

bool positivity_check(const Problem& pr, const Field& u) {
    // Strict positivity is certified on the well bottom; far-field tails of
    // localized states underflow to zero, so away from Omega we only require
    // "no sign change" at working precision.
    const double umax = u.maxCoeff();
    if (!(umax > 0.0)) return false;
    if (u.minCoeff() < -1e-12 * umax) return false;
    double omega_min = 1e300;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (pr.omega_mask()[static_cast<size_t>(i)]) omega_min = std::min(omega_min, u[i]);
    return omega_min > 0.0;
}

double ray_first_stationary(const Problem& pr, const Field& dir) {
    const RayPoly poly = ray_poly(pr, dir);
    if (poly.dvalue(1e-12) >= 0.0) return 0.0;  // ray ascends at 0, no near minimum
    double lo = 1e-12, hi = 1e-12;
    bool bracketed = false;
    for (int k = 0; k < 400; ++k) {
        const double nxt = hi * 1.12;
        if (poly.dvalue(nxt) >= 0.0) {
            lo = hi;
            hi = nxt;
            bracketed = true;
            break;
        }
        hi = nxt;
        if (hi > 1e8) break;
    }
    if (!bracketed) return 0.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (poly.dvalue(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SolveResult newton_refine(const Problem& pr, const Field& u0, const SolverOptions& opt) {
    const Grid& grid = pr.grid();
    grid.check_field(u0, "newton_refine");
    const Field& w = grid.weights();
    const Eigen::Index n = grid.interior_count();
    DualSolver dual(pr);

    Field u = u0;
    int it = 0;
    int stalls = 0;
    double dualres = 0.0;
    for (; it < opt.newton_max_iter; ++it) {
        const double s = grid.inner_dirichlet(u, u);
        Field Au = grid.laplacian_apply(u);
        Field r(n);
        for (Eigen::Index i = 0; i < n; ++i)
            r[i] = (pr.a() * s + 1.0) * Au[i] + pr.mu() * pr.V()[i] * u[i] -
                   pr.lambda() * pr.f()[i] * u[i] - pr.g()[i] * odd_power(u[i], pr.p());
        dualres = dual.direction(pr, r).second;
        if (dualres <= opt.newton_tol) break;

        // bordered system carrying the nonlocal rank-one exactly:
        // [ S_M          2a W Au ] [ delta ]   [ -W r ]
        // [ (W Au)^T       -1    ] [  q    ] = [   0  ]
        std::vector<Eigen::Triplet<double>> trip;
        const SparseMat& K = grid.stiffness();
        const double kfac = pr.a() * s + 1.0;
        for (Eigen::Index col = 0; col < K.outerSize(); ++col)
            for (SparseMat::InnerIterator kit(K, col); kit; ++kit)
                trip.emplace_back(kit.row(), col, kfac * kit.value());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double diag = pr.mu() * pr.V()[i] - pr.lambda() * pr.f()[i] -
                                (pr.p() - 1.0) * pr.g()[i] *
                                    std::pow(std::abs(u[i]), pr.p() - 2.0);
            trip.emplace_back(i, i, w[i] * diag);
            const double wAu = w[i] * Au[i];
            trip.emplace_back(i, n, 2.0 * pr.a() * wAu);
            trip.emplace_back(n, i, wAu);
        }
        trip.emplace_back(n, n, -1.0);
        SparseMat Sys(n + 1, n + 1);
        Sys.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<SparseMat> lu(Sys);
        KW_REQUIRE(lu.info() == Eigen::Success, "newton_refine: singular linearization");
        Field rhs(n + 1);
        rhs.head(n) = -w.cwiseProduct(r);
        rhs[n] = 0.0;
        Field sol = lu.solve(rhs);
        Field delta = sol.head(n);

        const double rn0 = weighted_l2(grid, r);
        double t = 1.0;
        bool accepted = false;
        Field best_u = u;
        for (int ls = 0; ls < 30; ++ls) {
            Field cand = u + t * delta;
            const double sc = grid.inner_dirichlet(cand, cand);
            Field Ac = grid.laplacian_apply(cand);
            Field rc(n);
            for (Eigen::Index i = 0; i < n; ++i)
                rc[i] = (pr.a() * sc + 1.0) * Ac[i] + pr.mu() * pr.V()[i] * cand[i] -
                        pr.lambda() * pr.f()[i] * cand[i] -
                        pr.g()[i] * odd_power(cand[i], pr.p());
            if (weighted_l2(grid, rc) < rn0 * (1.0 - 0.25 * t)) {
                best_u = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (++stalls >= 3)
                break;  // persistent divergence; report the residual we have
            u += (1.0 / 64.0) * delta;
        } else {
            stalls = 0;
            u = best_u;
        }
    }

    SolveResult res;
    res.field = u;
    res.iterations = it;
    res.residual = dual.direction(pr, gradient_field(pr, u)).second;
    res.energy = energy(pr, u).total;
    res.norm_mu = pr.norm_mu(u);
    res.positive = positivity_check(pr, u);
    return res;
}

std::pair<double, Field> sphere_min(const Problem& pr, double rho, const EigenPair& phi1mu,
                                    const SolverOptions& opt) {
    KW_REQUIRE(rho > 0.0, "sphere_min: rho must be positive");
    const Grid& grid = pr.grid();
    SparseMat A = well_operator(pr);
    Eigen::SimplicialLDLT<SparseMat> metric(A);
    KW_REQUIRE(metric.info() == Eigen::Success, "sphere_min: metric factorization failed");

    auto retract = [&](Field u) {
        const double nm = pr.norm_mu(u);
        KW_REQUIRE(nm > 0.0, "sphere_min: zero field on sphere");
        return Field(u * (rho / nm));
    };

    std::vector<Field> starts;
    starts.push_back(retract(phi1mu.field));
    starts.push_back(retract(-phi1mu.field));
    {
        Field bump = grid.sample([](const std::vector<double>& x) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            return std::exp(-2.0 * r2);
        });
        starts.push_back(retract(bump));
    }
    for (int s = static_cast<int>(starts.size()); s < opt.sphere_multistarts; ++s) {
        RngStream rng(opt.seed, "sphere_min", static_cast<uint64_t>(s));
        Field r(grid.interior_count());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            double r2 = 0.0;
            for (double xi : grid.node(i)) r2 += xi * xi;
            r[i] = rng.normal() * std::exp(-r2);
        }
        starts.push_back(retract(r));
    }

    double best = 1e300;
    Field best_u;
    for (auto& u0 : starts) {
        Field u = u0;
        double E = energy(pr, u).total;
        for (int it = 0; it < opt.sphere_max_iter; ++it) {
            Field gr = gradient_field(pr, u);
            Field z = metric.solve(grid.weights().cwiseProduct(gr));
            // tangent projection in the mu-metric
            const double zu = u.dot(A * z);
            z -= (zu / (rho * rho)) * u;
            const double nz = std::sqrt(std::max(z.dot(A * z), 0.0));
            if (nz < 1e-13 * std::max(1.0, rho)) break;
            double step = 0.4;
            bool moved = false;
            for (int ls = 0; ls < 40; ++ls) {
                Field cand = retract(u - (step * rho / nz) * z);
                const double Ec = energy(pr, cand).total;
                if (Ec < E) {
                    u = cand;
                    E = Ec;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        if (E < best) {
            best = E;
            best_u = u;
        }
    }
    return {best, best_u};
}

Field find_e0(const Problem& pr, double rho, const Field& phi1, const Field* gamma_maximizer) {
    const Grid& grid = pr.grid();
    const double p = pr.p();

    auto good = [&](const Field& u) {
        return energy(pr, u).total < 0.0 && pr.norm_mu(u) > rho;
    };

    if (p < 4.0) {
        Field phip = phi1.array().abs().pow(p);
        const double cg = grid.integrate(Field(pr.g().cwiseProduct(phip)));
        if (cg > 0.0) {
            const double l1 = grid.inner_dirichlet(phi1, phi1);  // f-normalized eigenfield
            const double ta =
                std::pow(2.0 * (p - 2.0) * cg / (pr.a() * p * l1 * l1), 1.0 / (4.0 - p));
            Field cand = ta * phi1;
            if (good(cand)) return cand;
        }
        if (gamma_maximizer) {
            const double F = grid.integrate(
                Field(pr.g().cwiseProduct(Field(gamma_maximizer->array().abs().pow(p)))));
            if (F > 0.0) {
                const double t =
                    std::pow(2.0 * (p - 2.0) * F / (pr.a() * p), 1.0 / (4.0 - p));
                Field cand = t * (*gamma_maximizer);
                if (good(cand)) return cand;
            }
        }
    }

    std::vector<Field> dirs;
    dirs.push_back(phi1);
    if (gamma_maximizer) dirs.push_back(*gamma_maximizer);
    dirs.push_back(grid.sample([](const std::vector<double>& x) {
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        return std::exp(-2.0 * r2);
    }));
    for (const Field& d : dirs) {
        const double nd = pr.norm_mu(d);
        if (!(nd > 0.0)) continue;
        double t = 1e-3 * std::max(rho, 1e-6) / nd;
        for (int k = 0; k < 900; ++k) {
            Field cand = t * d;
            if (good(cand)) return cand;
            t *= 1.05;
            if (t * nd > 1e8) break;
        }
    }
    throw Error("find_e0: no descent direction found within scale cap (regime violated)");
}

GeometryReport certify_geometry(const Problem& pr, double rho, const EigenPair& phi1mu,
                                const Field& phi1, const Field* gamma_maximizer,
                                const SolverOptions& opt) {
    GeometryReport rep;
    rep.rho = rho;
    auto [minval, argmin] = sphere_min(pr, rho, phi1mu, opt);
    rep.certified_min_on_sphere = minval;
    try {
        rep.e0 = find_e0(pr, rho, phi1, gamma_maximizer);
        rep.J_e0 = energy(pr, rep.e0).total;
        rep.e0_norm_mu = pr.norm_mu(rep.e0);
        double d0 = -1e300;
        for (int k = 0; k <= 1000; ++k)
            d0 = std::max(d0, energy(pr, Field((k / 1000.0) * rep.e0)).total);
        rep.D0 = d0;
    } catch (const Error&) {
        rep.pass = false;
        return rep;
    }
    rep.pass = rep.certified_min_on_sphere > 0.0 && rep.J_e0 < 0.0 && rep.e0_norm_mu > rho;
    return rep;
}

SolveResult mountain_pass(const Problem& pr, const Field& e0, const SolverOptions& opt) {
    const Grid& grid = pr.grid();
    grid.check_field(e0, "mountain_pass");
    DualSolver dual(pr);
    const int m = opt.path_points;

    std::vector<Field> path(static_cast<size_t>(m));
    std::vector<double> E(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
        path[static_cast<size_t>(j)] = (static_cast<double>(j) / (m - 1)) * e0;
        E[static_cast<size_t>(j)] = energy(pr, path[static_cast<size_t>(j)]).total;
    }
    const double path_cap = *std::max_element(E.begin(), E.end());

    auto try_newton = [&](const Field& u, int it_used) -> std::optional<SolveResult> {
        SolveResult cand = newton_refine(pr, u, opt);
        if (cand.residual > opt.accept_residual) return std::nullopt;
        if (!(cand.energy > 0.0) || cand.energy > path_cap + 1e-6) return std::nullopt;
        if (cand.norm_mu < 1e-10) return std::nullopt;
        sign_normalize(cand.field);
        cand = newton_refine(pr, cand.field, opt);
        cand.classification = SolutionClass::mountain_pass;
        cand.iterations = it_used;
        cand.positive = positivity_check(pr, cand.field);
        return cand;
    };

    for (int it = 0; it < opt.path_max_iter; ++it) {
        const int k = static_cast<int>(
            std::max_element(E.begin(), E.end()) - E.begin());
        if (k == 0 || k == m - 1)
            throw Error("mountain_pass: path collapse (geometry not present)");

        Field& u = path[static_cast<size_t>(k)];
        auto [z, rn] = dual.direction(pr, gradient_field(pr, u));
        if (rn <= opt.path_grad_tol) {
            if (auto res = try_newton(u, it)) return *res;
        } else if (it > 0 && it % 250 == 0) {
            if (auto res = try_newton(u, it)) return *res;
        }

        const double scale = std::max(pr.norm_mu(u), 1e-6);
        double step = 0.3;
        Field un = u;
        const double E0 = E[static_cast<size_t>(k)];
        for (int ls = 0; ls < 50; ++ls) {
            Field cand = u - (step * scale / std::max(rn, 1e-300)) * z;
            if (it % 10 == 0) cand = positive_part(cand);
            const double Ec = energy(pr, cand).total;
            if (Ec < E0) {
                un = cand;
                break;
            }
            step *= 0.5;
        }
        path[static_cast<size_t>(k)] = un;
        for (int j : {k - 1, k + 1}) {
            if (j > 0 && j < m - 1)
                path[static_cast<size_t>(j)] = 0.5 * (path[static_cast<size_t>(j - 1)] +
                                                      path[static_cast<size_t>(j + 1)]);
        }
        for (int j = std::max(1, k - 2); j <= std::min(m - 2, k + 2); ++j)
            E[static_cast<size_t>(j)] = energy(pr, path[static_cast<size_t>(j)]).total;
    }

    const int k = static_cast<int>(std::max_element(E.begin(), E.end()) - E.begin());
    if (auto res = try_newton(path[static_cast<size_t>(k)], opt.path_max_iter)) return *res;
    throw Error("mountain_pass: iteration cap without a critical path maximizer");
}

namespace {

Field descend_constrained(const Problem& pr, Field u, double rho, bool keep_inside,
                          const SolverOptions& opt) {
    DualSolver dual(pr);
    auto project = [&](Field v) {
        const double nm = pr.norm_mu(v);
        if (keep_inside && nm > rho && nm > 0.0) v *= rho / nm;
        if (!keep_inside && nm < rho && nm > 0.0) v *= rho / nm;  // retract to the sphere
        return v;
    };
    u = project(u);
    double E = energy(pr, u).total;
    for (int it = 0; it < opt.descent_max_iter; ++it) {
        auto [z, rn] = dual.direction(pr, gradient_field(pr, u));
        if (rn < 1e-7) break;
        const double scale = std::max(pr.norm_mu(u), 1e-4);
        double step = 0.5;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Field cand = u - (step * scale / rn) * z;
            if (it % 10 == 0) cand = positive_part(cand);
            cand = project(cand);
            const double Ec = energy(pr, cand).total;
            if (Ec < E) {
                u = cand;
                E = Ec;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return u;
}

}  // namespace

std::optional<SolveResult> ball_min(const Problem& pr, double rho, const EigenPair& phi1mu,
                                    const Field& phi1, const SolverOptions& opt) {
    KW_REQUIRE(rho > 0.0, "ball_min: rho must be positive");
    const Grid& grid = pr.grid();

    std::vector<Field> seeds;
    {
        const double s1 = ray_first_stationary(pr, phi1mu.field);
        if (s1 > 0.0) seeds.push_back(s1 * phi1mu.field);
        const double s2 = ray_first_stationary(pr, phi1);
        if (s2 > 0.0) seeds.push_back(s2 * phi1);
    }
    {
        Field bump = grid.sample([](const std::vector<double>& x) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            return std::exp(-2.0 * r2);
        });
        const double nb = pr.norm_mu(bump);
        if (nb > 0.0) seeds.push_back((0.3 * rho / nb) * bump);
    }
    for (int s = 0; s < 2; ++s) {
        RngStream rng(opt.seed, "ball_min", static_cast<uint64_t>(s));
        Field r(grid.interior_count());
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            double r2 = 0.0;
            for (double xi : grid.node(i)) r2 += xi * xi;
            r[i] = std::abs(rng.normal()) * std::exp(-r2);
        }
        const double nr = pr.norm_mu(r);
        if (nr > 0.0) seeds.push_back((0.3 * rho / nr) * r);
    }

    std::optional<SolveResult> best;
    for (auto& s : seeds) {
        if (pr.norm_mu(s) > rho) s *= 0.95 * rho / pr.norm_mu(s);
        Field u = descend_constrained(pr, s, rho, true, opt);
        if (pr.norm_mu(u) < 1e-12) continue;
        SolveResult cand = newton_refine(pr, u, opt);
        sign_normalize(cand.field);
        cand = newton_refine(pr, cand.field, opt);
        if (cand.residual > opt.accept_residual) continue;
        if (!(cand.energy < 0.0)) continue;
        if (cand.norm_mu > rho * (1.0 + 1e-6)) continue;  // escaped the ball
        if (cand.norm_mu < 1e-12) continue;
        cand.classification = SolutionClass::ball_min;
        cand.positive = positivity_check(pr, cand.field);
        if (!best || cand.energy < best->energy) best = cand;
    }
    return best;
}

SolveResult exterior_min(const Problem& pr, double rho, const Field& e0,
                         std::optional<double> energy_floor, const SolverOptions& opt) {
    KW_REQUIRE(pr.p() < 4.0, "exterior_min: coercive subquartic regime only");
    Field u = descend_constrained(pr, e0, rho, false, opt);
    SolveResult res = newton_refine(pr, u, opt);
    sign_normalize(res.field);
    res = newton_refine(pr, res.field, opt);
    res.classification = SolutionClass::exterior_min;
    res.positive = positivity_check(pr, res.field);
    if (res.norm_mu < rho * (1.0 - 1e-9) || !(res.energy < 0.0))
        throw Error("exterior_min: iterate collapsed into the ball with no negative "
                    "exterior value (regime violation)");
    if (energy_floor && res.energy < *energy_floor)
        throw Error("exterior_min: energy below the coercivity floor");
    return res;
}

std::optional<SolveResult> deflated_search(const Problem& pr,
                                           const std::vector<SolveResult>& known,
                                           const Field& phi1, const EigenPair& phi1mu,
                                           const SolverOptions& opt) {
    KW_REQUIRE(!known.empty(), "deflated_search: known set must be nonempty");
    const Grid& grid = pr.grid();
    const Field& w = grid.weights();
    const Eigen::Index n = grid.interior_count();
    SparseMat A = well_operator(pr);
    DualSolver dual(pr);

    auto deflation = [&](const Field& u, Field* grad_out) {
        double M = 1.0;
        Field gradM = Field::Zero(n);
        for (const auto& k : known) {
            Field d = u - k.field;
            const double d2 = std::max(d.dot(A * d), 1e-300);
            const double mk = 1.0 / d2 + 1.0;
            M *= mk;
            gradM += (-2.0 / (d2 * d2 * mk)) * (A * d);
        }
        if (grad_out) *grad_out = M * gradM;  // gradient of prod via log-derivative
        return M;
    };

    const double sep = 1e-3;
    auto distinct = [&](const Field& u) {
        for (const auto& k : known) {
            Field d = u - k.field;
            const double dist = std::sqrt(std::max(d.dot(A * d), 0.0));
            if (dist < sep * std::max(1.0, k.norm_mu)) return false;
        }
        return true;
    };

    // start rays: eigen directions and positive bumps at seeded scales
    std::vector<Field> starts;
    {
        std::vector<Field> dirs{phi1, phi1mu.field};
        dirs.push_back(grid.sample([](const std::vector<double>& x) {
            double r2 = 0.0;
            for (double xi : x) r2 += xi * xi;
            return std::exp(-2.0 * r2);
        }));
        for (size_t di = 0; di < dirs.size(); ++di) {
            const double nd = pr.norm_mu(dirs[di]);
            if (!(nd > 0.0)) continue;
            const double s0 = ray_first_stationary(pr, dirs[di]);
            if (s0 > 0.0) starts.push_back(s0 * dirs[di]);
            RngStream rng(opt.seed, "deflated_search", static_cast<uint64_t>(di));
            for (int k = 0; k < 3; ++k)
                starts.push_back((std::pow(10.0, rng.uniform(-1.5, 1.5)) / nd) * dirs[di]);
        }
    }

    for (auto& u0 : starts) {
        Field u = u0;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            Field r = gradient_field(pr, u);
            const double rn = weighted_l2(grid, r);
            if (rn < 1e-11) {
                converged = true;
                break;
            }
            // plain Newton step via the bordered system, then the deflation
            // rescaling tau = 1 / (1 - gradM . d / M)
            SolveResult one_step;
            {
                SolverOptions stepopt = opt;
                stepopt.newton_max_iter = 1;
                one_step = newton_refine(pr, u, stepopt);
            }
            Field d = one_step.field - u;
            if (d.norm() == 0.0) break;
            Field gradM;
            const double M = deflation(u, &gradM);
            const double denom = 1.0 - gradM.dot(d) / M;
            double tau = std::abs(denom) > 1e-8 ? 1.0 / denom : 100.0;
            tau = std::clamp(tau, -50.0, 50.0);
            if (tau == 0.0) tau = 1.0;
            // damp on the deflated merit M ||r||
            const double merit0 = M * rn;
            double t = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 25; ++ls) {
                Field cand = u + (t * tau) * d;
                const double mc = deflation(cand, nullptr) *
                                  weighted_l2(grid, gradient_field(pr, cand));
                if (mc < merit0) {
                    u = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        if (!converged) continue;
        if (pr.norm_mu(u) < 1e-10) continue;
        SolveResult res = newton_refine(pr, u, opt);  // polish on the undeflated residual
        sign_normalize(res.field);
        res = newton_refine(pr, res.field, opt);
        if (res.residual > opt.accept_residual) continue;
        if (!distinct(res.field) || res.norm_mu < 1e-10) continue;
        res.classification = SolutionClass::refined;
        res.positive = positivity_check(pr, res.field);
        return res;
    }
    return std::nullopt;
}

CensusResult multiplicity_census(Problem& pr, const CensusOptions& opt) {
    CensusResult out;
    const double p = pr.p();
    const double lam = pr.lambda();

    while (true) {
        out.mu_ladder.push_back(pr.mu());
        auto p1 = lambda1_omega(pr, opt.eigen);
        auto p2 = lambda2_omega(pr, p1, opt.eigen);
        auto q1 = lambda1_mu(pr, pr.mu(), opt.eigen, &p1.field);
        auto q2 = lambda2_mu(pr, pr.mu(), q1, opt.eigen);
        out.eigs = {p1.value, p2.value, q1.value, q2.value};

        Field psi;
        const Field* psi_ptr = nullptr;
        double rho_sphere = 0.0, rho_ball = 0.0;
        if (p > 4.0) {
            auto t = thresholds_superquartic(pr, out.eigs);
            rho_sphere = t.rho_a_lambda;
            rho_ball = t.rho_a_lambda;
        } else {
            auto ge = gamma_p(pr, p, opt.gamma);
            psi = ge.maximizer;
            psi_ptr = &psi;
            Field phip = p1.field.array().abs().pow(p);
            const double cg = pr.grid().integrate(Field(pr.g().cwiseProduct(phip)));
            auto t = thresholds_subquartic(pr, out.eigs, ge.value, cg);
            if (cg > 0.0 && pr.a() >= t.a0_p && lam < p1.value) {
                rho_sphere = t.rho_hat_a_lambda;
            } else if (lam < p1.value) {
                rho_sphere = t.rho_bar_a_lambda;
            } else {
                rho_sphere = std::min(t.rho0, t.rho_bar_a);
            }
            rho_ball = std::min(t.rho0 > 0.0 ? t.rho0 : t.rho_bar_a, t.rho_bar_a);
        }
        // keep the ball search region wide enough for the small-amplitude
        // branch that bifurcates from lambda_{1,mu} at finite mu
        const double snear = ray_first_stationary(pr, q1.field);
        if (snear > 0.0)
            rho_ball = std::max(rho_ball, 3.0 * snear * pr.norm_mu(q1.field));
        if (!(rho_sphere > 0.0)) rho_sphere = std::max(rho_ball, 1e-3);
        out.rho_sphere = rho_sphere;
        out.rho_ball = rho_ball;

        out.geometry = certify_geometry(pr, rho_sphere, q1, p1.field, psi_ptr, opt.solver);

        std::vector<SolveResult> sols;
        if (out.geometry.e0.size() > 0) {
            try {
                sols.push_back(mountain_pass(pr, out.geometry.e0, opt.solver));
            } catch (const Error&) {
                // no saddle found; census reports what exists
            }
            if (p < 4.0) {
                try {
                    sols.push_back(exterior_min(pr, rho_ball, out.geometry.e0,
                                                std::nullopt, opt.solver));
                } catch (const Error&) {
                }
            }
        }
        if (auto b = ball_min(pr, rho_ball, q1, p1.field, opt.solver)) sols.push_back(*b);

        for (int k = 0; k < opt.deflation_budget && !sols.empty(); ++k) {
            auto extra = deflated_search(pr, sols, p1.field, q1, opt.solver);
            if (!extra) break;
            sols.push_back(*extra);
        }

        // dedup: same energy within 1e-6 and nearby in the mu-norm
        std::vector<SolveResult> unique;
        for (auto& s : sols) {
            bool dup = false;
            for (auto& u : unique) {
                if (std::abs(s.energy - u.energy) > 1e-6) continue;
                Field d = s.field - u.field;
                if (pr.norm_mu(d) < 1e-3 * std::max(1.0, u.norm_mu)) {
                    dup = true;
                    break;
                }
            }
            if (!dup) unique.push_back(std::move(s));
        }
        std::stable_sort(unique.begin(), unique.end(),
                         [](const SolveResult& x, const SolveResult& y) {
                             return x.energy < y.energy;
                         });
        out.solutions = std::move(unique);
        out.positive_count = 0;
        for (const auto& s : out.solutions)
            if (s.positive) ++out.positive_count;
        out.final_mu = pr.mu();

        if (opt.expected_count <= 0 || out.positive_count >= opt.expected_count ||
            pr.mu() * 2.0 > opt.mu_max)
            break;
        pr.set_mu(pr.mu() * 2.0);
    }
    return out;
}

}  // namespace kw

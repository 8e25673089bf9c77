#include "kirchwell/constants.hpp"

#include "kirchwell/functional.hpp"

#include "kirchwell/linalg.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>

namespace kw {

namespace {

constexpr double kPi = std::numbers::pi;

double ball_volume(int N, double R) {
    return std::pow(kPi, 0.5 * N) / std::tgamma(0.5 * N + 1.0) * std::pow(R, N);
}

}  // namespace

double sobolev_constant(int N) {
    KW_REQUIRE(N >= 3, "sobolev_constant: N must be >= 3");
    const double ratio = std::exp((std::lgamma(0.5 * N) - std::lgamma(static_cast<double>(N))) / N);
    return std::sqrt(kPi * N * (N - 2.0)) * ratio;
}

double norm_g_inf(const Problem& pr) { return pr.g().cwiseAbs().maxCoeff(); }

double measure_V_below(const Problem& pr) {
    Field ind(pr.grid().interior_count());
    for (Eigen::Index i = 0; i < ind.size(); ++i)
        ind[i] = pr.V()[i] < pr.spec().c0 ? 1.0 : 0.0;
    return pr.grid().integrate(ind);
}

GammaEstimate gamma_p(const Problem& pr, double p, const GammaOptions& opt) {
    const Grid& grid = pr.grid();
    const double pstar = pr.spec().critical_exponent();
    KW_REQUIRE(p > 2.0 && p < std::min(4.0, pstar), "gamma_p: p outside (2, min{4, 2*})");

    // restrict to Omega nodes
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < grid.interior_count(); ++i)
        if (pr.omega_mask()[static_cast<size_t>(i)]) idx.push_back(i);
    KW_REQUIRE(!idx.empty(), "gamma_p: Omega carries no interior nodes");
    const Eigen::Index m = static_cast<Eigen::Index>(idx.size());

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<Eigen::Index> map(static_cast<size_t>(grid.interior_count()), -1);
    for (Eigen::Index k = 0; k < m; ++k) map[static_cast<size_t>(idx[static_cast<size_t>(k)])] = k;
    const SparseMat& K = grid.stiffness();
    for (Eigen::Index col = 0; col < K.outerSize(); ++col) {
        const Eigen::Index jc = map[static_cast<size_t>(col)];
        if (jc < 0) continue;
        for (SparseMat::InnerIterator it(K, col); it; ++it) {
            const Eigen::Index ir = map[static_cast<size_t>(it.row())];
            if (ir >= 0) trip.emplace_back(ir, jc, it.value());
        }
    }
    SparseMat Ks(m, m);
    Ks.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SparseMat> chol(Ks);
    KW_REQUIRE(chol.info() == Eigen::Success, "gamma_p: stiffness factorization failed");

    Field gw(m), fw(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index i = idx[static_cast<size_t>(k)];
        gw[k] = grid.weights()[i] * pr.g()[i];
        fw[k] = grid.weights()[i] * pr.f()[i];
    }
    auto objective = [&](const Field& u) { return (gw.array() * u.array().abs().pow(p)).sum(); };

    double best = -1e300;
    Field best_u;
    for (int s = 0; s < opt.multistarts; ++s) {
        RngStream rng(opt.seed, "gamma_p", static_cast<uint64_t>(s));
        Field u(m);
        if (s == 0) {
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto& x = grid.node(idx[static_cast<size_t>(k)]);
                double r2 = 0.0;
                for (double xi : x) r2 += xi * xi;
                u[k] = std::exp(-2.0 * r2);
            }
        } else {
            const double c = rng.uniform(0.0, 0.8);
            const double width = rng.uniform(0.05, 0.5);
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto& x = grid.node(idx[static_cast<size_t>(k)]);
                double r2 = 0.0;
                for (double xi : x) r2 += xi * xi;
                const double d = std::sqrt(r2) - c;
                u[k] = std::exp(-(d * d) / (width * width));
            }
        }
        u /= std::sqrt(std::max(u.dot(Ks * u), 1e-300));
        for (int it = 0; it < opt.max_iter; ++it) {
            Field dF(m);
            for (Eigen::Index k = 0; k < m; ++k)
                dF[k] = p * gw[k] * odd_power(u[k], p);
            Field z = chol.solve(dF);
            z -= (z.dot(Ks * u)) * u;
            const double nz = std::sqrt(std::max(z.dot(Ks * z), 0.0));
            if (nz < 1e-12) break;
            const double F0 = objective(u);
            double step = 0.5;
            bool moved = false;
            Field cand;
            for (int ls = 0; ls < 30; ++ls) {
                cand = (u + (step / nz) * z).cwiseAbs();
                cand /= std::sqrt(std::max(cand.dot(Ks * cand), 1e-300));
                if (objective(cand) > F0) {
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
            u = cand;
        }
        if ((fw.array() * u.array().square()).sum() < 0.0) continue;  // outside the cone
        const double F = objective(u);
        if (F > best) {
            best = F;
            best_u = u;
        }
    }
    KW_REQUIRE(best > 0.0, "gamma_p: no ascent direction with positive value (check (D2))");

    GammaEstimate est;
    est.value = best;
    est.maximizer = Field::Zero(grid.interior_count());
    for (Eigen::Index k = 0; k < m; ++k) est.maximizer[idx[static_cast<size_t>(k)]] = best_u[k];
    return est;
}

SuperquarticThresholds superquartic_from_inputs(const ThresholdInputs& in) {
    const double p = in.p;
    KW_REQUIRE(in.N == 3.0 && p > 4.0 && p < 6.0,
               "thresholds_superquartic: requires N=3 and p in (4,6)");
    const double a = in.a;
    const double lam = in.lambda;
    const double S = in.S;
    const double gn = in.g_inf;
    const double W = std::pow(in.measure_V_lt_c0, (6.0 - p) / 6.0);
    const double l1 = in.eigs.lambda1_omega, l2 = in.eigs.lambda2_omega;

    SuperquarticThresholds t;
    t.Lambda0 = (l2 - l1) / (2.0 * (l2 + l1));
    t.theta1_mu = 0.5 * (1.0 - lam / in.eigs.lambda1_mu);
    t.theta2_mu = 0.5 * (1.0 - lam / in.eigs.lambda2_mu);
    const double Spow = std::pow(S, p);
    if (lam < l1) {
        t.rho_lambda = std::pow(0.25 * ((l1 - lam) / (l1 + lam)) * p * Spow / (gn * W), 1.0 / (p - 2.0));
    }
    t.rho_a = std::min(std::pow(a * p * Spow / (128.0 * gn * W), 1.0 / (p - 4.0)),
                       std::sqrt(32.0 * t.Lambda0 / (137.0 * a)));
    t.rho_a_lambda = lam < l1 ? t.rho_lambda : t.rho_a;
    t.delta_a_mu = in.eigs.lambda1_mu / 128.0 * a * t.rho_a * t.rho_a;
    t.C1 = l1 / 4.0 * std::pow(1.0 / 128.0, (p - 2.0) / (p - 4.0)) *
           std::pow(p * Spow / (gn * W), 2.0 / (p - 4.0));
    t.C2 = l1 * (l2 - l1) / (4384.0 * (l2 + l1));
    t.delta_a = std::min(std::pow(a, (p - 2.0) / (p - 4.0)) * t.C1, t.C2);
    return t;
}

SuperquarticThresholds thresholds_superquartic(const Problem& pr, const EigenSummary& eigs) {
    ThresholdInputs in;
    in.a = pr.a();
    in.p = pr.p();
    in.lambda = pr.lambda();
    in.N = pr.spec().N;
    in.S = sobolev_constant(pr.spec().N);
    in.g_inf = norm_g_inf(pr);
    in.measure_V_lt_c0 = measure_V_below(pr);
    in.eigs = eigs;
    return superquartic_from_inputs(in);
}

SubquarticThresholds subquartic_from_inputs(const ThresholdInputs& in) {
    const double p = in.p;
    const double pstar = 2.0 * in.N / (in.N - 2.0);
    KW_REQUIRE(p > 2.0 && p < std::min(4.0, pstar),
               "thresholds_subquartic: p outside (2, min{4,2*})");
    const double a = in.a;
    const double lam = in.lambda;
    const double S = in.S;
    const double gn = in.g_inf;
    const double W = std::pow(in.measure_V_lt_c0, (pstar - p) / pstar);
    const double l1 = in.eigs.lambda1_omega, l2 = in.eigs.lambda2_omega;
    const double Spow = std::pow(S, p);
    const double cg = in.g_phi1_p;
    const double Gamma_p = in.Gamma_p;

    SubquarticThresholds t;
    if (lam < l1) {
        t.rho_bar_lambda =
            std::pow(0.25 * ((l1 - lam) / (l1 + lam)) * p * Spow / (gn * W), 1.0 / (p - 2.0));
    }
    t.rho_bar_a = std::pow((p - 2.0) * Gamma_p / (a * p), 1.0 / (4.0 - p));
    t.rho_bar_a_lambda = std::min(t.rho_bar_lambda, t.rho_bar_a);
    t.a0_p = 2.0 * (p - 2.0) * std::pow(4.0 - p, (4.0 - p) / (p - 2.0)) *
             std::pow(Gamma_p / p, 2.0 / (p - 2.0));

    const double Lambda0 = (l2 - l1) / (2.0 * (l2 + l1));
    const double acg = std::abs(cg);
    if (acg > 0.0) {
        t.B = std::pow(Spow * acg / (std::pow(2.0, p) * gn * (p - 1.0) * W * std::pow(l1, p / 2.0)),
                       (p - 1.0) / p);
        const double Bp = std::pow(t.B, p);
        const double denom = acg / (4.0 * p * std::pow(l1, p / 2.0)) +
                             std::pow(2.0, p - 2.0) * gn * (1.0 + p * Bp) * W / (p * Bp * Spow);
        t.rho0 = std::pow(Lambda0, 1.0 / (p - 2.0)) * std::pow(denom, -1.0 / (p - 2.0));
        const double rho_ball = std::min(t.rho0, t.rho_bar_a);
        const double kd = acg / (std::pow(2.0, (p + 6.0) / 2.0) * p * std::pow(l1, (p - 2.0) / 2.0));
        t.delta_bar_a = kd * std::pow(rho_ball, p - 2.0);
        t.delta_bar_a_mu = acg * in.eigs.lambda1_mu /
                           (std::pow(2.0, (p + 2.0) / 2.0) * p * std::pow(l1, p / 2.0)) *
                           std::pow(rho_ball, p - 2.0);
        t.C3 = kd * std::pow((p - 2.0) * Gamma_p / p, (p - 2.0) / (4.0 - p));
        t.C4 = kd * std::pow(t.rho0, p - 2.0);
    }
    if (cg > 0.0) {
        t.rho_hat_a = std::pow((p - 2.0) * cg / (a * p * std::pow(l1, p / 2.0)), 1.0 / (4.0 - p));
        t.rho_hat_a_lambda = std::min(t.rho_bar_lambda, t.rho_hat_a);
        const double raw = l1 - (4.0 - p) * std::pow(cg / p, 2.0 / (4.0 - p)) *
                                    std::pow(2.0 * (p - 2.0) / (a * l1 * l1),
                                             (p - 2.0) / (4.0 - p));
        t.lambda_a_plus = std::max(raw, 0.0);
        t.lambda_a_plus_clamped = raw < 0.0;
        t.t_a = std::pow(2.0 * (p - 2.0) * cg / (a * p * l1 * l1), 1.0 / (4.0 - p));
    }
    return t;
}

SubquarticThresholds thresholds_subquartic(const Problem& pr, const EigenSummary& eigs,
                                           double Gamma_p, double g_phi1_p) {
    ThresholdInputs in;
    in.a = pr.a();
    in.p = pr.p();
    in.lambda = pr.lambda();
    in.N = pr.spec().N;
    in.S = sobolev_constant(pr.spec().N);
    in.g_inf = norm_g_inf(pr);
    in.measure_V_lt_c0 = measure_V_below(pr);
    in.eigs = eigs;
    in.Gamma_p = Gamma_p;
    in.g_phi1_p = g_phi1_p;
    return subquartic_from_inputs(in);
}

double lambda_a_plus(const Problem& pr, double lambda1_omega, double g_phi1_p, double a) {
    const double p = pr.p();
    KW_REQUIRE(g_phi1_p > 0.0, "lambda_a_plus: requires int g phi1^p > 0");
    KW_REQUIRE(p > 2.0 && p < 4.0, "lambda_a_plus: p outside (2,4)");
    const double l1 = lambda1_omega;
    return l1 - (4.0 - p) * std::pow(g_phi1_p / p, 2.0 / (4.0 - p)) *
                    std::pow(2.0 * (p - 2.0) / (a * l1 * l1), (p - 2.0) / (4.0 - p));
}

CoercivityConstants coercivity_constants(const Problem& pr) {
    const int N = pr.spec().N;
    const double p = pr.p();
    const double a = pr.a();
    const double lam = pr.lambda();
    const double S = sobolev_constant(N);
    const double gn = norm_g_inf(pr);
    const double pstar = pr.spec().critical_exponent();
    const double meas = measure_V_below(pr);
    const double fnorm = f_half_critical_norm(pr);
    KW_REQUIRE(p < std::min(4.0, pstar), "coercivity_constants: subquartic regime only");

    CoercivityConstants c;
    c.C_bar_0 = std::pow(2.0 / (N - 2.0), 2.0);
    c.mu0_well = S * S / (pr.spec().c0 * std::pow(meas, (pstar - 2.0) / pstar));
    const double ftail = 3.0 * lam * lam * fnorm * fnorm / (4.0 * a * std::pow(S, 4.0));

    if (N == 3) {
        KW_REQUIRE(pr.spec().c_star && pr.spec().R_star,
                   "coercivity_constants: c_star/R_star required for N=3");
        const double cs = *pr.spec().c_star;
        const double Rs = *pr.spec().R_star;
        c.mu_threshold = 4.0 * (4.0 - p) * std::pow(cs * gn / (p * p), 1.0 / (4.0 - p)) *
                         std::pow(6.0 * std::sqrt(2.0) * (p - 2.0) * c.C_bar_0 / (a * S * S * S),
                                  (p - 2.0) / (4.0 - p));
        const double ballR = ball_volume(3, Rs);
        c.C_N_a_lambda = (4.0 - p) / p * std::pow(2.0, (p - 2.0) / (4.0 - p)) *
                             std::pow(ballR, (12.0 - 2.0 * p) / (12.0 - 3.0 * p)) *
                             std::pow(gn / std::pow(S, p), 4.0 / (4.0 - p)) *
                             std::pow(3.0 / a, p / (4.0 - p)) +
                         ftail;
    } else if (N == 4) {
        c.mu_threshold = 4.0 * (4.0 - p) / pr.spec().c0 * std::pow(gn / p, 2.0 / (4.0 - p)) *
                         std::pow(6.0 * (p - 2.0) / (a * std::pow(S, 4.0)), (p - 2.0) / (4.0 - p));
        c.C_N_a_lambda = (4.0 - p) * meas / p * std::pow(gn / std::pow(S, p), 4.0 / (4.0 - p)) *
                             std::pow(3.0 / a, p / (4.0 - p)) +
                         ftail;
    } else {
        c.mu_threshold = 8.0 * (pstar - p) * gn / ((pstar - 2.0) * p * pr.spec().c0);
        const double first =
            (4.0 - p) / (4.0 * p) *
            std::pow(std::pow(2.0, (pstar - p) / (pstar - 2.0)) *
                         std::pow(meas, (pstar - p) / pstar) * gn / std::pow(S, p),
                     4.0 / (4.0 - p)) *
            std::pow(3.0 / a, p / (4.0 - p));
        const double second = (4.0 - pstar) / 4.0 *
                              std::pow((p - 2.0) * gn / ((pstar - 2.0) * p * std::pow(S, pstar)),
                                       4.0 / (4.0 - pstar)) *
                              std::pow(3.0 * pstar / a, pstar / (4.0 - pstar));
        c.C_N_a_lambda = first + second + ftail;
    }
    return c;
}

ConstantsReport assemble_constants(const Problem& pr, const EigenOptions& eopt,
                                   const GammaOptions& gopt) {
    ConstantsReport rep;
    const int N = pr.spec().N;
    const double p = pr.p();
    rep.S = sobolev_constant(N);
    rep.C_bar_0 = std::pow(2.0 / (N - 2.0), 2.0);
    rep.measure_V_lt_c0 = measure_V_below(pr);
    rep.norm_f_N2 = f_half_critical_norm(pr);
    rep.norm_g_inf = norm_g_inf(pr);
    rep.mu0 = rep.S * rep.S /
              (pr.spec().c0 * std::pow(rep.measure_V_lt_c0,
                                       (pr.spec().critical_exponent() - 2.0) /
                                           pr.spec().critical_exponent()));

    auto p1 = lambda1_omega(pr, eopt);
    auto p2 = lambda2_omega(pr, p1, eopt);
    auto q1 = lambda1_mu(pr, pr.mu(), eopt, &p1.field);
    auto q2 = lambda2_mu(pr, pr.mu(), q1, eopt);
    rep.eigs = {p1.value, p2.value, q1.value, q2.value};
    rep.Lambda0 = (p2.value - p1.value) / (2.0 * (p2.value + p1.value));
    rep.theta1_mu = 0.5 * (1.0 - pr.lambda() / q1.value);
    rep.theta2_mu = 0.5 * (1.0 - pr.lambda() / q2.value);

    Field phip = p1.field.array().abs().pow(p);
    rep.g_phi1_p = pr.grid().integrate(Field(pr.g().cwiseProduct(phip)));

    if (N == 3 && p > 4.0) {
        auto t = thresholds_superquartic(pr, rep.eigs);
        rep.rho_lambda = t.rho_lambda;
        rep.rho_a = t.rho_a;
        rep.rho_a_lambda = t.rho_a_lambda;
        rep.delta_a_mu = t.delta_a_mu;
        rep.delta_a = t.delta_a;
        rep.C1 = t.C1;
        rep.C2 = t.C2;
    } else if (p < 4.0) {
        auto ge = gamma_p(pr, p, gopt);
        rep.Gamma_p = ge.value;
        auto t = thresholds_subquartic(pr, rep.eigs, ge.value, rep.g_phi1_p);
        rep.rho_bar_lambda = t.rho_bar_lambda;
        rep.rho_bar_a = t.rho_bar_a;
        rep.a0_p = t.a0_p;
        rep.B = t.B;
        rep.rho0 = t.rho0;
        rep.delta_bar_a_mu = t.delta_bar_a_mu;
        rep.delta_bar_a = t.delta_bar_a;
        rep.C3 = t.C3;
        rep.C4 = t.C4;
        rep.rho_hat_a = t.rho_hat_a;
        rep.lambda_a_plus = t.lambda_a_plus;
        rep.lambda_a_plus_clamped = t.lambda_a_plus_clamped;
        auto c = coercivity_constants(pr);
        rep.C_N_a_lambda = c.C_N_a_lambda;
        if (N == 3)
            rep.mu0_N3 = c.mu_threshold;
        else
            rep.mu1 = c.mu_threshold;
    }
    return rep;
}

}  // namespace kw

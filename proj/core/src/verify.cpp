#include "kirchwell/verify.hpp"

#include "kirchwell/linalg.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

namespace kw {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

struct Timer {
    Clock::time_point t0 = Clock::now();
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

CheckResult make_check(std::string id, std::string desc, bool pass, std::string measured,
                       double secs) {
    return CheckResult{std::move(id), std::move(desc), pass, std::move(measured), secs};
}

ProblemSpec dirichlet_box_spec(int dim, double L, int n) {
    // whole-box Dirichlet problem with unit weight: the analytic eigen oracle
    ProblemSpec s;
    s.N = 3;
    s.p = 5.0;
    s.a = 1.0;
    s.mu = 0.0;
    s.c0 = 0.25;
    s.grid = GridSpec{.dim = dim, .mode = GridMode::tensor, .half_length = L, .nodes_per_axis = n};
    s.V = [](const std::vector<double>&) { return 0.0; };
    s.f = [](const std::vector<double>&) { return 1.0; };
    s.g.base = [](const std::vector<double>&) { return 1.0; };
    s.g.shape = [](const std::vector<double>&) { return 0.0; };
    s.g.kappa = 1.0;
    s.omega_indicator = [](const std::vector<double>&) { return 1.0; };
    return s;
}

Field random_field(const Grid& grid, RngStream& rng, bool localized = true) {
    Field u(grid.interior_count());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double r2 = 0.0;
        for (double xi : grid.node(i)) r2 += xi * xi;
        u[i] = rng.normal() * (localized ? std::exp(-r2) : 1.0);
    }
    return u;
}

// ---- eigen criteria ------------------------------------------------------

void criterion_eigen_1d(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto pr = Problem::make(dirichlet_box_spec(1, 0.5, 1001));
    EigenOptions opt;
    opt.seed = seed;
    auto p1 = lambda1_omega(pr, opt);
    auto p2 = lambda2_omega(pr, p1, opt);
    const double e1 = std::abs(p1.value - kPi * kPi) / (kPi * kPi);
    const double e2 = std::abs(p2.value - 4.0 * kPi * kPi) / (4.0 * kPi * kPi);
    out.push_back(make_check(
        "A1", "interval eigen oracle: lambda1 ~ pi^2, lambda2 ~ 4 pi^2 within 0.5%",
        e1 <= 5e-3 && e2 <= 5e-3,
        "lambda1=" + fmt(p1.value) + " err=" + fmt(e1) + "; lambda2=" + fmt(p2.value) +
            " err=" + fmt(e2),
        t.seconds()));
}

void criterion_eigen_3d(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto pr = Problem::make(dirichlet_box_spec(3, 1.0, 33));
    EigenOptions opt;
    opt.seed = seed;
    auto p1 = lambda1_omega(pr, opt);
    const double target = 3.0 * kPi * kPi / 4.0;
    const double err = std::abs(p1.value - target) / target;
    out.push_back(make_check("A2", "cube eigen oracle: lambda1 ~ 3 pi^2/4 within 2%",
                             err <= 2e-2, "lambda1=" + fmt(p1.value) + " err=" + fmt(err),
                             t.seconds()));
}

void criterion_mu_scan(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto pr = Problem::make(canonical_problem(Canonical::TP_BALL_P5));
    EigenOptions opt;
    opt.seed = seed;
    auto scan = mu_convergence_scan(pr, {1.0, 10.0, 100.0, 1000.0}, opt);
    bool monotone = true, bounded = true, dist_down = true;
    for (size_t i = 0; i < scan.rows.size(); ++i) {
        if (i > 0 && scan.rows[i].lambda1_mu < scan.rows[i - 1].lambda1_mu) monotone = false;
        if (scan.rows[i].lambda1_mu > scan.lambda1_omega + 1e-10) bounded = false;
        if (i > 0 && scan.rows[i].eigfield_dist >= scan.rows[i - 1].eigfield_dist)
            dist_down = false;
    }
    const double relgap = scan.rows.back().gap1 / scan.lambda1_omega;
    const bool pass = monotone && bounded && dist_down && relgap <= 0.10;
    std::ostringstream m;
    m << "lambda1_omega=" << fmt(scan.lambda1_omega) << " lambda1_mu(1000)="
      << fmt(scan.rows.back().lambda1_mu) << " relgap=" << fmt(relgap)
      << " monotone=" << monotone << " bounded=" << bounded << " dist_down=" << dist_down;
    out.push_back(make_check(
        "A3", "well eigenvalue scan: monotone, below the bottom value, final gap <= 10%",
        pass, m.str(), t.seconds()));

    Timer t2;
    const double mid = 0.5 * (scan.lambda1_omega + scan.lambda2_omega);
    const bool pass2 = scan.rows.back().lambda2_mu > mid;
    out.push_back(make_check(
        "A4", "second well eigenvalue exceeds the bottom midpoint at mu=1000",
        pass2,
        "lambda2_mu=" + fmt(scan.rows.back().lambda2_mu) + " midpoint=" + fmt(mid),
        t2.seconds()));
}

// ---- functional criteria --------------------------------------------------

void criterion_gradient_fd(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    double worst = 0.0;
    std::string where;
    for (Canonical which : {Canonical::TP_CUBE_P5, Canonical::TP_BALL_P5,
                            Canonical::TP_BALL_P3_NEG, Canonical::TP_BALL_P3_POS}) {
        ProblemSpec spec = canonical_problem(which);
        spec.lambda = 3.0;
        auto pr = Problem::make(spec);
        RngStream rng(seed, "gradient_fd:" + to_string(which), 0);
        const double h = 1e-5;
        for (int k = 0; k < 50; ++k) {
            Field u = random_field(pr.grid(), rng);
            Field phi = random_field(pr.grid(), rng);
            const double analytic = directional_derivative(pr, u, phi);
            const double jp = energy(pr, Field(u + h * phi)).total;
            const double jm = energy(pr, Field(u - h * phi)).total;
            const double fd = (jp - jm) / (2.0 * h);
            const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
            if (err > worst) {
                worst = err;
                where = to_string(which);
            }
        }
    }
    out.push_back(make_check("A5",
                             "analytic directional derivative matches central differences "
                             "to 1e-5 on 50 random pairs per problem",
                             worst <= 1e-5, "worst=" + fmt(worst) + " at " + where,
                             t.seconds()));
}

void criterion_coercivity(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    ProblemSpec spec = canonical_problem(Canonical::TP_BALL_P3_NEG);
    auto pr = Problem::make(spec);
    EigenOptions eopt;
    eopt.seed = seed;
    GammaOptions gopt;
    gopt.seed = seed;
    auto p1 = lambda1_omega(pr, eopt);
    auto ge = gamma_p(pr, pr.p(), gopt);
    const double a0 = 2.0 * (pr.p() - 2.0) *
                      std::pow(4.0 - pr.p(), (4.0 - pr.p()) / (pr.p() - 2.0)) *
                      std::pow(ge.value / pr.p(), 2.0 / (pr.p() - 2.0));
    pr.set_a(0.5 * a0);
    pr.set_lambda(0.5 * p1.value);
    auto cc = coercivity_constants(pr);
    const double mu = 2.0 * std::max(cc.mu0_well, cc.mu_threshold);
    pr.set_mu(mu);

    RngStream rng(seed, "coercivity", 0);
    int violations = 0;
    double margin = 1e300;
    for (int k = 0; k < 1000; ++k) {
        Field u = random_field(pr.grid(), rng, k % 2 == 0);
        const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
        const double nm = pr.norm_mu(u);
        if (!(nm > 0.0)) continue;
        u *= scale / nm;
        const double J = energy(pr, u).total;
        const double bound = 0.25 * scale * scale - 1.05 * cc.C_N_a_lambda;
        margin = std::min(margin, J - bound);
        if (J < bound) ++violations;
    }
    std::ostringstream m;
    m << "mu=" << fmt(mu) << " C=" << fmt(cc.C_N_a_lambda) << " violations=" << violations
      << " min_margin=" << fmt(margin);
    out.push_back(make_check("A6",
                             "quadratic lower bound J >= ||u||_mu^2/4 - 1.05 C over 1000 "
                             "random fields at twice the threshold depth",
                             violations == 0, m.str(), t.seconds()));
}

// ---- theorem-regime criteria ----------------------------------------------

struct P5Setup {
    Problem pr;
    EigenPair p1, p2, q1, q2;
    SuperquarticThresholds th;
};

P5Setup p5_setup(uint64_t seed, double lambda_factor, double delta_frac) {
    ProblemSpec spec = canonical_problem(Canonical::TP_BALL_P5);
    auto pr = Problem::make(spec);
    EigenOptions eopt;
    eopt.seed = seed;
    auto p1 = lambda1_omega(pr, eopt);
    auto p2 = lambda2_omega(pr, p1, eopt);
    auto q1 = lambda1_mu(pr, pr.mu(), eopt, &p1.field);
    auto q2 = lambda2_mu(pr, pr.mu(), q1, eopt);
    EigenSummary eigs{p1.value, p2.value, q1.value, q2.value};
    auto th0 = thresholds_superquartic(pr, eigs);
    const double lam = lambda_factor * p1.value + delta_frac * th0.delta_a;
    pr.set_lambda(lam);
    auto th = thresholds_superquartic(pr, eigs);
    return P5Setup{std::move(pr), std::move(p1), std::move(p2), std::move(q1), std::move(q2), th};
}

void criterion_geometry(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto s = p5_setup(seed, 1.0, 0.5);  // lambda = lambda1 + delta_a/2
    SolverOptions sopt;
    sopt.seed = seed;
    auto rep = certify_geometry(s.pr, s.th.rho_a_lambda, s.q1, s.p1.field, nullptr, sopt);
    std::ostringstream m;
    m << "rho=" << fmt(rep.rho) << " sphere_min=" << fmt(rep.certified_min_on_sphere)
      << " J(e0)=" << fmt(rep.J_e0) << " |e0|_mu=" << fmt(rep.e0_norm_mu)
      << " delta_a=" << fmt(s.th.delta_a);
    out.push_back(make_check("A7",
                             "pass geometry just right of the principal eigenvalue: "
                             "positive sphere minimum and a negative far point",
                             rep.pass, m.str(), t.seconds()));
}

void criterion_thm1_census(std::vector<CheckResult>& out, uint64_t seed) {
    {
        Timer t;
        auto s = p5_setup(seed, 0.9, 0.0);
        CensusOptions copt;
        copt.solver.seed = seed;
        copt.eigen.seed = seed;
        copt.gamma.seed = seed;
        copt.expected_count = 1;
        auto census = multiplicity_census(s.pr, copt);
        int good = 0;
        for (const auto& sol : census.solutions)
            if (sol.positive && sol.residual <= 1e-8) ++good;
        std::ostringstream m;
        m << "solutions=" << census.solutions.size() << " positive=" << census.positive_count
          << " mu=" << fmt(census.final_mu);
        out.push_back(make_check("A8a",
                                 "one positive solution below the principal eigenvalue "
                                 "(residual <= 1e-8)",
                                 good >= 1, m.str(), t.seconds()));
    }
    {
        Timer t;
        auto s = p5_setup(seed, 1.0, 0.5);
        CensusOptions copt;
        copt.solver.seed = seed;
        copt.eigen.seed = seed;
        copt.gamma.seed = seed;
        copt.expected_count = 2;
        auto census = multiplicity_census(s.pr, copt);
        int pos_energy = 0, neg_energy = 0;
        for (const auto& sol : census.solutions) {
            if (!sol.positive || sol.residual > 1e-8) continue;
            (sol.energy > 0.0 ? pos_energy : neg_energy)++;
        }
        std::ostringstream m;
        m << "solutions=" << census.solutions.size() << " energies(+)=" << pos_energy
          << " energies(-)=" << neg_energy << " mu=" << fmt(census.final_mu);
        out.push_back(make_check("A8b",
                                 "two positive solutions just right of the principal "
                                 "eigenvalue with energy signs (+,-)",
                                 pos_energy >= 1 && neg_energy >= 1, m.str(), t.seconds()));
    }
}

struct P3Setup {
    Problem pr;
    EigenPair p1;
    double a0 = 0.0;
    double cg = 0.0;
    double Gamma = 0.0;
};

P3Setup p3_setup(Canonical which, double a_factor, uint64_t seed) {
    ProblemSpec spec = canonical_problem(which);
    auto pr = Problem::make(spec);
    EigenOptions eopt;
    eopt.seed = seed;
    auto p1 = lambda1_omega(pr, eopt);
    GammaOptions gopt;
    gopt.seed = seed;
    auto ge = gamma_p(pr, pr.p(), gopt);
    const double p = pr.p();
    const double a0 = 2.0 * (p - 2.0) * std::pow(4.0 - p, (4.0 - p) / (p - 2.0)) *
                      std::pow(ge.value / p, 2.0 / (p - 2.0));
    Field phip = p1.field.array().abs().pow(p);
    const double cg = pr.grid().integrate(Field(pr.g().cwiseProduct(phip)));
    pr.set_a(a_factor * a0);
    return P3Setup{std::move(pr), std::move(p1), a0, cg, ge.value};
}

void census_signs(const CensusResult& census, int& pos_e, int& neg_e) {
    pos_e = neg_e = 0;
    for (const auto& sol : census.solutions) {
        if (!sol.positive || sol.residual > 1e-8) continue;
        (sol.energy > 0.0 ? pos_e : neg_e)++;
    }
}

void criterion_thm2_census(std::vector<CheckResult>& out, uint64_t seed) {
    auto run_one = [&](double lambda_mode, int expected, const char* id, const char* desc,
                       int need_pos, int need_neg) {
        Timer t;
        auto s = p3_setup(Canonical::TP_BALL_P3_NEG, 0.5, seed);
        const double l1 = s.p1.value;
        EigenSummary eigs{l1, 0.0, 0.0, 0.0};
        double lam = lambda_mode * l1;
        if (lambda_mode > 1.0 + 1e-9) lam = l1 * lambda_mode;  // explicit factor
        s.pr.set_lambda(lam);
        if (lambda_mode == -1.0) {
            // the lambda window above the bottom eigenvalue
            EigenOptions eopt;
            eopt.seed = seed;
            auto q1 = lambda1_mu(s.pr, s.pr.mu(), eopt, &s.p1.field);
            auto p2 = lambda2_omega(s.pr, s.p1, eopt);
            auto q2 = lambda2_mu(s.pr, s.pr.mu(), q1, eopt);
            eigs = EigenSummary{l1, p2.value, q1.value, q2.value};
            auto th = thresholds_subquartic(s.pr, eigs, s.Gamma, s.cg);
            lam = l1 + 0.5 * th.delta_bar_a;
            s.pr.set_lambda(lam);
        }
        CensusOptions copt;
        copt.solver.seed = seed;
        copt.eigen.seed = seed;
        copt.gamma.seed = seed;
        copt.expected_count = expected;
        auto census = multiplicity_census(s.pr, copt);
        int pos_e = 0, neg_e = 0;
        census_signs(census, pos_e, neg_e);
        std::ostringstream m;
        m << "a=" << fmt(s.pr.a()) << " lambda=" << fmt(lam) << " found="
          << census.solutions.size() << " (+)=" << pos_e << " (-)=" << neg_e
          << " mu=" << fmt(census.final_mu);
        out.push_back(
            make_check(id, desc, pos_e >= need_pos && neg_e >= need_neg, m.str(), t.seconds()));
    };
    run_one(0.5, 2, "A9a",
            "small nonlocal coefficient, lambda at half the principal value: two positive "
            "solutions with signs (+,-)",
            1, 1);
    run_one(1.0, 2, "A9b",
            "small nonlocal coefficient, lambda at the principal value: at least two "
            "positive solutions",
            1, 1);
    run_one(-1.0, 3, "A9c",
            "small nonlocal coefficient, lambda inside the upper window: at least three "
            "positive solutions with signs (+,-,-)",
            1, 2);
}

void criterion_thm3_census(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto s = p3_setup(Canonical::TP_BALL_P3_POS, 2.0, seed);
    KW_REQUIRE(s.cg > 0.0, "thm3: canonical sign tuning failed");
    const double l1 = s.p1.value;
    const double lap = lambda_a_plus(s.pr, l1, s.cg, s.pr.a());
    const double lam = 0.5 * (lap + l1);
    s.pr.set_lambda(lam);
    CensusOptions copt;
    copt.solver.seed = seed;
    copt.eigen.seed = seed;
    copt.gamma.seed = seed;
    copt.expected_count = 2;
    auto census = multiplicity_census(s.pr, copt);
    int pos = 0;
    for (const auto& sol : census.solutions)
        if (sol.positive && sol.residual <= 1e-8) ++pos;
    std::ostringstream m;
    m << "lambda_a_plus=" << fmt(lap) << " lambda=" << fmt(lam) << " positive=" << pos
      << " mu=" << fmt(census.final_mu);
    out.push_back(make_check("A10a",
                             "large nonlocal coefficient with favorable weight sign: two "
                             "positive solutions between the fold bound and the principal value",
                             pos >= 2, m.str(), t.seconds()));

    Timer t2;
    const double p = s.pr.p();
    const double ta = std::pow(2.0 * (p - 2.0) * s.cg / (s.pr.a() * p * l1 * l1), 1.0 / (4.0 - p));
    Field e0 = ta * s.p1.field;
    const double J = energy(s.pr, e0).total;
    const double predicted = 0.5 * ta * ta * (lap - lam);
    const double err = std::abs(J - predicted) / std::abs(predicted);
    out.push_back(make_check("A10b",
                             "scaled eigenfield energy matches the closed form "
                             "t_a^2 (lambda_a_plus - lambda)/2 within 5%",
                             err <= 0.05,
                             "J(e0)=" + fmt(J) + " predicted=" + fmt(predicted) +
                                 " err=" + fmt(err),
                             t2.seconds()));
}

// ---- constants identities ---------------------------------------------------

void criterion_constants_identities(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    RngStream rng(seed, "constants_identities", 0);
    double worst_super = 0.0, worst_sub = 0.0;
    for (int k = 0; k < 100; ++k) {
        ThresholdInputs in;
        in.N = 3.0;
        in.S = sobolev_constant(3);
        in.a = std::pow(10.0, rng.uniform(-2.0, 2.0));
        in.g_inf = std::pow(10.0, rng.uniform(-1.0, 2.0));
        in.measure_V_lt_c0 = std::pow(10.0, rng.uniform(-1.0, 1.5));
        const double l1 = rng.uniform(1.0, 20.0);
        const double l2 = l1 * rng.uniform(1.5, 6.0);
        in.eigs = {l1, l2, l1 * rng.uniform(0.8, 0.999), l2 * rng.uniform(0.9, 1.1)};
        in.lambda = l1 * rng.uniform(0.2, 1.5);

        // superquartic: the min-form window equals the composed one
        in.p = rng.uniform(4.3, 5.7);
        auto ts = superquartic_from_inputs(in);
        const double composed = l1 * in.a * ts.rho_a * ts.rho_a / 512.0;
        worst_super = std::max(worst_super,
                               std::abs(ts.delta_a - composed) / std::max(1e-300, composed));

        // subquartic: min-form of the upper window from its building blocks
        in.p = rng.uniform(2.3, 3.7);
        in.Gamma_p = std::pow(10.0, rng.uniform(-2.0, 1.0));
        in.g_phi1_p = (k % 2 == 0 ? -1.0 : 1.0) * std::pow(10.0, rng.uniform(-2.0, 1.0));
        auto tb = subquartic_from_inputs(in);
        const double minform =
            std::min(std::pow(in.a, -(in.p - 2.0) / (4.0 - in.p)) * tb.C3, tb.C4);
        worst_sub = std::max(worst_sub, std::abs(tb.delta_bar_a - minform) /
                                            std::max(1e-300, minform));
    }
    bool ok = worst_super <= 1e-12 && worst_sub <= 1e-12;
    out.push_back(make_check("A11a",
                             "window widths reproduce their building-block compositions to "
                             "1e-12 over 100 random tuples",
                             ok,
                             "worst_super=" + fmt(worst_super) + " worst_sub=" + fmt(worst_sub),
                             t.seconds()));

    Timer t2;
    double worst_zero = 0.0;
    bool monotone = true;
    for (int k = 0; k < 20; ++k) {
        ThresholdInputs in;
        in.N = 3.0;
        in.S = sobolev_constant(3);
        in.p = rng.uniform(2.3, 3.7);
        const double l1 = rng.uniform(1.0, 20.0);
        in.eigs = {l1, 3.0 * l1, 0.95 * l1, 2.8 * l1};
        in.g_inf = 1.0;
        in.measure_V_lt_c0 = 1.0;
        in.Gamma_p = std::pow(10.0, rng.uniform(-1.0, 1.0));
        in.lambda = 0.5 * l1;
        // supremum attained on the eigenfield: the window closes exactly at a0
        in.g_phi1_p = in.Gamma_p * std::pow(l1, in.p / 2.0);
        const double a0 = 2.0 * (in.p - 2.0) *
                          std::pow(4.0 - in.p, (4.0 - in.p) / (in.p - 2.0)) *
                          std::pow(in.Gamma_p / in.p, 2.0 / (in.p - 2.0));
        in.a = a0;
        auto tb = subquartic_from_inputs(in);
        KW_REQUIRE(tb.lambda_a_plus.has_value(), "identity check needs the positive-sign value");
        worst_zero = std::max(worst_zero, std::abs(*tb.lambda_a_plus) / l1);
        double prev = -1e300;
        for (double af = 1.0; af <= 16.0; af *= 2.0) {
            in.a = af * a0;
            auto tv = subquartic_from_inputs(in);
            if (*tv.lambda_a_plus <= prev) monotone = false;
            prev = *tv.lambda_a_plus;
        }
    }
    out.push_back(make_check("A11b",
                             "fold bound vanishes at the closing coefficient (1e-10) and "
                             "increases strictly in a",
                             worst_zero <= 1e-10 && monotone,
                             "worst_zero=" + fmt(worst_zero) + " monotone=" + std::to_string(monotone),
                             t2.seconds()));
}

// ---- branch criteria ---------------------------------------------------------

void criterion_bifurcation(std::vector<CheckResult>& out, uint64_t seed) {
    {
        Timer t;
        auto s = p3_setup(Canonical::TP_BALL_P3_POS, 1.0, seed);
        const double l1 = s.p1.value;
        std::vector<double> lam_stars;
        for (double af : {2.0, 4.0}) {
            s.pr.set_a(af * s.a0);
            const double lap = lambda_a_plus(s.pr, l1, s.cg, s.pr.a());
            const double anchor = 0.5 * (lap + l1);
            s.pr.set_lambda(anchor);
            CensusOptions copt;
            copt.solver.seed = seed;
            copt.eigen.seed = seed;
            copt.gamma.seed = seed;
            auto census = multiplicity_census(s.pr, copt);
            // trace the branch pair from its lowest-energy member
            KW_REQUIRE(!census.solutions.empty(), "bifurcation: empty census");
            s.pr.set_lambda(anchor);
            TraceOptions topt;
            topt.solver.seed = seed;
            topt.diagnostics = false;
            Branch br = trace_branch(s.pr, 0.05 * l1, anchor + 1e-9, census.solutions.front(),
                                     l1, topt);
            double lam_star = 1e300;
            int folds = 0;
            for (const auto& bp : br.points) {
                lam_star = std::min(lam_star, bp.lambda);
                if (bp.fold_flag) ++folds;
            }
            const bool one_fold = folds == 1 && lam_star < l1;
            lam_stars.push_back(lam_star);
            out.push_back(make_check(
                af == 2.0 ? "A12a" : "A12b",
                "branch pair folds exactly once below the principal value",
                one_fold,
                "a=" + fmt(af) + "*a0 folds=" + std::to_string(folds) +
                    " lambda*=" + fmt(lam_star) + " lambda1=" + fmt(l1),
                t.seconds()));
        }
        out.push_back(make_check("A12c", "fold moves toward the principal value as a grows",
                                 lam_stars.size() == 2 && lam_stars[1] > lam_stars[0],
                                 "lambda*(2a0)=" + fmt(lam_stars[0]) +
                                     " lambda*(4a0)=" + fmt(lam_stars[1]),
                                 0.0));
    }
    {
        Timer t;
        auto s = p3_setup(Canonical::TP_BALL_P3_NEG, 0.5, seed);
        const double l1 = s.p1.value;
        const double anchor = 1.02 * l1;
        s.pr.set_lambda(anchor);
        EigenOptions eopt;
        eopt.seed = seed;
        auto q1 = lambda1_mu(s.pr, s.pr.mu(), eopt, &s.p1.field);
        SolverOptions sopt;
        sopt.seed = seed;
        auto small = ball_min(s.pr, 1.0, q1, s.p1.field, sopt);
        bool pass = false;
        std::string measured = "no small-amplitude seed";
        if (small) {
            TraceOptions topt;
            topt.solver.seed = seed;
            topt.diagnostics = false;
            Branch br = trace_branch(s.pr, 0.9 * l1, 3.0 * l1, *small, l1, topt);
            double lam_max = -1e300;
            int folds = 0;
            for (const auto& bp : br.points) {
                lam_max = std::max(lam_max, bp.lambda);
                if (bp.fold_flag) ++folds;
            }
            pass = folds >= 1 && lam_max > l1 * (1.0 + 1e-6);
            measured = "folds=" + std::to_string(folds) + " max_lambda=" + fmt(lam_max) +
                       " lambda1=" + fmt(l1);
        }
        out.push_back(make_check("A12d",
                                 "lower branch of the sign-negative problem extends right of "
                                 "the principal value before folding",
                                 pass, measured, t.seconds()));
    }
}

// ---- determinism ---------------------------------------------------------------

void criterion_determinism(std::vector<CheckResult>& out, uint64_t seed) {
    Timer t;
    auto run_once = [&]() {
        ProblemSpec spec = canonical_problem(Canonical::TP_BALL_P5);
        spec.grid.nodes_per_axis = 601;  // coarse but complete pipeline
        auto pr = Problem::make(spec);
        EigenOptions eopt;
        eopt.seed = seed;
        auto scan = mu_convergence_scan(pr, {1.0, 1000.0}, eopt);
        std::string text = mu_scan_csv(scan, pr.spec(), seed);
        auto p1 = lambda1_omega(pr, eopt);
        pr.set_lambda(0.9 * p1.value);
        CensusOptions copt;
        copt.solver.seed = seed;
        copt.eigen.seed = seed;
        copt.gamma.seed = seed;
        auto census = multiplicity_census(pr, copt);
        text += census_to_json(census).dump(2);
        return text;
    };
    const std::string first = run_once();
    const std::string second = run_once();
    out.push_back(make_check("A13", "identical seeds produce byte-identical reports",
                             first == second,
                             first == second ? "byte-identical" : "outputs differ",
                             t.seconds()));
}

// ---- grid suite (module invariants) --------------------------------------------

void grid_invariants(std::vector<CheckResult>& out, uint64_t seed) {
    {
        Timer t;
        auto grid = Grid::build({.dim = 3, .mode = GridMode::radial, .half_length = 3.0,
                                 .nodes_per_axis = 301});
        const double vol = grid.full_weights().sum();
        const double target = 4.0 * kPi * 27.0 / 3.0;
        const double err = std::abs(vol - target) / target;
        out.push_back(make_check("G1", "radial quadrature integrates 1 to the ball volume "
                                       "within 0.1%",
                                 err <= 1e-3, "vol=" + fmt(vol) + " err=" + fmt(err),
                                 t.seconds()));
    }
    {
        Timer t;
        auto grid = Grid::build({.dim = 2, .mode = GridMode::tensor, .half_length = 1.0,
                                 .nodes_per_axis = 21});
        const double cell = grid.weights().sum();
        const Eigen::Index ni = 19;
        const double exact = static_cast<double>(ni * ni) * std::pow(grid.spacing(), 2);
        bool ok = cell == exact;
        RngStream rng(seed, "grid_sbp", 0);
        double worst = 0.0;
        for (int k = 0; k < 10; ++k) {
            Field u = random_field(grid, rng), v = random_field(grid, rng);
            const double lhs = grid.inner_dirichlet(u, v);
            const double rhs = grid.integrate(Field(u.cwiseProduct(grid.laplacian_apply(v))));
            const double sym = std::abs(lhs - grid.inner_dirichlet(v, u));
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
            worst = std::max(worst, sym / std::max(1.0, std::abs(lhs)));
        }
        out.push_back(make_check("G2", "exact interior quadrature; summation-by-parts and "
                                       "symmetry to 1e-10",
                                 ok && worst <= 1e-10, "worst=" + fmt(worst), t.seconds()));
    }
    {
        Timer t;
        // classical discrete eigenvalue of the 1D second-difference operator
        auto grid = Grid::build({.dim = 1, .mode = GridMode::tensor, .half_length = 0.5,
                                 .nodes_per_axis = 101});
        const double h = grid.spacing();
        SparseMat K = grid.stiffness();
        Field z = Field::Ones(grid.interior_count());
        for (int it = 0; it < 60; ++it) {
            Field rhs = grid.weights().cwiseProduct(z);
            auto sol = pcg_solve(K, rhs, 1e-14);
            z = sol.x / sol.x.norm();
        }
        const double value =
            z.dot(K * z) / (grid.weights().array() * z.array().square()).sum();
        const double target = 4.0 * std::pow(std::sin(kPi * h / 2.0), 2) / (h * h);
        const double err = std::abs(value - target) / target;
        out.push_back(make_check("G3", "smallest discrete eigenvalue matches the "
                                       "second-difference closed form to 1e-10",
                                 err <= 1e-10, "value=" + fmt(value) + " err=" + fmt(err),
                                 t.seconds()));
    }
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names{"grid", "eigen", "functional", "constants",
                                                "thm1", "thm2", "thm3", "branch", "all"};
    return names;
}

SuiteResult verify_suite(const std::string& name, uint64_t seed) {
    SuiteResult res;
    res.suite = name;
    auto& out = res.checks;
    if (name == "grid") {
        grid_invariants(out, seed);
    } else if (name == "eigen") {
        criterion_eigen_1d(out, seed);
        criterion_eigen_3d(out, seed);
        criterion_mu_scan(out, seed);
    } else if (name == "functional") {
        criterion_gradient_fd(out, seed);
        criterion_coercivity(out, seed);
    } else if (name == "constants") {
        criterion_constants_identities(out, seed);
    } else if (name == "thm1") {
        criterion_geometry(out, seed);
        criterion_thm1_census(out, seed);
    } else if (name == "thm2") {
        criterion_thm2_census(out, seed);
    } else if (name == "thm3") {
        criterion_thm3_census(out, seed);
    } else if (name == "branch") {
        criterion_bifurcation(out, seed);
    } else if (name == "all") {
        grid_invariants(out, seed);
        criterion_eigen_1d(out, seed);
        criterion_eigen_3d(out, seed);
        criterion_mu_scan(out, seed);
        criterion_gradient_fd(out, seed);
        criterion_coercivity(out, seed);
        criterion_geometry(out, seed);
        criterion_thm1_census(out, seed);
        criterion_thm2_census(out, seed);
        criterion_thm3_census(out, seed);
        criterion_constants_identities(out, seed);
        criterion_bifurcation(out, seed);
        criterion_determinism(out, seed);
    } else {
        throw Error("unknown verification suite: " + name);
    }
    return res;
}

Json suite_to_json(const SuiteResult& s, uint64_t seed) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["suite"] = s.suite;
    j["seed"] = seed;
    j["all_pass"] = s.all_pass();
    Json arr = Json::array();
    for (const auto& c : s.checks) {
        Json e;
        e["id"] = c.id;
        e["description"] = c.description;
        e["pass"] = c.pass;
        e["measured"] = c.measured;
        e["seconds"] = c.seconds;
        arr.push_back(e);
    }
    j["checks"] = arr;
    return j;
}

std::string suite_to_text(const SuiteResult& s) {
    std::ostringstream out;
    for (const auto& c : s.checks) {
        out << (c.pass ? "[PASS] " : "[FAIL] ") << c.id << "  " << c.description << "\n"
            << "        " << c.measured << "  (" << fmt(c.seconds) << " s)\n";
    }
    out << (s.all_pass() ? "SUITE PASS: " : "SUITE FAIL: ") << s.suite << "\n";
    return out.str();
}

}  // namespace kw

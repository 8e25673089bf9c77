#include "kirchwell/problem.hpp"

#include <cmath>
#include <sstream>

namespace kw {

namespace {

constexpr double kWellSlope = 1.0e5;   // steepness of the quadratic well walls
constexpr double kKappaP5 = 6.0;       // g-family parameter for the p=5 problems
constexpr double kKappaNeg = 0.096;    // below the sign threshold (~0.192)
constexpr double kKappaPos = 0.384;    // above the sign threshold
constexpr double kAmpP3 = 100.0;       // g amplitude for the p=3 problems

double radius2(const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return s;
}

}  // namespace

std::string to_string(Canonical c) {
    switch (c) {
        case Canonical::TP_CUBE_P5: return "TP-CUBE-P5";
        case Canonical::TP_BALL_P5: return "TP-BALL-P5";
        case Canonical::TP_BALL_P3_NEG: return "TP-BALL-P3-NEG";
        case Canonical::TP_BALL_P3_POS: return "TP-BALL-P3-POS";
    }
    return "?";
}

Canonical canonical_from_string(const std::string& name) {
    if (name == "TP-CUBE-P5") return Canonical::TP_CUBE_P5;
    if (name == "TP-BALL-P5") return Canonical::TP_BALL_P5;
    if (name == "TP-BALL-P3-NEG") return Canonical::TP_BALL_P3_NEG;
    if (name == "TP-BALL-P3-POS") return Canonical::TP_BALL_P3_POS;
    throw Error("unknown canonical problem: " + name);
}

void ProblemSpec::validate_parameters() const {
    KW_REQUIRE(N >= 3, "ProblemSpec: N must be >= 3");
    KW_REQUIRE(a > 0.0, "ProblemSpec: a must be positive");
    KW_REQUIRE(p > 2.0 && p < critical_exponent(), "ProblemSpec: p outside (2, 2N/(N-2))");
    KW_REQUIRE(mu >= 0.0, "ProblemSpec: mu must be nonnegative");
    KW_REQUIRE(c0 > 0.0, "ProblemSpec: c0 must be positive");
}

Problem::Problem(ProblemSpec spec, Grid grid) : spec_(std::move(spec)), grid_(std::move(grid)) {
    spec_.validate_parameters();
    f_ = grid_.sample(spec_.f);
    V_ = grid_.sample(spec_.V);
    g_base_ = grid_.sample(spec_.g.base);
    g_shape_ = grid_.sample(spec_.g.shape);
    g_ = g_base_.cwiseProduct(Field::Constant(g_base_.size(), spec_.g.kappa) - g_shape_);
    omega_.resize(static_cast<size_t>(grid_.interior_count()));
    for (Eigen::Index i = 0; i < grid_.interior_count(); ++i) {
        const bool in = spec_.omega_indicator(grid_.node(i)) > 0.5;
        omega_[static_cast<size_t>(i)] = in;
        if (in) {
            ++omega_count_;
            KW_REQUIRE(V_[i] == 0.0, "Problem: V must vanish exactly on Omega nodes");
        }
        KW_REQUIRE(V_[i] >= 0.0, "Problem: V must be nonnegative");
    }
}

void Problem::set_kappa(double kappa) {
    spec_.g.kappa = kappa;
    g_ = g_base_.cwiseProduct(Field::Constant(g_base_.size(), kappa) - g_shape_);
}

ValidationReport validate_conditions(const Problem& problem) {
    const Grid& grid = problem.grid();
    const ProblemSpec& spec = problem.spec();
    ValidationReport rep;

    // (V1): V >= 0 with a nonempty sublevel set {V < c0} of finite measure
    {
        ConditionCheck c; c.condition = "V1";
        Eigen::Index neg = -1;
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i)
            if (problem.V()[i] < 0.0) { neg = i; break; }
        Field ind(grid.interior_count());
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i)
            ind[i] = problem.V()[i] < spec.c0 ? 1.0 : 0.0;
        rep.measure_V_lt_c0 = grid.integrate(ind);
        c.pass = neg < 0 && rep.measure_V_lt_c0 > 0.0;
        c.witness = neg;
        c.value = rep.measure_V_lt_c0;
        c.detail = "measure of {V < c0}";
        rep.checks.push_back(std::move(c));
    }
    // (V2): Omega nodes exist and V = 0 there
    {
        ConditionCheck c; c.condition = "V2";
        c.pass = problem.omega_count() > 0;
        double vmax = 0.0;
        Eigen::Index wit = -1;
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i) {
            if (problem.omega_mask()[static_cast<size_t>(i)] && problem.V()[i] > vmax) {
                vmax = problem.V()[i];
                wit = i;
            }
        }
        if (vmax > 0.0) c.pass = false;
        c.witness = wit;
        c.value = vmax;
        c.detail = "max V over Omega nodes";
        rep.checks.push_back(std::move(c));
    }
    // (D1): f^+ not identically zero on Omega
    {
        ConditionCheck c; c.condition = "D1";
        double fmax = -1e300;
        Eigen::Index wit = -1;
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i) {
            if (problem.omega_mask()[static_cast<size_t>(i)] && problem.f()[i] > fmax) {
                fmax = problem.f()[i];
                wit = i;
            }
        }
        c.pass = fmax > 0.0;
        c.witness = wit;
        c.value = fmax;
        c.detail = "max f over Omega nodes";
        rep.checks.push_back(std::move(c));
    }
    // (D2): g^+ not identically zero on Omega
    {
        ConditionCheck c; c.condition = "D2";
        double gmax = -1e300;
        Eigen::Index wit = -1;
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i) {
            if (problem.omega_mask()[static_cast<size_t>(i)] && problem.g()[i] > gmax) {
                gmax = problem.g()[i];
                wit = i;
            }
        }
        c.pass = gmax > 0.0;
        c.witness = wit;
        c.value = gmax;
        c.detail = "max g over Omega nodes";
        rep.checks.push_back(std::move(c));
    }
    // (H3), requested for N = 3 with subquartic p
    if (spec.N == 3 && spec.p < 4.0) {
        KW_REQUIRE(spec.c_star && spec.R_star,
                   "validate_conditions: c_star/R_star required for the N=3 decay check");
        ConditionCheck c; c.condition = "H3";
        double worst = -1e300;
        Eigen::Index wit = -1;
        for (Eigen::Index i = 0; i < grid.interior_count(); ++i) {
            const double r = std::sqrt(radius2(grid.node(i)));
            if (r <= *spec.R_star) continue;
            const double lhs = std::pow(r, spec.p - 2.0) * problem.g()[i];
            const double rhs = *spec.c_star * std::pow(problem.V()[i], 4.0 - spec.p);
            const double viol = lhs - rhs;
            if (viol > worst) {
                worst = viol;
                wit = i;
            }
        }
        rep.h3_max_violation = worst;
        c.pass = worst <= 0.0;
        c.witness = wit;
        c.value = worst;
        c.detail = "max of |x|^{p-2} g - c* V^{4-p} outside R*";
        rep.checks.push_back(std::move(c));
    }
    return rep;
}

ProblemSpec canonical_problem(Canonical which) {
    ProblemSpec s;
    s.N = 3;
    s.mu = 1000.0;
    s.c0 = 0.25;
    s.name = which;

    const bool cube = which == Canonical::TP_CUBE_P5;
    if (cube) {
        s.grid = GridSpec{.dim = 3, .mode = GridMode::tensor, .half_length = 2.0, .nodes_per_axis = 33};
        s.V = [](const std::vector<double>& x) {
            double acc = 0.0;
            for (double xi : x) {
                const double d = std::max(std::abs(xi) - 1.0, 0.0);
                acc += d * d;
            }
            return kWellSlope * acc;
        };
        s.omega_indicator = [](const std::vector<double>& x) {
            for (double xi : x)
                if (std::abs(xi) >= 1.0) return 0.0;
            return 1.0;
        };
    } else {
        s.grid = GridSpec{.dim = 3, .mode = GridMode::radial, .half_length = 3.0, .nodes_per_axis = 2001};
        s.V = [](const std::vector<double>& x) {
            const double d = std::max(x[0] - 1.0, 0.0);
            return kWellSlope * d * d;
        };
        s.omega_indicator = [](const std::vector<double>& x) { return x[0] < 1.0 ? 1.0 : 0.0; };
    }

    s.f = [](const std::vector<double>& x) { return std::exp(-radius2(x)); };

    const bool p3 = which == Canonical::TP_BALL_P3_NEG || which == Canonical::TP_BALL_P3_POS;
    const double amp = p3 ? kAmpP3 : 1.0;
    s.g.base = [amp](const std::vector<double>& x) { return amp * std::exp(-radius2(x) / 4.0); };
    s.g.shape = [](const std::vector<double>& x) { return radius2(x); };

    switch (which) {
        case Canonical::TP_CUBE_P5:
        case Canonical::TP_BALL_P5:
            s.p = 5.0;
            s.a = 1.0;
            s.g.kappa = kKappaP5;
            break;
        case Canonical::TP_BALL_P3_NEG:
            s.p = 3.0;
            s.g.kappa = kKappaNeg;
            s.c_star = 1.0;
            s.R_star = 1.5;
            break;
        case Canonical::TP_BALL_P3_POS:
            s.p = 3.0;
            s.g.kappa = kKappaPos;
            s.c_star = 1.0;
            s.R_star = 1.5;
            break;
    }
    return s;
}

double tune_g_sign(const Problem& problem, const Field& phi1) {
    const Grid& grid = problem.grid();
    grid.check_field(phi1, "tune_g_sign");
    const double p = problem.p();
    Field phip = phi1.array().abs().pow(p);
    const double den = grid.integrate(Field(problem.g_base().cwiseProduct(phip)));
    KW_REQUIRE(den > 0.0, "tune_g_sign: base weight not positive on the eigenfield support");
    const double num =
        grid.integrate(Field(problem.g_base().cwiseProduct(problem.g_shape()).cwiseProduct(phip)));
    return num / den;
}

// --- config -------------------------------------------------------------

std::map<std::string, std::string> parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

ProblemSpec spec_from_config(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* k) -> std::optional<std::string> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    ProblemSpec s;
    if (auto name = get("problem.name")) {
        s = canonical_problem(canonical_from_string(*name));
    } else {
        throw Error("config: problem.name is required");
    }
    if (auto v = get("dim")) s.grid.dim = std::stoi(*v);
    if (auto v = get("mode")) {
        KW_REQUIRE(*v == "tensor" || *v == "radial", "config: mode must be tensor|radial");
        s.grid.mode = *v == "tensor" ? GridMode::tensor : GridMode::radial;
    }
    if (auto v = get("L")) s.grid.half_length = std::stod(*v);
    if (auto v = get("n")) s.grid.nodes_per_axis = std::stoi(*v);
    if (auto v = get("a")) s.a = std::stod(*v);
    if (auto v = get("p")) s.p = std::stod(*v);
    if (auto v = get("lambda")) s.lambda = std::stod(*v);
    if (auto v = get("mu")) s.mu = std::stod(*v);
    if (auto v = get("g.kappa")) s.g.kappa = std::stod(*v);
    if (auto v = get("c0")) s.c0 = std::stod(*v);
    if (auto v = get("c_star")) s.c_star = std::stod(*v);
    if (auto v = get("R_star")) s.R_star = std::stod(*v);
    return s;
}

std::string config_from_spec(const ProblemSpec& spec) {
    std::ostringstream out;
    out.precision(17);
    KW_REQUIRE(spec.name.has_value(), "config_from_spec: only canonical-based specs are serializable");
    out << "problem.name = " << to_string(*spec.name) << "\n";
    out << "dim = " << spec.grid.dim << "\n";
    out << "mode = " << (spec.grid.mode == GridMode::tensor ? "tensor" : "radial") << "\n";
    out << "L = " << spec.grid.half_length << "\n";
    out << "n = " << spec.grid.nodes_per_axis << "\n";
    out << "a = " << spec.a << "\n";
    out << "p = " << spec.p << "\n";
    out << "lambda = " << spec.lambda << "\n";
    out << "mu = " << spec.mu << "\n";
    out << "g.kappa = " << spec.g.kappa << "\n";
    out << "c0 = " << spec.c0 << "\n";
    if (spec.c_star) out << "c_star = " << *spec.c_star << "\n";
    if (spec.R_star) out << "R_star = " << *spec.R_star << "\n";
    return out.str();
}

}  // namespace kw

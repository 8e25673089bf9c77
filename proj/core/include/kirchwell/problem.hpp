#pragma once

#include "kirchwell/grid.hpp"

#include <map>
#include <optional>
#include <string>

namespace kw {

enum class Canonical { TP_CUBE_P5, TP_BALL_P5, TP_BALL_P3_NEG, TP_BALL_P3_POS };

std::string to_string(Canonical c);
Canonical canonical_from_string(const std::string& name);

/// Superlinear weight in the two-parameter family g(x) = base(x) * (kappa - s(x)).
struct GWeight {
    Sampler base;
    Sampler shape;
    double kappa = 1.0;
};

struct ProblemSpec {
    int N = 3;
    double a = 1.0;       // nonlocal coefficient, > 0
    double p = 5.0;       // superlinear exponent in (2, 2N/(N-2))
    double lambda = 1.0;  // linear-term weight coefficient
    double mu = 1000.0;   // well depth, >= 0
    Sampler V;            // potential, >= 0, vanishing on Omega
    Sampler f;            // linear weight
    GWeight g;            // superlinear weight
    Sampler omega_indicator;  // > 0.5 inside Omega
    double c0 = 0.25;         // well threshold
    std::optional<double> c_star;
    std::optional<double> R_star;
    GridSpec grid;
    std::optional<Canonical> name;

    double critical_exponent() const { return 2.0 * N / (N - 2.0); }
    void validate_parameters() const;
};

/// Nodal realization of a ProblemSpec on its grid. Immutable except for the
/// g-family parameter kappa, which re-samples g.
class Problem {
  public:
    Problem(ProblemSpec spec, Grid grid);
    static Problem make(const ProblemSpec& spec) { return Problem(spec, Grid::build(spec.grid)); }

    const ProblemSpec& spec() const { return spec_; }
    const Grid& grid() const { return grid_; }

    const Field& f() const { return f_; }
    const Field& V() const { return V_; }
    const Field& g() const { return g_; }
    const Field& g_base() const { return g_base_; }
    const Field& g_shape() const { return g_shape_; }
    const std::vector<bool>& omega_mask() const { return omega_; }
    Eigen::Index omega_count() const { return omega_count_; }

    double a() const { return spec_.a; }
    double p() const { return spec_.p; }
    double lambda() const { return spec_.lambda; }
    double mu() const { return spec_.mu; }
    double kappa() const { return spec_.g.kappa; }

    void set_a(double a) { spec_.a = a; }
    void set_lambda(double lam) { spec_.lambda = lam; }
    void set_mu(double mu) { KW_REQUIRE(mu >= 0.0, "mu must be >= 0"); spec_.mu = mu; }
    void set_kappa(double kappa);

    double norm_mu(const Field& u) const { return grid_.norm_mu(V_, u, spec_.mu); }
    double inner_mu(const Field& u, const Field& v) const {
        return grid_.inner_mu(V_, u, v, spec_.mu);
    }

  private:
    ProblemSpec spec_;
    Grid grid_;
    Field f_, V_, g_, g_base_, g_shape_;
    std::vector<bool> omega_;
    Eigen::Index omega_count_ = 0;
};

struct ConditionCheck {
    std::string condition;
    bool pass = false;
    Eigen::Index witness = -1;  // node index of the decisive value, -1 if none
    double value = 0.0;
    std::string detail;
};

struct ValidationReport {
    std::vector<ConditionCheck> checks;
    double measure_V_lt_c0 = 0.0;
    double h3_max_violation = 0.0;
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

/// Nodewise verification of the structural hypotheses on (V, f, g):
/// nonnegativity and well shape of V, positivity of f and g somewhere in
/// Omega, and (for N = 3, p < 4) the decay inequality
/// |x|^{p-2} g(x) <= c* V(x)^{4-p} outside radius R*.
ValidationReport validate_conditions(const Problem& problem);

/// Canonical test problems. Steepness of the well and the amplitude of g are
/// calibrated so that mu = 1000 is deep inside the "mu large" regime on the
/// default grids.
ProblemSpec canonical_problem(Canonical which);

/// Threshold kappa* with  int_Omega g phi1^p dx  negative for kappa < kappa*
/// and positive above. phi1 must be normalized with int f phi1^2 = 1.
double tune_g_sign(const Problem& problem, const Field& phi1);

// --- key-value config ---------------------------------------------------

std::map<std::string, std::string> parse_config(const std::string& text);
ProblemSpec spec_from_config(const std::map<std::string, std::string>& kv);
std::string config_from_spec(const ProblemSpec& spec);

}  // namespace kw

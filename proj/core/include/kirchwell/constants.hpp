#pragma once

#include "kirchwell/problem.hpp"
#include "kirchwell/spectral.hpp"

#include <optional>

namespace kw {

/// Eigenvalues the threshold formulas consume.
struct EigenSummary {
    double lambda1_omega = 0.0;
    double lambda2_omega = 0.0;
    double lambda1_mu = 0.0;
    double lambda2_mu = 0.0;
};

/// Talenti closed form for the best constant of D^{1,2} -> L^{2N/(N-2)},
/// normalized as ||u||_{2*} <= S^{-1} ||u||_{D^{1,2}}.
double sobolev_constant(int N);

struct GammaEstimate {
    double value = 0.0;   // lower estimate of the constrained supremum
    Field maximizer;      // Omega-supported, Dirichlet-normalized
    bool lower_bound_flag = true;
};

struct GammaOptions {
    int multistarts = 10;
    int max_iter = 400;
    uint64_t seed = 0;
};

/// Lower estimate of Gamma_p = sup int_Omega g|u|^p / ||u||_D^p over
/// Omega-supported fields with nonnegative f-mass, by projected ascent on the
/// Dirichlet sphere.
GammaEstimate gamma_p(const Problem& problem, double p, const GammaOptions& opt = {});

struct SuperquarticThresholds {
    double rho_lambda = 0.0;
    double Lambda0 = 0.0;
    double rho_a = 0.0;
    double rho_a_lambda = 0.0;  // regime-dependent sphere radius
    double delta_a_mu = 0.0;
    double delta_a = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double theta1_mu = 0.0;
    double theta2_mu = 0.0;
};

/// Sphere radii and lambda-window widths for the N=3, 4<p<6 regime.
SuperquarticThresholds thresholds_superquartic(const Problem& problem, const EigenSummary& eigs);

struct SubquarticThresholds {
    double rho_bar_lambda = 0.0;
    double rho_bar_a = 0.0;
    double rho_bar_a_lambda = 0.0;  // min{rho_bar_lambda, rho_bar_a}
    double a0_p = 0.0;
    double B = 0.0;
    double rho0 = 0.0;
    double delta_bar_a_mu = 0.0;
    double delta_bar_a = 0.0;
    double C3 = 0.0;
    double C4 = 0.0;
    double rho_hat_a = 0.0;         // g-positive case only, else 0
    double rho_hat_a_lambda = 0.0;  // min{rho_bar_lambda, rho_hat_a}
    std::optional<double> lambda_a_plus;
    bool lambda_a_plus_clamped = false;
    double t_a = 0.0;  // scaling of phi1 reaching negative energy (g-positive case)
};

/// Thresholds for the 2<p<min{4,2*} regime. g_phi1_p is int_Omega g phi1^p.
/// lambda_a_plus is only defined for g_phi1_p > 0.
SubquarticThresholds thresholds_subquartic(const Problem& problem, const EigenSummary& eigs,
                                           double Gamma_p, double g_phi1_p);

/// Raw inputs for the threshold kernels (the Problem front ends fill these
/// with discrete surrogates).
struct ThresholdInputs {
    double a = 1.0;
    double p = 5.0;
    double lambda = 1.0;
    double N = 3.0;
    double S = 0.0;
    double g_inf = 0.0;         // sup norm of g
    double measure_V_lt_c0 = 0.0;
    EigenSummary eigs;
    double Gamma_p = 0.0;   // subquartic only
    double g_phi1_p = 0.0;  // int_Omega g phi1^p, subquartic only
};

SuperquarticThresholds superquartic_from_inputs(const ThresholdInputs& in);
SubquarticThresholds subquartic_from_inputs(const ThresholdInputs& in);


/// lambda_a_plus alone; throws if g_phi1_p <= 0.
double lambda_a_plus(const Problem& problem, double lambda1_omega, double g_phi1_p, double a);

struct CoercivityConstants {
    double mu0_well = 0.0;   // embedding threshold from the well geometry
    double mu_threshold = 0.0;  // N=3 decay threshold, or mu1 for N>=4
    double C_N_a_lambda = 0.0;
    double C_bar_0 = 0.0;  // Hardy constant (2/(N-2))^2
};

CoercivityConstants coercivity_constants(const Problem& problem);

struct ConstantsReport {
    double S = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;     // 0 when N = 3
    double mu0_N3 = 0.0;  // 0 when N >= 4
    double Gamma_p = 0.0;
    double a0_p = 0.0;
    std::optional<double> lambda_a_plus;
    bool lambda_a_plus_clamped = false;
    double rho_lambda = 0.0;
    double rho_a = 0.0;
    double rho_a_lambda = 0.0;
    double delta_a_mu = 0.0;
    double delta_a = 0.0;
    double C1 = 0.0, C2 = 0.0;
    double rho_bar_lambda = 0.0;
    double rho_bar_a = 0.0;
    double rho0 = 0.0;
    double B = 0.0;
    double delta_bar_a_mu = 0.0;
    double delta_bar_a = 0.0;
    double C3 = 0.0, C4 = 0.0;
    double rho_hat_a = 0.0;
    double Lambda0 = 0.0;
    double theta1_mu = 0.0;
    double theta2_mu = 0.0;
    double C_N_a_lambda = 0.0;
    double C_bar_0 = 0.0;
    double D0 = 0.0;  // path energy cap; filled once a geometry run exists
    double measure_V_lt_c0 = 0.0;
    double norm_f_N2 = 0.0;
    double norm_g_inf = 0.0;
    double g_phi1_p = 0.0;
    EigenSummary eigs;
};

/// Evaluate everything the problem's regime defines (the p-regime picks which
/// threshold family is populated).
ConstantsReport assemble_constants(const Problem& problem, const EigenOptions& eopt = {},
                                   const GammaOptions& gopt = {});

// shared discrete surrogates
double norm_g_inf(const Problem& problem);
double measure_V_below(const Problem& problem);

}  // namespace kw

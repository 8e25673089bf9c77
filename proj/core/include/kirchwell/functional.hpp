#pragma once

#include "kirchwell/problem.hpp"

namespace kw {

struct EnergyBreakdown {
    double dirichlet4 = 0.0;  // a/4 * ||u||_D^4
    double mu_half = 0.0;     // 1/2 * ||u||_mu^2
    double f_term = 0.0;      // lambda/2 * int f u^2
    double g_term = 0.0;      // 1/p * int g |u|^p
    double total = 0.0;       // dirichlet4 + mu_half - f_term - g_term
};

/// |u|^{p-2} u with the value pinned to 0 at u = 0 (fractional p safe).
double odd_power(double u, double p);

EnergyBreakdown energy(const Problem& problem, const Field& u);

double directional_derivative(const Problem& problem, const Field& u, const Field& phi);

/// Nodal residual of the strong equation:
///   (a ||u||_D^2 + 1)(-Lap u) + mu V u - lambda f u - g |u|^{p-2} u.
/// integrate(r * phi) equals directional_derivative(u, phi) exactly.
Field gradient_field(const Problem& problem, const Field& u);

struct ResidualNormOptions {
    double cg_tol = 1e-10;
    int cg_max_iter = 0;
};

/// Dual norm of the residual through the fixed preconditioner -Lap + mu V + 1:
/// solve (K + W(mu V + 1)) z = W r and return sqrt(integrate(r z)).
double residual_norm(const Problem& problem, const Field& u,
                     const ResidualNormOptions& opt = {});

/// Same dual norm for an externally supplied nodal residual.
double dual_norm(const Problem& problem, const Field& r, const ResidualNormOptions& opt = {});

/// The preconditioner matrix K + W (mu V + 1) used by the dual norm and by
/// descent directions.
SparseMat dual_operator(const Problem& problem);

}  // namespace kw

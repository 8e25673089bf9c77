#pragma once

#include "kirchwell/problem.hpp"

namespace kw {

struct EigenPair {
    double value = 0.0;
    Field field;          // normalized: int f u^2 = 1
    double residual = 0.0;  // preconditioned dual norm of the eigen-residual
    double f_mass = 0.0;    // int f u^2 (target 1)
    double orth = 0.0;      // constraint inner product (second pairs)
};

struct EigenOptions {
    double dual_tol = 1e-9;
    int max_iter = 600;
    int multistarts = 5;
    uint64_t seed = 0;
};

/// Principal weighted eigenvalue on the well bottom: minimize the Dirichlet
/// Rayleigh quotient over fields supported on Omega nodes with int f u^2 = 1.
EigenPair lambda1_omega(const Problem& problem, const EigenOptions& opt = {});

/// Second eigenvalue on Omega: same minimization, restricted to the
/// stiffness-orthogonal complement of phi1.
EigenPair lambda2_omega(const Problem& problem, const EigenPair& phi1,
                        const EigenOptions& opt = {});

/// Principal eigenvalue of the full operator -Laplace + mu V with weight f.
/// phi1 of the Omega problem is always included among the starts, which makes
/// the computed value <= lambda1(f_Omega) whenever Omega is grid-aligned.
EigenPair lambda1_mu(const Problem& problem, double mu, const EigenOptions& opt = {},
                     const Field* omega_phi1 = nullptr);

/// Second eigenvalue of the well operator, orthogonal in the mu-inner product.
EigenPair lambda2_mu(const Problem& problem, double mu, const EigenPair& phi1mu,
                     const EigenOptions& opt = {});

struct MuScanRow {
    double mu = 0.0;
    double lambda1_mu = 0.0;
    double lambda2_mu = 0.0;
    double gap1 = 0.0;           // lambda1(f_Omega) - lambda1_mu
    double eigfield_dist = 0.0;  // Dirichlet-seminorm distance of phi_{1,mu} to phi1
};

struct MuScan {
    double lambda1_omega = 0.0;
    double lambda2_omega = 0.0;
    std::vector<MuScanRow> rows;
};

/// Convergence scan of the well eigenpair toward the Omega problem.
MuScan mu_convergence_scan(const Problem& problem, const std::vector<double>& mu_list,
                           const EigenOptions& opt = {});

/// Discrete L^{N/2} norm of f (enters the eigenvalue lower bound).
double f_half_critical_norm(const Problem& problem);

}  // namespace kw

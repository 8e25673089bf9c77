#pragma once

#include "kirchwell/constants.hpp"
#include "kirchwell/functional.hpp"

#include <optional>

namespace kw {

enum class SolutionClass { ball_min, exterior_min, mountain_pass, refined };

std::string to_string(SolutionClass c);

struct SolveResult {
    Field field;
    double energy = 0.0;
    double residual = 0.0;
    double norm_mu = 0.0;
    SolutionClass classification = SolutionClass::refined;
    int iterations = 0;
    bool positive = false;
};

struct GeometryReport {
    double rho = 0.0;
    double certified_min_on_sphere = 0.0;
    Field e0;
    double J_e0 = 0.0;
    double e0_norm_mu = 0.0;
    double D0 = 0.0;  // max of J along the segment to e0 (1001-point scan)
    bool pass = false;
};

struct SolverOptions {
    uint64_t seed = 0;
    double newton_tol = 1e-10;       // dual-norm target for polishing
    double accept_residual = 1e-8;   // contract bound for returned solutions
    int newton_max_iter = 40;
    int descent_max_iter = 4000;
    int sphere_multistarts = 8;
    int sphere_max_iter = 400;
    int path_points = 41;
    int path_max_iter = 6000;
    double path_grad_tol = 1e-6;
};

/// Damped Newton polish of a near-critical field. The nonlocal rank-one term
/// is carried exactly through a bordered sparse solve.
SolveResult newton_refine(const Problem& problem, const Field& u0,
                          const SolverOptions& opt = {});

/// Best value found over the sphere ||u||_mu = rho (upper bound on the
/// infimum); the phi_{1,mu} direction is always among the starts.
std::pair<double, Field> sphere_min(const Problem& problem, double rho,
                                    const EigenPair& phi1mu, const SolverOptions& opt = {});

/// A point with J < 0 beyond the sphere, built from the eigenfield ray, the
/// supremum-quotient maximizer, or upscaled positive bumps.
Field find_e0(const Problem& problem, double rho, const Field& phi1,
              const Field* gamma_maximizer = nullptr);

GeometryReport certify_geometry(const Problem& problem, double rho, const EigenPair& phi1mu,
                                const Field& phi1, const Field* gamma_maximizer = nullptr,
                                const SolverOptions& opt = {});

/// Path-based saddle search between 0 and e0: descend the path maximizer,
/// redistribute, Newton-polish once the maximizer is nearly critical.
SolveResult mountain_pass(const Problem& problem, const Field& e0,
                          const SolverOptions& opt = {});

/// Negative-energy critical point inside the ball ||u||_mu <= rho, or nullopt
/// when the descent collapses to zero ("no negative-energy point found").
std::optional<SolveResult> ball_min(const Problem& problem, double rho,
                                    const EigenPair& phi1mu, const Field& phi1,
                                    const SolverOptions& opt = {});

/// Global negative minimizer outside the ball (coercive subquartic regime):
/// descent from e0 with retraction to the sphere, then Newton.
/// energy_floor, when given, asserts the returned energy stays above it.
SolveResult exterior_min(const Problem& problem, double rho, const Field& e0,
                         std::optional<double> energy_floor = std::nullopt,
                         const SolverOptions& opt = {});

/// One deflated Newton search for a solution distinct from `known`.
std::optional<SolveResult> deflated_search(const Problem& problem,
                                           const std::vector<SolveResult>& known,
                                           const Field& phi1, const EigenPair& phi1mu,
                                           const SolverOptions& opt = {});

struct CensusOptions {
    SolverOptions solver;
    EigenOptions eigen;
    GammaOptions gamma;
    int expected_count = 0;  // 0: single pass; otherwise mu doubles until met
    double mu_max = 8000.0;
    int deflation_budget = 3;
};

struct CensusResult {
    std::vector<SolveResult> solutions;  // deduplicated, energy-sorted
    GeometryReport geometry;
    EigenSummary eigs;
    double final_mu = 0.0;
    std::vector<double> mu_ladder;
    double rho_sphere = 0.0;
    double rho_ball = 0.0;
    int positive_count = 0;
};

/// Orchestrated multi-solution search at the problem's (a, lambda):
/// geometry certificate, mountain pass, ball/exterior minimization, and
/// deflation, with the mu-doubling ladder.
CensusResult multiplicity_census(Problem& problem, const CensusOptions& opt = {});

// shared helpers
void sign_normalize(Field& u);
bool positivity_check(const Problem& problem, const Field& u);
double ray_first_stationary(const Problem& problem, const Field& dir);

}  // namespace kw

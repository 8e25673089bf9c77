#pragma once

#include "kirchwell/solvers.hpp"

namespace kw {

struct BranchPoint {
    double lambda = 0.0;
    double norm_mu = 0.0;
    double energy = 0.0;
    double residual = 0.0;
    double smallest_linearization_eigenvalue = 0.0;  // diagnostic grade
    bool fold_flag = false;
    Field field;
};

struct TraceOptions {
    double ds_init = 0.0;     // 0: derived from the range
    double ds_min_rel = 1e-4;  // bounds relative to lambda1(f_Omega)
    double ds_max_rel = 0.05;
    int max_points = 500;
    int corrector_max_iter = 25;
    double corrector_tol = 1e-9;
    int max_halvings = 5;
    bool diagnostics = true;  // inverse-iteration eigenvalue per point
    SolverOptions solver;
};

struct Branch {
    std::vector<BranchPoint> points;
    std::string stop_reason;
    int fold_count = 0;
};

/// Pseudo-arclength continuation of a converged solution in lambda over
/// [range_lo, range_hi] (the trace starts at seed's lambda and runs toward
/// the far end, following the branch around folds).
Branch trace_branch(Problem& problem, double range_lo, double range_hi,
                    const SolveResult& seed, double lambda1_omega,
                    const TraceOptions& opt = {});

struct DiagramRow {
    double a = 0.0;
    double lambda = 0.0;
    double norm_mu = 0.0;
    double energy = 0.0;
    int branch_id = 0;
    bool fold_flag = false;
    double residual = 0.0;
};

struct Diagram {
    std::vector<DiagramRow> rows;
    // per (a, branch) fold locations, useful for shape checks
    struct FoldInfo {
        double a;
        int branch_id;
        double lambda_star;
    };
    std::vector<FoldInfo> folds;
};

/// Census seeds at the anchor lambda, then branch traces across
/// [lambda_lo, lambda_hi] for every a in a_list.
Diagram bifurcation_diagram(Problem& problem, double lambda_lo, double lambda_hi,
                            double lambda_anchor, const std::vector<double>& a_list,
                            const CensusOptions& copt = {}, const TraceOptions& topt = {});

}  // namespace kw

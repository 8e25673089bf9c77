// Command-line front end: eigen scans, constants reports, geometry
// certificates, solution censuses, branch tracing, and the verification
// suites.

#include "kirchwell/report.hpp"
#include "kirchwell/verify.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace kw;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitBadArguments = 3;

struct CommonArgs {
    std::string problem;
    std::string config_path;
    std::string a_text;
    double p = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double kappa = 0.0;
    int grid_n = 0;
    std::string mode;
    std::string out_dir = "out";
    uint64_t seed = 0;
    int verbosity = 1;

    bool has_p = false, has_lambda = false, has_mu = false, has_kappa = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--problem", args.problem, "canonical problem name");
    cmd->add_option("--config", args.config_path, "key-value config file");
    cmd->add_option("--a", args.a_text,
                    "nonlocal coefficient; accepts shorthand like 0.5a0 or 2a0");
    cmd->add_option("--p", args.p, "superlinear exponent")->each([&](const std::string&) {
        args.has_p = true;
    });
    cmd->add_option("--lambda", args.lambda, "linear weight coefficient")
        ->each([&](const std::string&) { args.has_lambda = true; });
    cmd->add_option("--mu", args.mu, "well depth")->each([&](const std::string&) {
        args.has_mu = true;
    });
    cmd->add_option("--kappa", args.kappa, "g-family parameter")
        ->each([&](const std::string&) { args.has_kappa = true; });
    cmd->add_option("--grid-n", args.grid_n, "nodes per axis");
    cmd->add_option("--mode", args.mode, "grid mode: tensor|radial");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "random stream seed");
    cmd->add_option("-v,--verbosity", args.verbosity, "0..2");
}

ProblemSpec resolve_spec(const CommonArgs& args) {
    ProblemSpec spec;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in.good()) throw Error("cannot read config: " + args.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        spec = spec_from_config(parse_config(ss.str()));
    } else if (!args.problem.empty()) {
        spec = canonical_problem(canonical_from_string(args.problem));
    } else {
        throw Error("either --problem or --config is required");
    }
    if (args.has_p) spec.p = args.p;
    if (args.has_lambda) spec.lambda = args.lambda;
    if (args.has_mu) spec.mu = args.mu;
    if (args.has_kappa) spec.g.kappa = args.kappa;
    if (args.grid_n > 0) spec.grid.nodes_per_axis = args.grid_n;
    if (!args.mode.empty()) {
        if (args.mode != "tensor" && args.mode != "radial")
            throw Error("--mode must be tensor or radial");
        spec.grid.mode = args.mode == "tensor" ? GridMode::tensor : GridMode::radial;
    }
    return spec;
}

/// --a accepts either a plain number or "<factor>a0", resolved against the
/// computed a0(p) of the problem at hand.
double resolve_a(const std::string& text, Problem& pr, uint64_t seed) {
    if (text.empty()) return pr.a();
    const auto pos = text.find("a0");
    if (pos == std::string::npos) return std::stod(text);
    const double factor = pos == 0 ? 1.0 : std::stod(text.substr(0, pos));
    GammaOptions gopt;
    gopt.seed = seed;
    auto ge = gamma_p(pr, pr.p(), gopt);
    const double p = pr.p();
    const double a0 = 2.0 * (p - 2.0) * std::pow(4.0 - p, (4.0 - p) / (p - 2.0)) *
                      std::pow(ge.value / p, 2.0 / (p - 2.0));
    return factor * a0;
}

int cmd_eigen(const CommonArgs& args) {
    auto spec = resolve_spec(args);
    auto pr = Problem::make(spec);
    EigenOptions eopt;
    eopt.seed = args.seed;
    auto scan = mu_convergence_scan(pr, {1.0, 10.0, 100.0, 1000.0}, eopt);
    const std::string csv = mu_scan_csv(scan, pr.spec(), args.seed);
    write_text(fs::path(args.out_dir) / "eigen_scan.csv", csv);
    if (args.verbosity > 0) std::cout << csv;
    return kExitOk;
}

int cmd_constants(const CommonArgs& args) {
    auto spec = resolve_spec(args);
    auto pr = Problem::make(spec);
    pr.set_a(resolve_a(args.a_text, pr, args.seed));
    EigenOptions eopt;
    eopt.seed = args.seed;
    GammaOptions gopt;
    gopt.seed = args.seed;
    auto rep = assemble_constants(pr, eopt, gopt);
    Json j = report_header(pr.spec(), args.seed);
    j["constants"] = constants_to_json(rep);
    const std::string text = j.dump(2) + "\n";
    write_text(fs::path(args.out_dir) / "constants.json", text);
    if (args.verbosity > 0) std::cout << text;
    return kExitOk;
}

int cmd_geometry(const CommonArgs& args) {
    auto spec = resolve_spec(args);
    auto pr = Problem::make(spec);
    pr.set_a(resolve_a(args.a_text, pr, args.seed));
    auto validation = validate_conditions(pr);
    if (!validation.all_pass()) {
        std::cerr << "validation failed:\n" << validation_to_json(validation).dump(2) << "\n";
        return kExitValidation;
    }
    EigenOptions eopt;
    eopt.seed = args.seed;
    auto p1 = lambda1_omega(pr, eopt);
    auto p2 = lambda2_omega(pr, p1, eopt);
    auto q1 = lambda1_mu(pr, pr.mu(), eopt, &p1.field);
    auto q2 = lambda2_mu(pr, pr.mu(), q1, eopt);
    EigenSummary eigs{p1.value, p2.value, q1.value, q2.value};

    double rho = 0.0;
    const Field* psi_ptr = nullptr;
    Field psi;
    if (pr.p() > 4.0) {
        rho = thresholds_superquartic(pr, eigs).rho_a_lambda;
    } else {
        GammaOptions gopt;
        gopt.seed = args.seed;
        auto ge = gamma_p(pr, pr.p(), gopt);
        psi = ge.maximizer;
        psi_ptr = &psi;
        Field phip = p1.field.array().abs().pow(pr.p());
        const double cg = pr.grid().integrate(Field(pr.g().cwiseProduct(phip)));
        auto t = thresholds_subquartic(pr, eigs, ge.value, cg);
        rho = pr.lambda() < p1.value ? t.rho_bar_a_lambda : std::min(t.rho0, t.rho_bar_a);
    }
    SolverOptions sopt;
    sopt.seed = args.seed;
    auto rep = certify_geometry(pr, rho, q1, p1.field, psi_ptr, sopt);
    Json j = report_header(pr.spec(), args.seed);
    j["geometry"] = geometry_to_json(rep);
    const std::string text = j.dump(2) + "\n";
    write_text(fs::path(args.out_dir) / "geometry.json", text);
    if (args.verbosity > 0) std::cout << text;
    return kExitOk;
}

int cmd_census(const CommonArgs& args, bool single_solve) {
    auto spec = resolve_spec(args);
    auto pr = Problem::make(spec);
    pr.set_a(resolve_a(args.a_text, pr, args.seed));
    auto validation = validate_conditions(pr);
    if (!validation.all_pass()) {
        std::cerr << "validation failed:\n" << validation_to_json(validation).dump(2) << "\n";
        return kExitValidation;
    }
    CensusOptions copt;
    copt.solver.seed = args.seed;
    copt.eigen.seed = args.seed;
    copt.gamma.seed = args.seed;
    auto census = multiplicity_census(pr, copt);
    Json j = report_header(pr.spec(), args.seed);
    j["census"] = census_to_json(census);
    const std::string text = j.dump(2) + "\n";
    write_text(fs::path(args.out_dir) / (single_solve ? "solve.json" : "census.json"), text);
    int idx = 0;
    for (const auto& sol : census.solutions) {
        write_solution(fs::path(args.out_dir) / ("solution_" + std::to_string(idx)), pr, sol,
                       args.seed);
        ++idx;
    }
    if (args.verbosity > 0) std::cout << text;
    if (census.solutions.empty()) {
        std::cerr << "no critical points converged\n";
        return kExitNoConvergence;
    }
    return kExitOk;
}

int cmd_branch(const CommonArgs& args, const std::string& a_list_text, double lam_lo_factor,
               double lam_hi_factor) {
    auto spec = resolve_spec(args);
    auto pr = Problem::make(spec);
    pr.set_a(resolve_a(args.a_text, pr, args.seed));
    EigenOptions eopt;
    eopt.seed = args.seed;
    auto p1 = lambda1_omega(pr, eopt);
    const double l1 = p1.value;

    std::vector<double> a_list;
    if (!a_list_text.empty()) {
        std::stringstream ss(a_list_text);
        std::string tok;
        while (std::getline(ss, tok, ',')) a_list.push_back(resolve_a(tok, pr, args.seed));
    } else {
        a_list.push_back(pr.a());
    }
    const double anchor = args.has_lambda ? args.lambda : 0.9 * l1;
    CensusOptions copt;
    copt.solver.seed = args.seed;
    copt.eigen.seed = args.seed;
    copt.gamma.seed = args.seed;
    TraceOptions topt;
    topt.solver.seed = args.seed;
    auto diag = bifurcation_diagram(pr, lam_lo_factor * l1, lam_hi_factor * l1, anchor, a_list,
                                    copt, topt);
    write_text(fs::path(args.out_dir) / "branches.csv", diagram_csv(diag, pr.spec(), args.seed));
    write_text(fs::path(args.out_dir) / "branches.svg", diagram_svg(diag));
    if (args.verbosity > 0)
        std::cout << "rows=" << diag.rows.size() << " folds=" << diag.folds.size() << "\n";
    return kExitOk;
}

int cmd_verify(const std::string& suite, const CommonArgs& args) {
    auto res = verify_suite(suite, args.seed);
    std::cout << suite_to_text(res);
    write_text(fs::path(args.out_dir) / ("verify_" + suite + ".json"),
               suite_to_json(res, args.seed).dump(2) + "\n");
    return res.all_pass() ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kirchwell: a variational workbench for nonlocal steep-well equations"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string suite = "all";
    std::string a_list_text;
    double lam_lo = 0.05, lam_hi = 1.3;

    auto* eigen_cmd = app.add_subcommand("eigen", "weighted eigenvalue scan over mu");
    add_common(eigen_cmd, args);
    auto* constants_cmd = app.add_subcommand("constants", "closed-form constants report");
    add_common(constants_cmd, args);
    auto* geometry_cmd = app.add_subcommand("geometry", "sphere/far-point certificate");
    add_common(geometry_cmd, args);
    auto* solve_cmd = app.add_subcommand("solve", "critical point search at fixed parameters");
    add_common(solve_cmd, args);
    auto* census_cmd = app.add_subcommand("census", "multi-solution census");
    add_common(census_cmd, args);
    auto* branch_cmd = app.add_subcommand("branch", "bifurcation branches over lambda");
    add_common(branch_cmd, args);
    branch_cmd->add_option("--a-list", a_list_text, "comma list of a values (0.5a0 allowed)");
    branch_cmd->add_option("--lambda-lo", lam_lo, "range start as a multiple of lambda1");
    branch_cmd->add_option("--lambda-hi", lam_hi, "range end as a multiple of lambda1");
    auto* verify_cmd = app.add_subcommand("verify", "acceptance verification suites");
    add_common(verify_cmd, args);
    verify_cmd->add_option("--suite", suite, "grid|eigen|functional|constants|thm1|thm2|thm3|branch|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitBadArguments;
    }

    try {
        if (eigen_cmd->parsed()) return cmd_eigen(args);
        if (constants_cmd->parsed()) return cmd_constants(args);
        if (geometry_cmd->parsed()) return cmd_geometry(args);
        if (solve_cmd->parsed()) return cmd_census(args, true);
        if (census_cmd->parsed()) return cmd_census(args, false);
        if (branch_cmd->parsed()) return cmd_branch(args, a_list_text, lam_lo, lam_hi);
        if (verify_cmd->parsed()) {
            const auto& names = verify_suite_names();
            if (std::find(names.begin(), names.end(), suite) == names.end()) {
                std::cerr << "unknown suite: " << suite << "\n";
                return kExitBadArguments;
            }
            return cmd_verify(suite, args);
        }
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        const std::string what = e.what();
        if (what.find("unknown") != std::string::npos ||
            what.find("required") != std::string::npos)
            return kExitBadArguments;
        if (what.find("converge") != std::string::npos ||
            what.find("iteration cap") != std::string::npos ||
            what.find("collapse") != std::string::npos)
            return kExitNoConvergence;
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadArguments;
    }
    return kExitBadArguments;
}

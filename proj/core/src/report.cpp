#include "kirchwell/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace kw {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

Json report_header(const ProblemSpec& spec, uint64_t seed) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["seed"] = seed;
    Json cfg;
    if (spec.name) cfg["problem.name"] = to_string(*spec.name);
    cfg["dim"] = spec.grid.dim;
    cfg["mode"] = spec.grid.mode == GridMode::tensor ? "tensor" : "radial";
    cfg["L"] = spec.grid.half_length;
    cfg["n"] = spec.grid.nodes_per_axis;
    cfg["a"] = spec.a;
    cfg["p"] = spec.p;
    cfg["lambda"] = spec.lambda;
    cfg["mu"] = spec.mu;
    cfg["g.kappa"] = spec.g.kappa;
    cfg["c0"] = spec.c0;
    if (spec.c_star) cfg["c_star"] = *spec.c_star;
    if (spec.R_star) cfg["R_star"] = *spec.R_star;
    j["config"] = cfg;
    return j;
}

Json constants_to_json(const ConstantsReport& r) {
    Json j;
    j["S"] = r.S;
    j["mu0"] = r.mu0;
    j["mu1"] = r.mu1;
    j["mu0_N3"] = r.mu0_N3;
    j["Gamma_p"] = r.Gamma_p;
    j["a0_p"] = r.a0_p;
    if (r.lambda_a_plus)
        j["lambda_a_plus"] = *r.lambda_a_plus;
    else
        j["lambda_a_plus"] = nullptr;
    j["lambda_a_plus_clamped"] = r.lambda_a_plus_clamped;
    j["rho_lambda"] = r.rho_lambda;
    j["rho_a"] = r.rho_a;
    j["rho_a_lambda"] = r.rho_a_lambda;
    j["delta_a_mu"] = r.delta_a_mu;
    j["delta_a"] = r.delta_a;
    j["C1"] = r.C1;
    j["C2"] = r.C2;
    j["rho_bar_lambda"] = r.rho_bar_lambda;
    j["rho_bar_a"] = r.rho_bar_a;
    j["rho0"] = r.rho0;
    j["B"] = r.B;
    j["delta_bar_a_mu"] = r.delta_bar_a_mu;
    j["delta_bar_a"] = r.delta_bar_a;
    j["C3"] = r.C3;
    j["C4"] = r.C4;
    j["rho_hat_a"] = r.rho_hat_a;
    j["Lambda0"] = r.Lambda0;
    j["theta1_mu"] = r.theta1_mu;
    j["theta2_mu"] = r.theta2_mu;
    j["C_N_a_lambda"] = r.C_N_a_lambda;
    j["C_bar_0"] = r.C_bar_0;
    j["D0"] = r.D0;
    j["measure_V_lt_c0"] = r.measure_V_lt_c0;
    j["norm_f_N2"] = r.norm_f_N2;
    j["norm_g_inf"] = r.norm_g_inf;
    j["g_phi1_p"] = r.g_phi1_p;
    j["lambda1_omega"] = r.eigs.lambda1_omega;
    j["lambda2_omega"] = r.eigs.lambda2_omega;
    j["lambda1_mu"] = r.eigs.lambda1_mu;
    j["lambda2_mu"] = r.eigs.lambda2_mu;
    return j;
}

Json solve_result_to_json(const SolveResult& res) {
    Json j;
    j["classification"] = to_string(res.classification);
    j["energy"] = res.energy;
    j["residual"] = res.residual;
    j["norm_mu"] = res.norm_mu;
    j["iterations"] = res.iterations;
    j["positive"] = res.positive;
    return j;
}

Json geometry_to_json(const GeometryReport& rep) {
    Json j;
    j["rho"] = rep.rho;
    j["certified_min_on_sphere"] = rep.certified_min_on_sphere;
    j["J_e0"] = rep.J_e0;
    j["e0_norm_mu"] = rep.e0_norm_mu;
    j["D0"] = rep.D0;
    j["pass"] = rep.pass;
    return j;
}

Json census_to_json(const CensusResult& res) {
    Json j;
    j["final_mu"] = res.final_mu;
    j["mu_ladder"] = res.mu_ladder;
    j["rho_sphere"] = res.rho_sphere;
    j["rho_ball"] = res.rho_ball;
    j["positive_count"] = res.positive_count;
    j["geometry"] = geometry_to_json(res.geometry);
    j["lambda1_omega"] = res.eigs.lambda1_omega;
    j["lambda2_omega"] = res.eigs.lambda2_omega;
    j["lambda1_mu"] = res.eigs.lambda1_mu;
    j["lambda2_mu"] = res.eigs.lambda2_mu;
    Json arr = Json::array();
    for (const auto& s : res.solutions) arr.push_back(solve_result_to_json(s));
    j["solutions"] = arr;
    return j;
}

Json validation_to_json(const ValidationReport& rep) {
    Json j;
    j["all_pass"] = rep.all_pass();
    j["measure_V_lt_c0"] = rep.measure_V_lt_c0;
    j["h3_max_violation"] = rep.h3_max_violation;
    Json arr = Json::array();
    for (const auto& c : rep.checks) {
        Json e;
        e["condition"] = c.condition;
        e["pass"] = c.pass;
        e["witness_node"] = c.witness;
        e["value"] = c.value;
        e["detail"] = c.detail;
        arr.push_back(e);
    }
    j["checks"] = arr;
    return j;
}

namespace {

std::string csv_header(const ProblemSpec& spec, uint64_t seed) {
    std::ostringstream out;
    out << "# schema: " << kSchemaVersion << "\n";
    out << "# seed: " << seed << "\n";
    std::istringstream cfg(config_from_spec(spec));
    std::string line;
    while (std::getline(cfg, line)) out << "# " << line << "\n";
    return out.str();
}

}  // namespace

std::string mu_scan_csv(const MuScan& scan, const ProblemSpec& spec, uint64_t seed) {
    std::ostringstream out;
    out << csv_header(spec, seed);
    out << "mu,lambda1_mu,lambda2_mu,gap1,eigfield_dist\n";
    for (const auto& r : scan.rows)
        out << fmt(r.mu) << ',' << fmt(r.lambda1_mu) << ',' << fmt(r.lambda2_mu) << ','
            << fmt(r.gap1) << ',' << fmt(r.eigfield_dist) << "\n";
    return out.str();
}

std::string diagram_csv(const Diagram& diagram, const ProblemSpec& spec, uint64_t seed) {
    std::ostringstream out;
    out << csv_header(spec, seed);
    out << "a,lambda,norm_mu,energy,branch_id,fold_flag,residual\n";
    for (const auto& r : diagram.rows)
        out << fmt(r.a) << ',' << fmt(r.lambda) << ',' << fmt(r.norm_mu) << ','
            << fmt(r.energy) << ',' << r.branch_id << ',' << (r.fold_flag ? 1 : 0) << ','
            << fmt(r.residual) << "\n";
    return out.str();
}

std::string branch_csv(const Branch& branch, double a, const ProblemSpec& spec, uint64_t seed) {
    Diagram d;
    for (const auto& bp : branch.points)
        d.rows.push_back({a, bp.lambda, bp.norm_mu, bp.energy, 0, bp.fold_flag, bp.residual});
    return diagram_csv(d, spec, seed);
}

std::string diagram_svg(const Diagram& diagram) {
    double lmin = 1e300, lmax = -1e300, nmin = 1e300, nmax = -1e300;
    for (const auto& r : diagram.rows) {
        lmin = std::min(lmin, r.lambda);
        lmax = std::max(lmax, r.lambda);
        nmin = std::min(nmin, r.norm_mu);
        nmax = std::max(nmax, r.norm_mu);
    }
    if (diagram.rows.empty()) {
        lmin = 0;
        lmax = 1;
        nmin = 0;
        nmax = 1;
    }
    if (lmax <= lmin) lmax = lmin + 1;
    if (nmax <= nmin) nmax = nmin + 1;
    const double Wpx = 640, Hpx = 480, pad = 40;
    auto X = [&](double l) { return pad + (l - lmin) / (lmax - lmin) * (Wpx - 2 * pad); };
    auto Y = [&](double nm) { return Hpx - pad - (nm - nmin) / (nmax - nmin) * (Hpx - 2 * pad); };

    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << Wpx << "' height='" << Hpx
        << "' viewBox='0 0 " << Wpx << ' ' << Hpx << "'>\n";
    svg << "<rect width='100%' height='100%' fill='white'/>\n";
    svg << "<line x1='" << pad << "' y1='" << Hpx - pad << "' x2='" << Wpx - pad << "' y2='"
        << Hpx - pad << "' stroke='black'/>\n";
    svg << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='" << Hpx - pad
        << "' stroke='black'/>\n";
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    for (const auto& r : diagram.rows) {
        const char* color = palette[static_cast<size_t>(r.branch_id) % 6];
        svg << "<circle cx='" << fmt(X(r.lambda)) << "' cy='" << fmt(Y(r.norm_mu))
            << "' r='2' fill='" << color << "'/>\n";
        if (r.fold_flag)
            svg << "<circle cx='" << fmt(X(r.lambda)) << "' cy='" << fmt(Y(r.norm_mu))
                << "' r='6' fill='none' stroke='black' stroke-width='1.5'/>\n";
    }
    svg << "<text x='" << Wpx / 2 << "' y='" << Hpx - 8 << "' text-anchor='middle'>lambda</text>\n";
    svg << "<text x='12' y='" << Hpx / 2 << "' transform='rotate(-90 12 " << Hpx / 2
        << ")' text-anchor='middle'>norm_mu</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_solution(const std::filesystem::path& prefix, const Problem& problem,
                    const SolveResult& res, uint64_t seed) {
    std::filesystem::path bin = prefix;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    KW_REQUIRE(out.good(), "write_solution: cannot open " + bin.string());
    out.write(reinterpret_cast<const char*>(res.field.data()),
              static_cast<std::streamsize>(sizeof(double) * res.field.size()));
    out.close();

    Json j = report_header(problem.spec(), seed);
    j["solution"] = solve_result_to_json(res);
    j["values_file"] = bin.filename().string();
    j["value_count"] = res.field.size();
    j["value_format"] = "float64-le";
    std::filesystem::path sidecar = prefix;
    sidecar += ".json";
    write_text(sidecar, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    KW_REQUIRE(out.good(), "cannot open for writing: " + path.string());
    out << content;
}

}  // namespace kw

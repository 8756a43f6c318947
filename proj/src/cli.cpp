#include "cgm/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cgm/report.hpp"

namespace cgm {

namespace {

bool parse_grid(const std::string& s, int& nu, int& nv) {
    auto x = s.find('x');
    if (x == std::string::npos) return false;
    try {
        nu = std::stoi(s.substr(0, x));
        nv = std::stoi(s.substr(x + 1));
    } catch (const std::exception&) {
        return false;
    }
    return nu > 0 && nv > 0;
}

std::vector<int> parse_refine(const std::string& s) {
    std::vector<int> grids;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) grids.push_back(std::stoi(item));
    return grids;
}

void write_report(const Json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream f(out_path);
    if (!f) throw std::runtime_error("cannot write " + out_path);
    f << j.dump(2) << "\n";
}

struct CommonFlags {
    std::string surface = "clifford";
    std::string grid = "64x64";
    std::string refine;
    std::string out;
    std::string mesh = "mesh";
    int n = 0;
    int fd_order = 2;
    double tol_rank = ClassifyOptions{}.tol_rank;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_refine, bool with_mesh) {
    cmd->add_option("--surface", f.surface, "surface family, e.g. clifford, torus:r=0.6");
    cmd->add_option("--n", f.n, "ambient sphere dimension override (pads with zeros)");
    cmd->add_option("--grid", f.grid, "grid size NxM");
    cmd->add_option("--fd-order", f.fd_order, "finite-difference order")
        ->check(CLI::IsMember({2, 4, 6}));
    cmd->add_option("--tol-rank", f.tol_rank, "relative singular-value rank threshold");
    cmd->add_option("--out", f.out, "write the JSON report here (default: stdout)");
    if (with_refine)
        cmd->add_option("--refine", f.refine, "comma-separated grid sizes for a convergence table");
    if (with_mesh) cmd->add_option("--mesh", f.mesh, "output path prefix for OBJ meshes");
}

AnalysisConfig to_config(const CommonFlags& f) {
    AnalysisConfig cfg;
    cfg.family = f.surface;
    cfg.n = f.n;
    if (!parse_grid(f.grid, cfg.nu, cfg.nv)) throw CLI::ValidationError("--grid", "expected NxM");
    cfg.fd_order = f.fd_order;
    cfg.classify.tol_rank = f.tol_rank;
    return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"conformal Gauss map analysis and reconstruction"};
    app.require_subcommand(1);

    CommonFlags fa, fr, fe;
    CLI::App* analyze = app.add_subcommand("analyze", "build the congruence and verify residuals");
    add_common(analyze, fa, false, false);
    CLI::App* roundtrip =
        app.add_subcommand("roundtrip", "analyze, then reconstruct the surface from the congruence");
    add_common(roundtrip, fr, true, false);
    CLI::App* exporter = app.add_subcommand("export", "write OBJ meshes of surface, recovery, dual");
    add_common(exporter, fe, false, true);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // 0 for --help, 2 for usage errors
    }

    try {
        if (analyze->parsed()) {
            AnalysisOutput a = run_analysis(to_config(fa));
            write_report(a.report, fa.out);
            return a.checks_pass ? 0 : 1;
        }
        if (roundtrip->parsed()) {
            AnalysisConfig cfg = to_config(fr);
            AnalysisOutput a = run_analysis(cfg);
            RoundtripOutput rt = run_roundtrip(a);
            if (!fr.refine.empty())
                rt.report["convergence"] = convergence_table(cfg, parse_refine(fr.refine));
            write_report(rt.report, fr.out);
            return a.checks_pass && rt.ok ? 0 : 1;
        }
        if (exporter->parsed()) {
            AnalysisOutput a = run_analysis(to_config(fe));
            RoundtripOutput rt = run_roundtrip(a);
            auto files = export_meshes(a, rt, fe.mesh);
            Json j = rt.report;
            j["exported"] = files;
            write_report(j, fe.out);
            return a.checks_pass ? 0 : 1;
        }
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace cgm

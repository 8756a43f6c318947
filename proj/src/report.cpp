#include "cgm/report.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace cgm {

namespace {

Json summary_json(const ScalarSummary& s) {
    return Json{{"max", s.max}, {"mean", s.mean}, {"count", s.count}};
}

Json residuals_json(const ResidualReport& r) {
    Json j;
    j["eq2"] = summary_json(summarize(r.eq2));
    j["eq3"] = summary_json(summarize(r.eq3));
    j["strong_conformality"] = summary_json(summarize(r.strong_conformality));
    j["eq5"] = summary_json(summarize(r.eq5));
    j["eq6"] = summary_json(summarize(r.eq6));
    j["eq8"] = summary_json(summarize(r.eq8));
    j["eq9"] = summary_json(summarize(r.eq9));
    j["lemma6"] = summary_json(summarize(r.lemma6));
    j["tension_norm"] = summary_json(summarize(r.tension_norm));
    return j;
}

Json classification_json(const RankClassification& cls, const GridSpec& grid) {
    Json j;
    j["rank0"] = cls.count(0);
    j["rank1"] = cls.count(1);
    j["rank2"] = cls.count(2);
    std::map<std::string, int> masked;
    for (Mask m : cls.rank.mask)
        if (m != Mask::ok) ++masked[mask_name(m)];
    j["masked"] = masked;
    j["total"] = grid.size();
    return j;
}

}  // namespace

AnalysisOutput run_analysis(const AnalysisConfig& cfg) {
    AnalysisOutput out;
    out.chart = make_chart(cfg.family, cfg.nu, cfg.nv, cfg.n);
    CongruenceOptions copts;
    copts.fd_order = cfg.fd_order;
    out.F = build_congruence(out.chart, copts);
    auto [n_u, n_v] = compute_N(out.F);
    out.n_u = std::move(n_u);
    out.n_v = std::move(n_v);
    out.n10 = compute_N10(out.n_u, out.n_v);
    out.tau = compute_tension(out.F, out.n_u, out.n_v);
    out.residuals = evaluate_residuals(out.F, out.n_u, out.n_v, out.n10, out.tau);

    // lift-level checks
    double lightcone_max = 0.0, conf_max = 0.0, imm_min = 1.0;
    out.F.jets.for_each_ok([&](int, int, const Jet2& jet) {
        lightcone_max = std::max(lightcone_max, std::abs(inner(jet.sigma, jet.sigma)));
        conf_max = std::max(conf_max, conformality_residual(jet));
        imm_min = std::min(imm_min, immersion_residual(jet));
    });
    Field<std::uint8_t> set_a = detect_set_A(out.F, out.n_u, out.n_v);
    int set_a_count = 0;
    set_a.for_each_ok([&](int, int, std::uint8_t v) { set_a_count += v; });

    bool classify_ok = true;
    try {
        out.classification = classify_rank_U(out.F, out.n10, out.tau, cfg.classify);
    } catch (const HypothesisViolation& e) {
        classify_ok = false;
        out.classify_error = e.what();
    }

    Json j;
    j["schema_version"] = kSchemaVersion;
    j["tool"] = {{"name", "cgm"}, {"version", kToolVersion}};
    Json params = Json::object();
    auto colon = cfg.family.find(':');
    j["metadata"] = {
        {"family", cfg.family.substr(0, colon)},
        {"family_spec", cfg.family},
        {"n", out.chart.n},
        {"grid", {cfg.nu, cfg.nv}},
        {"fd_order", cfg.fd_order},
        {"tolerances",
         {{"tol_rank", cfg.classify.tol_rank},
          {"guard", cfg.classify.guard},
          {"rank0_abs", cfg.classify.rank0_abs},
          {"hypothesis_tol", cfg.classify.hypothesis_tol}}},
    };
    j["checks"] = {
        {"lightcone_max", lightcone_max},
        {"conformality_max", conf_max},
        {"immersion_min", imm_min},
        {"set_A_count", set_a_count},
        {"hypotheses_pass", classify_ok},
    };
    if (!classify_ok) j["checks"]["hypothesis_violation"] = out.classify_error;
    j["residuals"] = residuals_json(out.residuals);
    if (out.classification)
        j["classification"] = classification_json(*out.classification, out.F.grid);

    out.checks_pass = classify_ok && lightcone_max < 1e-10 && set_a_count == 0;
    j["checks"]["pass"] = out.checks_pass;
    out.report = std::move(j);
    return out;
}

RoundtripOutput run_roundtrip(AnalysisOutput& analysis) {
    RoundtripOutput out;
    out.report = analysis.report;
    if (!analysis.classification) return out;
    out.result = reconstruct(analysis.F, *analysis.classification, analysis.n10, analysis.tau);
    out.summary = roundtrip_error(analysis.chart, analysis.F, *out.result);
    Json j;
    j["branch"] = branch_name(out.summary.branch);
    if (out.result->infinitely_many) {
        j["infinitely_many"] = true;
        j["constant_V_deviation"] = 0.0;
    } else {
        j["max_error"] = out.summary.error.max;
        j["mean_error"] = out.summary.error.mean;
        if (out.summary.dual_available) {
            j["dual_max_error"] = out.summary.dual_error.max;
            j["dual_identified"] = out.summary.dual_error.max < 1e-4;
        }
    }
    j["d01_stability_max"] = summarize(out.result->d01_stability).max;
    out.report["roundtrip"] = j;
    out.ok = true;
    return out;
}

double fit_slope(const std::vector<double>& h, const std::vector<double>& residual, double floor) {
    std::vector<double> xs, ys;
    for (size_t k = 0; k < h.size(); ++k) {
        if (residual[k] > floor) {
            xs.push_back(std::log(h[k]));
            ys.push_back(std::log(residual[k]));
        }
    }
    if (xs.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    const double n = static_cast<double>(xs.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Json convergence_table(const AnalysisConfig& base, const std::vector<int>& grids) {
    Json entries = Json::array();
    std::map<std::string, std::vector<double>> series;
    std::vector<double> hs;
    for (int g : grids) {
        AnalysisConfig cfg = base;
        cfg.nu = cfg.nv = g;
        AnalysisOutput a = run_analysis(cfg);
        RoundtripOutput rt = run_roundtrip(a);
        Json e;
        e["grid"] = {g, g};
        const double h = std::max(a.F.grid.hu, a.F.grid.hv);
        e["h"] = h;
        hs.push_back(h);
        auto push = [&](const std::string& key, double v) {
            e[key] = v;
            series[key].push_back(v);
        };
        push("eq2_max", summarize(a.residuals.eq2).max);
        push("eq3_max", summarize(a.residuals.eq3).max);
        push("strong_conformality_max", summarize(a.residuals.strong_conformality).max);
        push("eq5_max", summarize(a.residuals.eq5).max);
        push("eq6_max", summarize(a.residuals.eq6).max);
        push("eq8_max", summarize(a.residuals.eq8).max);
        push("eq9_max", summarize(a.residuals.eq9).max);
        push("lemma6_max", summarize(a.residuals.lemma6).max);
        push("tension_max", summarize(a.residuals.tension_norm).max);
        if (rt.ok && !rt.result->infinitely_many) push("roundtrip_max", rt.summary.error.max);
        entries.push_back(e);
    }
    Json slopes;
    for (const auto& [key, values] : series)
        if (values.size() == grids.size()) slopes[key] = fit_slope(hs, values);
    return Json{{"entries", entries}, {"slopes", slopes}};
}

namespace {

void write_obj(const std::string& path, const Field<RVec>& lines, const GridSpec& grid) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.precision(17);
    std::vector<int> vid(grid.size(), 0);
    int next = 1;
    for (int i = 0; i < grid.nu; ++i) {
        for (int j = 0; j < grid.nv; ++j) {
            if (!lines.ok(i, j)) continue;
            RVec l = lines.at(i, j);
            // normalize to the (x, 1) gauge, then emit the unit S^3 point
            if (std::abs(l(l.size() - 1)) < 1e-12) continue;
            l /= l(l.size() - 1);
            RVec x = l.head(l.size() - 1);
            x.normalize();
            f << "v";
            for (int c = 0; c < x.size(); ++c) f << " " << x(c);
            f << "\n";
            vid[grid.idx(i, j)] = next++;
        }
    }
    const int iu_max = grid.periodic_u ? grid.nu : grid.nu - 1;
    const int jv_max = grid.periodic_v ? grid.nv : grid.nv - 1;
    for (int i = 0; i < iu_max; ++i) {
        for (int j = 0; j < jv_max; ++j) {
            const int i1 = (i + 1) % grid.nu, j1 = (j + 1) % grid.nv;
            const int a = vid[grid.idx(i, j)], b = vid[grid.idx(i1, j)];
            const int c = vid[grid.idx(i1, j1)], d = vid[grid.idx(i, j1)];
            if (a && b && c && d) f << "f " << a << " " << b << " " << c << " " << d << "\n";
        }
    }
}

}  // namespace

std::vector<std::string> export_meshes(const AnalysisOutput& analysis,
                                       const RoundtripOutput& roundtrip,
                                       const std::string& prefix) {
    if (analysis.chart.n != 3)
        throw ContractViolation("export_meshes: OBJ export is limited to n = 3");
    std::vector<std::string> files;
    Field<RVec> surf = sample_lift(analysis.chart);
    const std::string surface_path = prefix + "_surface.obj";
    write_obj(surface_path, surf, analysis.chart.grid);
    files.push_back(surface_path);

    if (!roundtrip.ok) return files;
    const ReconstructionResult& res = *roundtrip.result;
    if (res.infinitely_many) {
        const std::string marker = prefix + "_branch.txt";
        std::ofstream f(marker);
        f << "branch: " << branch_name(Branch::rank0_constant) << "\n"
          << "the congruence is a constant 2-sphere; every conformal map into it is a "
             "preimage, so no unique recovered mesh is written\n";
        files.push_back(marker);
        return files;
    }
    const std::string rec = prefix + "_recovered.obj";
    write_obj(rec, res.line1, analysis.chart.grid);
    files.push_back(rec);
    if (roundtrip.summary.branch == Branch::rank1_dual_pair) {
        // relabel: per point, the line closer to sigma is the surface, the other the dual
        Field<RVec> dual(analysis.F.grid);
        dual.mask = res.line1.mask;
        for (int i = 0; i < analysis.F.grid.nu; ++i) {
            for (int j = 0; j < analysis.F.grid.nv; ++j) {
                if (!dual.ok(i, j)) continue;
                const RVec sigma =
                    analysis.chart.lift(analysis.F.grid.u(i), analysis.F.grid.v(j));
                const double e1 = line_angle_sin(res.line1.at(i, j), sigma);
                const double e2 = line_angle_sin(res.line2.at(i, j), sigma);
                dual.at(i, j) = e1 < e2 ? res.line2.at(i, j) : res.line1.at(i, j);
            }
        }
        const std::string dual_path = prefix + "_dual.obj";
        write_obj(dual_path, dual, analysis.chart.grid);
        files.push_back(dual_path);
    }
    return files;
}

}  // namespace cgm

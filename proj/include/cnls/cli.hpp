#pragma once

#include "cnls/config.hpp"
#include "cnls/continuation.hpp"
#include "cnls/error.hpp"
#include "cnls/greens.hpp"
#include "cnls/hypotheses.hpp"
#include "cnls/oracle.hpp"
#include "cnls/solver.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cnls::cli {

enum ExitCode : int { ok = 0, hypothesis_failed = 1, solver_failed = 2, input_error = 3 };

inline int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::hypothesis_failure: return hypothesis_failed;
    case ErrorCode::no_nontrivial_solution:
    case ErrorCode::newton_divergence:
    case ErrorCode::singular_jacobian:
    case ErrorCode::integration_overflow: return solver_failed;
    default: return input_error;
    }
}

inline void write_profile(std::ostream& os, const Grid& grid, const WavePair& u) {
    os << "x,u1,u2\n";
    for (std::size_t j = 0; j < grid.size(); ++j)
        os << format_double(grid.x(j)) << ',' << format_double(u.u1[j]) << ',' << format_double(u.u2[j]) << '\n';
}

/// Reads a profile CSV (header x,u1,u2) sampled on the grid.
inline WavePair read_profile(const std::string& path, const Grid& grid) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
    std::string line;
    std::getline(f, line);
    if (config_detail::trim(line) != "x,u1,u2") throw Error(ErrorCode::parse_error, path + ": expected header x,u1,u2");
    WavePair u;
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (config_detail::trim(line).empty()) continue;
        const auto cols = config_detail::parse_list("profile", path + " row " + std::to_string(row), line);
        if (cols.size() != 3) throw Error(ErrorCode::parse_error, path + " row " + std::to_string(row) + ": expected 3 columns");
        u.u1.push_back(cols[1]);
        u.u2.push_back(cols[2]);
    }
    if (u.size() != grid.size())
        throw Error(ErrorCode::parse_error, path + ": " + std::to_string(u.size()) + " rows, grid has " +
                                                std::to_string(grid.size()));
    return u;
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::parse_error, "cannot write '" + path + "'");
    f << text;
}

/// Writes to the file when a path is given, else to the stream.
inline void emit(const std::string& path, std::ostream& fallback, const std::string& text) {
    if (path.empty()) fallback << text;
    else write_file(path, text);
}

inline std::vector<double> parse_lambdas(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto t = config_detail::trim(item);
        double v = 0.0;
        const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
            throw Error(ErrorCode::parse_error, "--lambdas: '" + t + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw Error(ErrorCode::parse_error, "--lambdas: empty list");
    return out;
}

inline void report_hypotheses(std::ostream& os, const TheoremCheck& check) {
    for (const auto& e : check.report.entries) {
        os << "hypothesis." << e.id << ".status=" << to_string(e.status) << '\n';
        if (!e.note.empty()) os << "hypothesis." << e.id << ".note=" << e.note << '\n';
        for (const auto& [k, v] : e.witnesses) os << "hypothesis." << e.id << '.' << k << '=' << format_double(v) << '\n';
    }
    if (check.witnesses) {
        os << "witness.B=" << format_double(check.witnesses->B) << '\n'
           << "witness.C_max=" << format_double(check.witnesses->C_max) << '\n'
           << "witness.C_min=" << format_double(check.witnesses->C_min) << '\n';
    }
    if (check.annulus)
        os << "annulus.r=" << format_double(check.annulus->r) << '\n'
           << "annulus.R=" << format_double(check.annulus->R) << '\n';
}

inline void report_cone(std::ostream& os, const FixedPointMap& map) {
    if (!map.has_cone()) return;
    const auto& cone = map.cone();
    os << "cone.M=[" << format_double(cone.M.lo) << ',' << format_double(cone.M.hi) << "]\n";
    for (std::size_t i = 0; i < 2; ++i)
        os << "cone.m" << i + 1 << '=' << format_double(cone.m[i]) << '\n'
           << "cone.p0_" << i + 1 << '=' << format_double(cone.p0[i]) << '\n';
}

inline void report_solution(std::ostream& os, const Solution& s, const std::string& prefix = "solution") {
    const auto& d = s.diagnostics;
    os << prefix << ".norm=" << format_double(d.norm) << '\n'
       << prefix << ".norm_u1=" << format_double(s.wave.norm(0)) << '\n'
       << prefix << ".norm_u2=" << format_double(s.wave.norm(1)) << '\n'
       << prefix << ".method=" << to_string(d.method) << '\n'
       << prefix << ".iterations=" << d.iterations << '\n'
       << prefix << ".update_norm=" << format_double(d.update_norm) << '\n'
       << prefix << ".residual=" << format_double(d.residual) << '\n'
       << prefix << ".residual_ok=" << (d.residual_ok ? "true" : "false") << '\n'
       << prefix << ".boundary=" << format_double(d.boundary) << '\n'
       << prefix << ".cone_gap1=" << format_double(d.cone_gap[0]) << '\n'
       << prefix << ".cone_gap2=" << format_double(d.cone_gap[1]) << '\n'
       << prefix << ".min_value=" << format_double(d.min_value) << '\n'
       << prefix << ".clipped=" << format_double(d.clipped) << '\n'
       << prefix << ".seed_index=" << d.seed_index << '\n'
       << prefix << ".seed_norm=" << format_double(d.seed_norm) << '\n'
       << prefix << ".r=" << format_double(d.annulus.r) << '\n'
       << prefix << ".R=" << format_double(d.annulus.R) << '\n';
}

/// Runs one subcommand. Returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Bound states of linearly coupled stationary NLS systems"};
    app.require_subcommand(1);

    struct Common {
        std::string config, out, report;
        bool override_hypotheses = false;
        std::optional<std::size_t> grid_n;
        std::optional<double> grid_l;
    };
    Common opt;
    std::string lambdas = "1", variant = "nonlinear", profiles, init;
    bool odd_oracle = false;
    int component = 1;
    std::size_t stride = 0;

    auto common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("config", opt.config, "configuration file (INI)")->required();
        if (with_out) sub->add_option("--out", opt.out, "CSV output path (stdout when omitted)");
        sub->add_option("--report", opt.report, "key=value report path");
        sub->add_flag("--override-hypotheses", opt.override_hypotheses, "solve even if hypotheses fail");
        sub->add_option("--grid-N", opt.grid_n, "override the node count");
        sub->add_option("--grid-L", opt.grid_l, "override the half-width");
    };
    auto* check = app.add_subcommand("check", "evaluate the existence hypotheses and witnesses");
    common(check, false);
    auto* solve_cmd = app.add_subcommand("solve", "positive solution by the fixed-point iteration");
    common(solve_cmd, true);
    auto* odd_cmd = app.add_subcommand("solve-odd", "odd solution from the half-line problem");
    common(odd_cmd, true);
    auto* branch = app.add_subcommand("branch", "trace a lambda-branch");
    common(branch, true);
    branch->add_option("--lambdas", lambdas, "comma-separated lambda values")->required();
    branch->add_option("--variant", variant, "nonlinear or fully")->check(CLI::IsMember({"nonlinear", "fully"}));
    branch->add_option("--profiles", profiles, "prefix for per-point profile CSVs (<prefix><k>.csv)");
    auto* oracle_cmd = app.add_subcommand("oracle", "finite-difference Newton solve");
    common(oracle_cmd, true);
    oracle_cmd->add_option("--init", init, "initial profile CSV (default: the fixed-point solution)");
    oracle_cmd->add_flag("--odd", odd_oracle, "half-line boundary conditions with odd extension");
    auto* greens_cmd = app.add_subcommand("greens", "decaying solutions, weight p and G(x, x)");
    common(greens_cmd, true);
    greens_cmd->add_option("--component", component, "1 (potential a) or 2 (potential d)")->check(CLI::Range(1, 2));
    greens_cmd->add_option("--stride", stride, "node stride of the (x, s) samples (default: about 200 per axis)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }

    try {
        RunConfig rc = parse_config_file(opt.config);
        if (opt.grid_n || opt.grid_l)
            rc.problem = rc.problem.with_grid(Grid(opt.grid_l.value_or(rc.problem.grid().half_width()),
                                                   opt.grid_n.value_or(rc.problem.grid().size())));
        rc.solver.override_hypotheses = opt.override_hypotheses;
        const Problem& p = rc.problem;
        std::ostringstream report;
        report << serialize_config(p, rc.solver);

        if (check->parsed()) {
            const auto map = FixedPointMap::build(p);
            const auto result = check_theorem(map);
            report_hypotheses(report, result);
            report_cone(report, map);
            report << "check.passed=" << (result.report.all_required_pass() ? "true" : "false") << '\n';
            emit(opt.report, out, report.str());
            return result.report.all_required_pass() ? ok : hypothesis_failed;
        }

        if (solve_cmd->parsed() || odd_cmd->parsed()) {
            if (odd_cmd->parsed()) rc.solver.symmetry = Symmetry::odd;
            const Solution s = solve(p, rc.solver);
            std::ostringstream csv;
            write_profile(csv, p.grid(), s.wave);
            emit(opt.out, out, csv.str());
            report_solution(report, s);
            if (!opt.report.empty()) write_file(opt.report, report.str());
            if (!s.diagnostics.residual_ok)
                err << "warning: finite-difference residual " << format_double(s.diagnostics.residual)
                    << " exceeds residual_tol; refine the grid\n";
            return ok;
        }

        if (branch->parsed()) {
            const auto values = parse_lambdas(lambdas);
            const auto kind = variant == "fully" ? BranchVariant::fully_scaled : BranchVariant::nonlinear_scaled;
            const auto points = trace_branch(p, values, kind, rc.solver);
            std::ostringstream csv;
            csv << "lambda,norm,r_lambda,R_lambda,converged\n";
            for (std::size_t k = 0; k < points.size(); ++k) {
                const auto& pt = points[k];
                csv << format_double(pt.lambda) << ',' << format_double(pt.norm) << ',' << format_double(pt.bounds.r)
                    << ',' << format_double(pt.bounds.R) << ',' << (pt.converged() ? "true" : "false") << '\n';
                report << "branch." << k << ".lambda=" << format_double(pt.lambda) << '\n';
                if (pt.converged()) report_solution(report, *pt.solution, "branch." + std::to_string(k));
                else report << "branch." << k << ".failure=" << pt.failure << '\n';
                if (!profiles.empty() && pt.converged()) {
                    std::ostringstream prof;
                    write_profile(prof, p.grid(), pt.solution->wave);
                    write_file(profiles + std::to_string(k) + ".csv", prof.str());
                }
            }
            emit(opt.out, out, csv.str());
            if (!opt.report.empty()) write_file(opt.report, report.str());
            return ok;
        }

        if (oracle_cmd->parsed()) {
            WavePair start;
            std::optional<Solution> reference;
            if (!init.empty()) {
                start = read_profile(init, p.grid());
            } else {
                if (odd_oracle) rc.solver.symmetry = Symmetry::odd;
                reference = solve(p, rc.solver);
                start = reference->wave;
            }
            const auto result = oracle_solve(p, start, odd_oracle ? Boundary::half_line : Boundary::full_line);
            std::ostringstream csv;
            write_profile(csv, p.grid(), result.u);
            emit(opt.out, out, csv.str());
            report << "oracle.iterations=" << result.iterations << '\n'
                   << "oracle.residual=" << format_double(result.residual) << '\n'
                   << "oracle.norm=" << format_double(result.u.norm()) << '\n'
                   << "oracle.distance_to_start=" << format_double(distance(result.u, start)) << '\n';
            if (!opt.report.empty()) write_file(opt.report, report.str());
            return ok;
        }

        if (greens_cmd->parsed()) {
            const auto basis = LinearBasis::build(component == 1 ? p.a() : p.d(), p.grid());
            const GreensKernel kernel(basis);
            const std::size_t n = p.grid().size();
            const std::size_t step = stride > 0 ? stride : std::max<std::size_t>(1, (n - 1) / 200);
            std::ostringstream csv;
            csv << "x,s,G\n";
            for (std::size_t j = 0; j < n; j += step)
                for (std::size_t k = 0; k < n; k += step) {
                    const double x = p.grid().x(j), s = p.grid().x(k);
                    csv << format_double(x) << ',' << format_double(s) << ',' << format_double(kernel(x, s)) << '\n';
                }
            emit(opt.out, out, csv.str());
            report << "greens.component=" << component << '\n'
                   << "greens.crossing=" << format_double(basis.crossing()) << '\n'
                   << "greens.wronskian_deviation=" << format_double(basis.wronskian_deviation()) << '\n';
            report_cone(report, FixedPointMap::build(p));
            if (!opt.report.empty()) write_file(opt.report, report.str());
            return ok;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    }
    return input_error;
}

} // namespace cnls::cli

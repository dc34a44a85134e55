#include "chemofem/driver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace chemofem;

struct Options {
    std::string preset = "test2";
    std::string config_path;
    std::string meshes;
    double dt = 0.0;
    double t_final = -1.0;
    std::string out;
    std::string init_mode;
    int quadrature_degree = 0;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--preset", o.preset, "test1 or test2")->check(CLI::IsMember({"test1", "test2"}));
    cmd->add_option("--config", o.config_path, "configuration file (key = value)")->check(CLI::ExistingFile);
    cmd->add_option("--meshes", o.meshes, "comma separated mesh sizes");
    cmd->add_option("--dt", o.dt, "time step")->check(CLI::PositiveNumber);
    cmd->add_option("--tfinal", o.t_final, "final time")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--init-mode", o.init_mode, "initial projection")->check(CLI::IsMember({"elliptic", "nodal"}));
    cmd->add_option("--quadrature-degree", o.quadrature_degree, "rule for nonlinear terms")->check(CLI::Range(1, 8));
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long v = 0;
        try {
            v = std::stol(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || v <= 0) {
            throw ConfigError("--meshes: '" + s + "' is not a list of positive integers");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

/// Resolves the configuration: file or preset first, then command-line
/// overrides, validated again as a whole.
RunConfig resolve(const Options& o) {
    std::string text = "[run]\npreset = " + o.preset + "\n";
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        std::stringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    RunConfig cfg = parse_config(text);
    if (o.dt > 0.0) cfg.dt = o.dt;
    if (o.t_final >= 0.0) cfg.t_final = o.t_final;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.init_mode.empty()) cfg.init_mode = o.init_mode == "nodal" ? InitMode::Nodal : InitMode::EllipticProjection;
    if (o.quadrature_degree > 0) cfg.quadrature_degree = o.quadrature_degree;
    // A changed time grid can leave configured snapshots off the grid or past T.
    if (o.dt > 0.0 || o.t_final >= 0.0) {
        std::vector<double> kept;
        for (double ts : cfg.snapshot_times) {
            const double r = ts / cfg.dt;
            if (ts <= cfg.t_final * (1.0 + 1e-12) && std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r)) {
                kept.push_back(ts);
            }
        }
        if (kept.empty() || kept.back() != cfg.t_final) kept.push_back(cfg.t_final);
        cfg.snapshot_times = kept;
    }
    return parse_config(serialize_config(cfg));
}

void fail(const std::string& command, const std::string& kind, const std::string& message,
          const nlohmann::json& extra = nullptr) {
    nlohmann::json j{{"status", "failure"}, {"command", command}, {"error", kind}, {"message", message}};
    if (!extra.is_null()) j["details"] = extra;
    std::cerr << j.dump() << "\n";
}

int cmd_run(const Options& o) {
    RunConfig cfg = resolve(o);
    if (!o.meshes.empty()) {
        const auto sizes = parse_sizes(o.meshes);
        if (sizes.size() == 1) {
            cfg.ky = sizes[0];
            cfg.kx = static_cast<std::size_t>(std::llround(static_cast<double>(sizes[0]) * cfg.lx / cfg.ly));
        } else if (sizes.size() == 2) {
            cfg.kx = sizes[0];
            cfg.ky = sizes[1];
        } else {
            throw ConfigError("--meshes: run takes 'k' or 'kx,ky'");
        }
    }
    std::printf("run: %zux%zu mesh on [0,%g]x[0,%g], dt=%g, T=%g, init=%s\n", cfg.kx, cfg.ky, cfg.lx, cfg.ly, cfg.dt,
                cfg.t_final, to_string(cfg.init_mode));
    const auto r = run_config(cfg, [](const std::string& line) { std::printf("  snapshot %s\n", line.c_str()); });
    const auto& last = r.diagnostics.back();
    std::printf("done: %zu steps, mass drift %.3e, c_max %.6g, eta in [%.6g, %.6g]\n", r.n_steps, r.max_mass_drift,
                last.c_max, last.eta_min, last.eta_max);
    if (!r.c_max_nonincreasing) {
        std::printf("note: max c_h increased after the first step\n");
    }
    if (!r.finite) {
        fail("run", "non_finite", "NaN or Inf in the solution", {{"output_dir", cfg.output_dir}});
        return 1;
    }
    return 0;
}

int cmd_converge(const Options& o) {
    const RunConfig cfg = resolve(o);
    const auto meshes = parse_sizes(o.meshes.empty() ? "10,20,30,40,50" : o.meshes);
    std::printf("converge: dt=%g, T=%g, init=%s\n", cfg.dt, cfg.t_final, to_string(cfg.init_mode));
    const auto r = run_convergence(cfg, meshes, [](const ConvergenceRow& row) {
        std::printf("  k=%zu done (eta l_inf L2 error %.4e)\n", row.k, row.norms.linf_l2);
        std::fflush(stdout);
    });
    for (const VariableTable* t : {&r.report.eta, &r.report.c, &r.report.u1, &r.report.u2}) {
        std::printf("\n[%s]\n%s", t->name.c_str(), csv_table(*t).c_str());
    }
    for (const auto& f : r.files) std::printf("wrote %s\n", f.c_str());
    return 0;
}

int cmd_check() {
    const auto results = run_checks();
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& c : results) {
        std::printf("%s %s value=%.3e tol=%.1e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tolerance);
        if (!c.passed) failed.push_back({{"check", c.name}, {"value", c.value}, {"tolerance", c.tolerance}});
    }
    if (!failed.empty()) {
        fail("check", "invariant_violation", std::to_string(failed.size()) + " check(s) failed", failed);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chemotaxis-fluid finite element solver"};
    app.require_subcommand(1);
    Options opts;
    auto* run = app.add_subcommand("run", "run a configuration and write snapshots and diagnostics");
    auto* converge = app.add_subcommand("converge", "manufactured-solution convergence study");
    app.add_subcommand("check", "invariant suite");
    add_common(run, opts);
    add_common(converge, opts);

    const std::string first = argc > 1 ? argv[1] : "";
    if (first != "run" && first != "converge" && first != "check" && first != "-h" && first != "--help") {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "run") return cmd_run(opts);
        if (command == "converge") return cmd_converge(opts);
        return cmd_check();
    } catch (const ConfigError& e) {
        fail(command, "config", e.what());
    } catch (const SingularMatrixError& e) {
        fail(command, "singular_matrix", e.what());
    } catch (const std::exception& e) {
        fail(command, "runtime", e.what());
    }
    return 1;
}

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shellscale/errors.hpp"
#include "shellscale/report.hpp"

namespace {

using namespace shellscale;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitGate = 2;

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("--out", "cannot write " + path);
    out << text;
}

std::vector<double> parse_h_list(const std::string& text) {
    std::vector<double> hs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double h = 0.0;
        try {
            h = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw ConfigError("--h", "has a malformed entry '" + item + "'");
        hs.push_back(h);
    }
    if (hs.size() < 3) throw ConfigError("--h", "needs at least three thicknesses");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(hs[i] > 0.0)) throw ConfigError("--h", "must be positive");
        if (i > 0 && !(hs[i] < hs[i - 1])) throw ConfigError("--h", "must be strictly decreasing");
    }
    return hs;
}

std::array<int, 3> parse_mesh(const std::string& text) {
    std::array<int, 3> mesh{};
    char x1 = 0, x2 = 0;
    char tail = 0;
    std::istringstream in(text);
    if (!(in >> mesh[0] >> x1 >> mesh[1] >> x2 >> mesh[2]) || x1 != 'x' || x2 != 'x' || (in >> tail))
        throw ConfigError("--mesh", "must look like 17x17x5");
    if (mesh[0] < 5 || mesh[1] < 5) throw ConfigError("--mesh", "needs at least 5 in-plane nodes per axis");
    if (mesh[2] < 2) throw ConfigError("--mesh", "needs at least 2 nodes across the thickness");
    return mesh;
}

void check_order(int order, int lo) {
    if (order < lo) throw ConfigError("--order", "must be at least " + std::to_string(lo));
}

int finish(const CommandResult& r, const std::string& out) {
    emit(dump_json(r.doc), out);
    return r.gates_ok ? kExitOk : kExitGate;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy scaling of thin prestrained films from a Riemannian metric"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.set_version_flag("--version", "shellscale 1.0.0");

    std::string config_path, out_path, displacement_path;
    int order = 1;
    int max_order = -1;
    double tol_abs = -1.0, tol_rel = -1.0;
    int n_max = 10;
    std::string h_list, mode_name, mesh_text;
    bool minimize = false;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "TOML or JSON run configuration")->required();
        sub->add_option("--out", out_path, "Output file (default stdout)");
    };

    CLI::App* classify = app.add_subcommand("classify", "Report the energy-scaling class of the metric");
    add_config(classify);
    classify->add_option("--max-order", max_order, "Highest curvature order to test");
    classify->add_option("--tol-abs", tol_abs, "Absolute zero tolerance");
    classify->add_option("--tol-rel", tol_rel, "Relative zero tolerance");

    CLI::App* curvature = app.add_subcommand("curvature", "Dump midplate curvature jets");
    add_config(curvature);
    curvature->add_option("--order", order, "Highest x3-derivative order")->required();

    CLI::App* expand = app.add_subcommand("expand", "Build the matched isometry expansion");
    add_config(expand);
    expand->add_option("--order", order, "Expansion level n")->required();

    CLI::App* coeffs = app.add_subcommand("coeffs", "Print the limit-energy coefficient table as CSV");
    coeffs->add_option("--n-max", n_max, "Largest level")->check(CLI::Range(1, 40));
    coeffs->add_option("--out", out_path, "Output file (default stdout)");

    CLI::App* limit = app.add_subcommand("limit-energy", "Evaluate or minimize the limit energy");
    add_config(limit);
    limit->add_option("--order", order, "Expansion level n")->required();
    limit->add_option("--displacement", displacement_path, "JSON displacement V");
    limit->add_flag("--minimize", minimize, "Minimize over V");

    CLI::App* sweep = app.add_subcommand("sweep", "3D energy over a list of thicknesses");
    add_config(sweep);
    sweep->add_option("--order", order, "Expansion level n")->required();
    sweep->add_option("--h", h_list, "Comma-separated decreasing thicknesses");
    sweep->add_option("--mode", mode_name, "ansatz, recovery or minimize");
    sweep->add_option("--mesh", mesh_text, "Mesh as NXxNYxNZ");
    sweep->add_option("--displacement", displacement_path, "JSON displacement V for recovery and minimize");

    CLI::App* report = app.add_subcommand("report", "Classify, expand, evaluate the limit energy and sweep");
    add_config(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (coeffs->parsed()) {
            bool agree = false;
            emit(coefficient_csv(n_max, &agree), out_path);
            return agree ? kExitOk : kExitGate;
        }

        RunConfig cfg = load_config(config_path);
        if (out_path.empty()) out_path = cfg.output.json;

        if (classify->parsed()) {
            if (max_order >= 0) cfg.classifier.max_order = max_order;
            if (tol_abs >= 0.0) cfg.classifier.tol_abs = tol_abs;
            if (tol_rel >= 0.0) cfg.classifier.tol_rel = tol_rel;
            return finish(run_classify(cfg), out_path);
        }
        if (curvature->parsed()) {
            check_order(order, 0);
            return finish(run_curvature(cfg, order), out_path);
        }
        if (expand->parsed()) {
            check_order(order, 1);
            return finish(run_expand(cfg, order), out_path);
        }
        if (limit->parsed()) {
            check_order(order, 1);
            std::optional<std::vector<Vec3>> v;
            if (!displacement_path.empty()) v = load_displacement(displacement_path, make_grid(cfg));
            return finish(run_limit_energy(cfg, order, v, minimize), out_path);
        }
        if (sweep->parsed()) {
            check_order(order, 1);
            const std::vector<double> hs = h_list.empty() ? cfg.sweep.h : parse_h_list(h_list);
            SweepMode mode = cfg.sweep.mode;
            if (!mode_name.empty()) {
                try {
                    mode = sweep_mode_from_string(mode_name);
                } catch (const std::invalid_argument&) {
                    throw ConfigError("--mode", "must be ansatz, recovery or minimize");
                }
            }
            const std::array<int, 3> mesh =
                mesh_text.empty() ? std::array<int, 3>{cfg.nx, cfg.ny, cfg.sweep.nz} : parse_mesh(mesh_text);
            std::optional<std::vector<Vec3>> v;
            if (!displacement_path.empty())
                v = load_displacement(displacement_path, MidplateGrid(cfg.domain, mesh[0], mesh[1]));
            const SweepCommandResult r = run_sweep(cfg, order, hs, mode, mesh, v);
            // The CSV goes to --out; the JSON summary goes to stdout, or to
            // stderr when the CSV itself occupies stdout.
            const std::string csv_path = out_path.empty() ? cfg.output.csv : out_path;
            emit(sweep_csv(r.sweep), csv_path);
            const std::string summary = dump_json(r.summary.doc);
            if (csv_path.empty())
                std::cerr << summary;
            else
                std::cout << summary;
            return r.summary.gates_ok ? kExitOk : kExitGate;
        }
        if (report->parsed()) return finish(run_report(cfg), out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGate;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

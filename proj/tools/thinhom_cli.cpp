// SPDX-License-Identifier: Apache-2.0
// thinhom_cli: run | sweep | cell | diag | verify

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "thinhom/thinhom.hpp"

using namespace thinhom;

namespace {

void print_rows(const ConvergenceReport& r)
{
    for (const auto& row : r.rows)
        std::printf("%-32s %-24.12g [%g, %g] %s\n", row.name.c_str(), row.value, row.lower, row.upper,
                    row.pass ? "ok" : "FAIL");
}

int finish(const ConvergenceReport& r, double seconds)
{
    print_rows(r);
    std::printf("%s: %s (%.1f s)\n", r.name.c_str(), r.passed() ? "all checks pass" : "some checks FAIL", seconds);
    return r.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Thin-layer homogenization toolkit"};
    app.require_subcommand(1);
    std::string config_path, regime_name, report_path, out_dir;
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Progress on stderr");

    auto* run = app.add_subcommand("run", "Cell problems, upscaling, macro solve, DNS sweep and diagnostics");
    run->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "Override output.directory");
    auto* sweep = app.add_subcommand("sweep", "DNS sweep over eps_list with norms and slopes");
    sweep->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    sweep->add_option("-o,--out", out_dir, "Override output.directory");
    auto* cell = app.add_subcommand("cell", "Cell problems and the effective matrix");
    cell->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    cell->add_option("--regime", regime_name, "Cell problem to solve")->check(CLI::IsMember({"i", "ii", "iii"}));
    cell->add_option("-o,--out", out_dir, "Override output.directory");
    auto* diag = app.add_subcommand("diag", "Synthetic checks of the thin-domain functionals");
    diag->add_option("config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
    diag->add_option("-o,--out", out_dir, "Override output.directory");
    auto* verify = app.add_subcommand("verify", "Recompute the verdicts of a saved report.csv");
    verify->add_option("report", report_path, "report.csv")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    try {
        if (verify->parsed()) {
            const Reevaluation r = reevaluate_report(report_path);
            std::printf("%zu rows, %zu verdict mismatches, %s\n", r.rows, r.mismatches, r.all_pass ? "all pass" : "failures present");
            return r.mismatches == 0 && r.all_pass ? 0 : 1;
        }
        ExperimentConfig c = load_config(config_path);
        if (!out_dir.empty())
            c.output.directory = out_dir;
        if (diag->parsed()) {
            std::vector<DiagRow> table;
            const ConvergenceReport r = run_sigma_suite(c, &table);
            std::filesystem::create_directories(c.output.directory);
            std::ofstream(std::filesystem::path(c.output.directory) / "diag.csv", std::ios::binary) << diag_csv(table);
            std::ofstream(std::filesystem::path(c.output.directory) / "report.csv", std::ios::binary) << report_csv(r);
            return finish(r, elapsed());
        }
        PipelineOptions opt;
        opt.verbose = verbose;
        if (sweep->parsed()) {
            opt.cells = opt.macro = false;
        } else if (cell->parsed()) {
            opt.macro = opt.dns = false;
            if (!regime_name.empty())
                opt.cell_regime = regime_name == "i" ? Regime::I : regime_name == "ii" ? Regime::II : Regime::III;
        }
        const ConvergenceReport r = run_pipeline(c, opt);
        if (r.has_effective) {
            std::printf("effective matrix (regime %s):\n", to_string(r.effective.regime).c_str());
            for (int i = 0; i < r.effective.d(); ++i) {
                for (int j = 0; j < r.effective.d(); ++j)
                    std::printf(" %14.10f", r.effective.table(i, j));
                std::printf("\n");
            }
        }
        return finish(r, elapsed());
    } catch (const StageError& e) {
        std::fprintf(stderr, "failure: stage=%s code=%s\n%s\n", e.stage().c_str(), std::string(to_string(e.code())).c_str(), e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "failure: code=%s\n%s\n", std::string(to_string(e.code())).c_str(), e.what());
        return 2;
    }
}

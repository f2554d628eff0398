// SPDX-License-Identifier: Apache-2.0
//
// salign: suppressing-alignment OFDM waveform shaping
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// salign: run experiment scenarios.
//
//   salign run <scenario.json> [--seed N] [--out DIR] [--jobs N] [--report FILE]
//   salign list-scenarios [--dir DIR]
//   salign validate <scenario.json>
//
// SALIGN_OUT_DIR and SALIGN_JOBS supply defaults for --out and --jobs;
// SALIGN_SCENARIO_DIR for list-scenarios.

#include "salign/experiments.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#ifndef SALIGN_SCENARIO_DIR
#define SALIGN_SCENARIO_DIR "scenarios"
#endif

namespace {

std::string env_or(const char* name, const std::string& fallback)
{
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

int env_jobs()
{
    const std::string v = env_or("SALIGN_JOBS", "");
    if (v.empty()) {
        return 1;
    }
    try {
        return std::max(1, std::stoi(v));
    } catch (const std::exception&) {
        std::cerr << "warning: ignoring SALIGN_JOBS='" << v << "'\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Suppressing-alignment OFDM experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SALIGN_VERSION));

    auto* run = app.add_subcommand("run", "run every experiment in a scenario file");
    std::string scenario_path;
    std::uint64_t seed = 0;
    std::string out_dir = env_or("SALIGN_OUT_DIR", "results");
    int jobs = env_jobs();
    std::string report_path;
    bool quiet = false;
    run->add_option("scenario", scenario_path, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "override the scenario's master seed");
    run->add_option("--out", out_dir, "output directory (env SALIGN_OUT_DIR)");
    run->add_option("--jobs", jobs, "worker threads (env SALIGN_JOBS)")->check(CLI::PositiveNumber);
    run->add_option("--report", report_path, "write the acceptance verdicts as JSON; exit 1 on any failure");
    run->add_flag("-q,--quiet", quiet, "no progress output");

    auto* list = app.add_subcommand("list-scenarios", "list the scenario files in a directory");
    std::string list_dir = env_or("SALIGN_SCENARIO_DIR", SALIGN_SCENARIO_DIR);
    list->add_option("--dir", list_dir, "scenario directory (env SALIGN_SCENARIO_DIR)");

    auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
    std::string validate_path;
    validate->add_option("scenario", validate_path, "scenario file (JSON)")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const salign::Scenario sc = salign::load_scenario(scenario_path);
            salign::RunOptions opts;
            if (*seed_opt) {
                opts.seed = seed;
            }
            opts.jobs = jobs;
            opts.verbose = !quiet;
            const auto tables = salign::run_scenario(sc, opts);
            salign::write_outputs(tables, out_dir);
            std::cout << "wrote " << tables.size() << " table(s) to " << out_dir << "\n";
            if (!report_path.empty()) {
                const auto results = salign::evaluate_acceptance(tables);
                const bool ok = salign::emit_report(results, std::cout);
                std::ofstream out(report_path);
                out << salign::report_json(results) << '\n';
                if (!out) {
                    std::cerr << "error: cannot write " << report_path << "\n";
                    return 2;
                }
                return ok ? 0 : 1;
            }
            return 0;
        }
        if (*list) {
            namespace fs = std::filesystem;
            if (!fs::is_directory(list_dir)) {
                std::cerr << "error: no scenario directory at " << list_dir << "\n";
                return 2;
            }
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(list_dir)) {
                if (e.path().extension() == ".json") {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                try {
                    const auto sc = salign::load_scenario(f.string());
                    std::cout << f.filename().string() << "  " << sc.name << ": " << sc.description << "\n";
                } catch (const salign::Error& e) {
                    std::cout << f.filename().string() << "  INVALID: " << e.what() << "\n";
                }
            }
            return 0;
        }
        if (*validate) {
            const auto sc = salign::load_scenario(validate_path);
            std::cout << sc.name << ": ok (" << sc.experiments.size() << " experiment(s))\n";
            for (const auto& ex : sc.experiments) {
                std::cout << "  " << ex.name << " [" << salign::to_string(ex.kind) << "] " << ex.symbols
                          << " symbols\n";
            }
            return 0;
        }
    } catch (const salign::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

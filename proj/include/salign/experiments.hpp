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

#pragma once

// Scenario-driven experiment runner. A scenario file (JSON, schema in
// scenarios/README.md) lists experiments; each produces a long-format
// ResultTable. evaluate_acceptance() turns a set of tables into per-criterion
// verdicts.

#include "salign/analysis.hpp"
#include "salign/ofdm.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace salign {

inline constexpr int kScenarioSchema = 1;

enum class ExperimentKind { psd, tradeoff, power, ccdf, ber, leakage };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

// One suppressor setting. Every experiment also carries the plain arm.
struct ArmSpec {
    double alpha = 0.25;
    double lambda = 0.0;
    int R = 0;

    std::string label() const;
};

struct Experiment {
    std::string name;
    ExperimentKind kind = ExperimentKind::psd;
    SystemConfig system;
    std::vector<ArmSpec> arms;          // psd, tradeoff, ccdf, leakage
    std::vector<double> alpha_grid;     // power
    std::vector<double> lambda_grid;    // power
    std::vector<double> snr_db;         // ber
    std::vector<double> sigma_e2;       // ber (0 = perfect CSI), leakage
    std::vector<int> mod_orders;        // ber
    int symbols = 10000;
    int symbols_per_channel = 50;       // leakage
    double ccdf_min_probability = 1e-3;
};

struct Scenario {
    std::string name;
    std::string description;
    std::uint64_t seed = 1;
    std::vector<Experiment> experiments;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);

// ---- results ------------------------------------------------------------

struct ResultRow {
    std::string experiment;
    std::string arm;
    double alpha = kNaN;
    double lambda = kNaN;
    int R = -1;
    int mod_order = -1;
    double sigma_e2 = kNaN;
    double snr_db = kNaN;
    double x = kNaN;  // bin frequency, PAPR threshold, ...
    std::string metric;
    double value = kNaN;
    double ci = kNaN;  // half-width where meaningful
};

struct ResultTable {
    std::string scenario;
    std::string experiment;
    ExperimentKind kind = ExperimentKind::psd;
    std::uint64_t seed = 0;
    std::string version;
    bool reference_setup = false;  // only these tables are graded
    std::vector<ResultRow> rows;

    void add(ResultRow row);
    void write_csv(std::ostream& os) const;
    std::string json_summary() const;  // every non-curve row
};

struct RunOptions {
    std::optional<std::uint64_t> seed;  // overrides the scenario seed
    int jobs = 1;
    bool verbose = false;
};

ResultTable run_psd_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
ResultTable run_tradeoff_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
ResultTable run_power_utilization(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
ResultTable run_papr_ccdf(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
ResultTable run_ber(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
ResultTable run_leakage_validation(const Scenario& sc, const Experiment& ex, const RunOptions& opts);

ResultTable run_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts);
std::vector<ResultTable> run_scenario(const Scenario& sc, const RunOptions& opts);

// Writes <dir>/<scenario>_<experiment>.csv and .json.
void write_outputs(const std::vector<ResultTable>& tables, const std::string& dir);

// ---- acceptance ---------------------------------------------------------

// N=64, L=16, 10-subcarrier notch, DC off, zeta=4, 17 taps, no guard bins.
// The modulation order is free; BER experiments set their own.
bool is_reference_setup(const SystemConfig& cfg);

struct CriterionResult {
    int id = 0;
    std::string title;
    bool evaluated = false;  // false when the needed tables were not run
    bool pass = false;
    std::string measured;
};

std::vector<CriterionResult> evaluate_acceptance(const std::vector<ResultTable>& tables);

// One line per criterion; returns true when every evaluated criterion passed.
bool emit_report(const std::vector<CriterionResult>& results, std::ostream& os);
std::string report_json(const std::vector<CriterionResult>& results);

}  // namespace salign

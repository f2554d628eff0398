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

#include "salign/experiments.hpp"

#include "salign/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#ifndef SALIGN_VERSION
#define SALIGN_VERSION "unknown"
#endif

namespace salign {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kTagSymbol = 0x53594d42;
constexpr int kBlock = 50;

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

std::string fmt(double v)
{
    if (std::isnan(v)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// ---- scenario parsing ---------------------------------------------------

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

void read_system(const json& j, SystemConfig& cfg, const std::string& where)
{
    if (!j.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    reject_unknown(j,
                   {"N", "L", "notch_start", "notch_width", "dc_disabled", "zeta", "mod_order", "alpha", "lambda",
                    "R", "guard_bins", "num_taps"},
                   where);
    read(j, "N", cfg.N, where);
    read(j, "L", cfg.L, where);
    read(j, "notch_start", cfg.notch_start, where);
    read(j, "notch_width", cfg.notch_width, where);
    read(j, "dc_disabled", cfg.dc_disabled, where);
    read(j, "zeta", cfg.zeta, where);
    read(j, "mod_order", cfg.mod_order, where);
    read(j, "alpha", cfg.alpha, where);
    read(j, "lambda", cfg.lambda, where);
    read(j, "R", cfg.R, where);
    read(j, "guard_bins", cfg.guard_bins, where);
    read(j, "num_taps", cfg.num_taps, where);
}

// ---- shared multi-arm engine --------------------------------------------

struct ArmStats {
    WelchAccumulator welch;
    std::vector<double> papr;
    double papr_reduction_sum = 0.0;
    double papr_reduction_sq = 0.0;
    double power_s = 0.0;
    double power_x = 0.0;
    double budget = 0.0;
    long symbols = 0;
    long fallbacks = 0;

    explicit ArmStats(WelchParams p) : welch(p) {}

    void merge(const ArmStats& o)
    {
        welch.merge(o.welch);
        papr.insert(papr.end(), o.papr.begin(), o.papr.end());
        papr_reduction_sum += o.papr_reduction_sum;
        papr_reduction_sq += o.papr_reduction_sq;
        power_s += o.power_s;
        power_x += o.power_x;
        budget += o.budget;
        symbols += o.symbols;
        fallbacks += o.fallbacks;
    }
};

struct EngineOutput {
    ArmStats plain;
    std::vector<ArmStats> arms;
};

// Every arm sees the same channel and data on symbol j. Transmit power
// follows the shared-budget policy.
EngineOutput run_arms(const SystemConfig& base, const std::vector<ArmSpec>& arms, int symbols, std::uint64_t seed,
                      int jobs, bool want_psd, bool verbose, const std::string& what)
{
    base.validate();
    const LinearMaps maps = build_maps(base);
    const CMat F_K = notch_dft(base);
    const std::vector<int> bins = notch_bins(base);
    const int n = base.frame_length();
    const std::size_t nbits = static_cast<std::size_t>(maps.active_count() * bits_per_symbol(base.mod_order));
    const WelchParams wp = default_welch(base);

    std::vector<SystemConfig> cfgs;
    std::vector<int> reservations;
    for (const ArmSpec& a : arms) {
        SystemConfig c = base;
        c.alpha = a.alpha;
        c.lambda = a.lambda;
        c.R = a.R;
        c.validate();
        cfgs.push_back(c);
        if (std::find(reservations.begin(), reservations.end(), a.R) == reservations.end()) {
            reservations.push_back(a.R);
        }
    }

    const int blocks = (symbols + kBlock - 1) / kBlock;
    struct Block {
        ArmStats plain;
        std::vector<ArmStats> arms;
    };
    std::vector<Block> parts;
    parts.reserve(static_cast<std::size_t>(blocks));
    for (int b = 0; b < blocks; ++b) {
        parts.push_back(Block{ArmStats(wp), std::vector<ArmStats>(arms.size(), ArmStats(wp))});
    }
    std::atomic<int> done{0};

    parallel_for(blocks, jobs, [&](int blk) {
        Block& part = parts[static_cast<std::size_t>(blk)];
        const int first = blk * kBlock;
        const int last = std::min(symbols, first + kBlock);
        const Eigen::Index len = static_cast<Eigen::Index>(last - first) * n;
        CVec plain_stream(want_psd ? len : 0);
        std::vector<CVec> arm_streams(arms.size(), CVec(want_psd ? len : 0));
        for (int j = first; j < last; ++j) {
            Rng rng = make_stream(seed, kTagSymbol, static_cast<std::uint64_t>(j));
            const ToeplitzChannel H = toeplitz_channel(draw_channel(base.num_taps, rng), n);
            Bits bits(nbits);
            std::uniform_int_distribution<int> coin(0, 1);
            for (auto& v : bits) {
                v = static_cast<std::uint8_t>(coin(rng));
            }
            const TimeSymbol x = ofdm_modulate(qam_modulate(bits, base.mod_order), maps);
            const double papr_plain = papr_db(x);
            const Eigen::Index off = static_cast<Eigen::Index>(j - first) * n;
            if (want_psd) {
                plain_stream.segment(off, n) = x.samples;
            }
            part.plain.papr.push_back(papr_plain);
            part.plain.power_x += x.samples.squaredNorm();
            ++part.plain.symbols;

            std::map<int, std::pair<AlignmentBasis, SpectralOperators>> cache;
            for (int R : reservations) {
                AlignmentBasis P = R == 0 ? null_basis(maps.B, H)
                                          : null_basis_partial(maps.B, H, sync_selector(base.N, base.L, R));
                SpectralOperators ops = spectral_operators(F_K, bins, P, x);
                cache.emplace(R, std::make_pair(std::move(P), std::move(ops)));
            }
            for (std::size_t a = 0; a < arms.size(); ++a) {
                const auto& [P, ops] = cache.at(arms[a].R);
                bool fell_back = false;
                const SuppressorSolution sol = design_suppressor(cfgs[a], ops, x, P, &fell_back);
                const TimeSymbol t = assemble_transmit(x, sol.c, PowerPolicy::shared_budget, arms[a].alpha);
                ArmStats& st = part.arms[a];
                if (want_psd) {
                    arm_streams[a].segment(off, n) = t.samples;
                }
                const double p = papr_db(t);
                st.papr.push_back(p);
                st.papr_reduction_sum += papr_plain - p;
                st.papr_reduction_sq += (papr_plain - p) * (papr_plain - p);
                st.power_s += sol.power_used;
                st.power_x += x.samples.squaredNorm();
                st.budget += power_budget(arms[a].alpha, x);
                st.fallbacks += fell_back ? 1 : 0;
                ++st.symbols;
            }
        }
        if (want_psd) {
            part.plain.welch.add(plain_stream);
            for (std::size_t a = 0; a < arms.size(); ++a) {
                part.arms[a].welch.add(arm_streams[a]);
            }
        }
        const int d = ++done;
        if (verbose && (d % 20 == 0 || d == blocks)) {
            std::cerr << "  " << what << ": " << std::min(symbols, d * kBlock) << "/" << symbols << " symbols\r"
                      << (d == blocks ? "\n" : "") << std::flush;
        }
    });

    EngineOutput out{ArmStats(wp), std::vector<ArmStats>(arms.size(), ArmStats(wp))};
    for (const Block& b : parts) {
        out.plain.merge(b.plain);
        for (std::size_t a = 0; a < arms.size(); ++a) {
            out.arms[a].merge(b.arms[a]);
        }
    }
    return out;
}

ResultRow arm_row(const std::string& experiment, const ArmSpec& a, const SystemConfig& cfg)
{
    ResultRow r;
    r.experiment = experiment;
    r.arm = a.label();
    r.alpha = a.alpha;
    r.lambda = a.lambda;
    r.R = a.R;
    r.mod_order = cfg.mod_order;
    return r;
}

ResultRow plain_row(const std::string& experiment, const SystemConfig& cfg)
{
    ResultRow r;
    r.experiment = experiment;
    r.arm = "plain";
    r.mod_order = cfg.mod_order;
    return r;
}

ResultTable new_table(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable t;
    t.scenario = sc.name;
    t.experiment = ex.name;
    t.kind = ex.kind;
    t.seed = opts.seed.value_or(sc.seed);
    t.version = SALIGN_VERSION;
    t.reference_setup = is_reference_setup(ex.system);
    return t;
}

void add_psd_rows(ResultTable& table, const Experiment& ex, const EngineOutput& out)
{
    const PsdEstimate plain = out.plain.welch.estimate();
    const std::vector<int> bins = notch_bins(ex.system);
    auto curve = [&](ResultRow base, const PsdEstimate& psd) {
        const RVec abs_db = psd.absolute_db();
        for (Eigen::Index k = 0; k < abs_db.size(); ++k) {
            ResultRow r = base;
            r.metric = "psd_db";
            r.x = psd.freqs(k);
            r.value = abs_db(k) - plain.peak_db;
            table.add(r);
        }
    };
    ResultRow pr = plain_row(ex.name, ex.system);
    curve(pr, plain);
    pr.metric = "notch_level_db";
    pr.value = band_level_db(plain, plain, bins);
    table.add(pr);
    for (std::size_t a = 0; a < ex.arms.size(); ++a) {
        const PsdEstimate psd = out.arms[a].welch.estimate();
        ResultRow r = arm_row(ex.name, ex.arms[a], ex.system);
        curve(r, psd);
        r.metric = "notch_level_db";
        r.value = band_level_db(psd, plain, bins);
        table.add(r);
        r.metric = "oob_reduction_db";
        r.value = oob_reduction(psd, plain, bins);
        table.add(r);
    }
}

void add_summary_rows(ResultTable& table, const Experiment& ex, const EngineOutput& out)
{
    for (std::size_t a = 0; a < ex.arms.size(); ++a) {
        const ArmStats& st = out.arms[a];
        const double nsym = static_cast<double>(st.symbols);
        ResultRow r = arm_row(ex.name, ex.arms[a], ex.system);
        const double mean = st.papr_reduction_sum / nsym;
        const double var = std::max(0.0, st.papr_reduction_sq / nsym - mean * mean);
        r.metric = "mean_papr_reduction_db";
        r.value = mean;
        r.ci = 1.96 * std::sqrt(var / nsym);
        table.add(r);
        r.ci = kNaN;
        r.metric = "power_fraction";
        r.value = st.power_s / st.power_x;
        table.add(r);
        r.metric = "budget_use";
        r.value = st.budget > 0.0 ? st.power_s / st.budget : 0.0;
        table.add(r);
        r.metric = "solver_fallbacks";
        r.value = static_cast<double>(st.fallbacks);
        table.add(r);
    }
}

}  // namespace

// ---- naming -------------------------------------------------------------

std::string to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::psd: return "psd";
    case ExperimentKind::tradeoff: return "tradeoff";
    case ExperimentKind::power: return "power";
    case ExperimentKind::ccdf: return "ccdf";
    case ExperimentKind::ber: return "ber";
    case ExperimentKind::leakage: return "leakage";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s)
{
    for (auto k : {ExperimentKind::psd, ExperimentKind::tradeoff, ExperimentKind::power, ExperimentKind::ccdf,
                   ExperimentKind::ber, ExperimentKind::leakage}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("unknown experiment kind '" + s + "'");
}

std::string ArmSpec::label() const
{
    std::string s = "sa_a" + fmt(alpha) + "_l" + fmt(lambda);
    if (R > 0) {
        s += "_R" + std::to_string(R);
    }
    return s;
}

// ---- scenarios ----------------------------------------------------------

void Scenario::validate() const
{
    if (name.empty()) {
        throw ConfigError("scenario: name is required");
    }
    if (experiments.empty()) {
        throw ConfigError("scenario: no experiments");
    }
    std::set<std::string> names;
    for (const Experiment& ex : experiments) {
        const std::string where = "experiment '" + ex.name + "'";
        if (ex.name.empty() || !names.insert(ex.name).second) {
            throw ConfigError("experiment names must be non-empty and unique");
        }
        try {
            ex.system.validate();
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (ex.symbols < 1) {
            throw ConfigError(where + ": symbols must be positive");
        }
        for (const ArmSpec& a : ex.arms) {
            SystemConfig c = ex.system;
            c.alpha = a.alpha;
            c.lambda = a.lambda;
            c.R = a.R;
            try {
                c.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(where + ", arm " + a.label() + ": " + e.what());
            }
        }
        auto need = [&](bool ok, const std::string& what) {
            if (!ok) {
                throw ConfigError(where + ": " + what);
            }
        };
        switch (ex.kind) {
        case ExperimentKind::psd:
        case ExperimentKind::tradeoff:
            need(!ex.arms.empty(), "arms must be non-empty");
            need(static_cast<long>(ex.symbols) * ex.system.frame_length() >= 2L * ex.system.zeta * ex.system.N,
                 "too few symbols for two Welch segments");
            break;
        case ExperimentKind::ccdf:
            need(!ex.arms.empty(), "arms must be non-empty");
            need(ex.ccdf_min_probability > 0.0 && ex.ccdf_min_probability < 1.0,
                 "ccdf_min_probability must lie in (0, 1)");
            need(static_cast<double>(ex.symbols) >= 10.0 / ex.ccdf_min_probability,
                 "symbols must be at least 10 / ccdf_min_probability for the CCDF tail");
            break;
        case ExperimentKind::power:
            need(!ex.alpha_grid.empty() && !ex.lambda_grid.empty(), "alpha_grid and lambda_grid must be non-empty");
            for (double a : ex.alpha_grid) {
                need(a >= 0.0, "alpha_grid entries must be non-negative");
            }
            for (double l : ex.lambda_grid) {
                need(l >= 0.0 && l <= 1.0, "lambda_grid entries must lie in [0, 1]");
            }
            break;
        case ExperimentKind::ber:
            need(!ex.snr_db.empty() && !ex.sigma_e2.empty() && !ex.mod_orders.empty(),
                 "snr_db, sigma_e2 and mod_orders must be non-empty");
            for (int m : ex.mod_orders) {
                need(m == 4 || m == 16 || m == 64, "mod_orders entries must be 4, 16 or 64");
            }
            for (double s : ex.sigma_e2) {
                need(s >= 0.0, "sigma_e2 entries must be non-negative");
            }
            break;
        case ExperimentKind::leakage:
            need(!ex.arms.empty() && !ex.sigma_e2.empty(), "arms and sigma_e2 must be non-empty");
            need(ex.symbols_per_channel >= 1, "symbols_per_channel must be positive");
            for (double s : ex.sigma_e2) {
                need(s >= 0.0, "sigma_e2 entries must be non-negative");
            }
            break;
        }
    }
}

Scenario parse_scenario(const std::string& json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("scenario: top level must be an object");
    }
    reject_unknown(root, {"schema", "name", "description", "seed", "system", "experiments"}, "scenario");
    int schema = 0;
    read(root, "schema", schema, "scenario");
    if (schema != kScenarioSchema) {
        throw ConfigError("scenario: schema must be " + std::to_string(kScenarioSchema));
    }
    Scenario sc;
    read(root, "name", sc.name, "scenario");
    read(root, "description", sc.description, "scenario");
    read(root, "seed", sc.seed, "scenario");
    SystemConfig defaults;
    if (root.contains("system")) {
        read_system(root.at("system"), defaults, "scenario.system");
    }
    if (!root.contains("experiments") || !root.at("experiments").is_array()) {
        throw ConfigError("scenario: 'experiments' must be an array");
    }
    for (const json& je : root.at("experiments")) {
        Experiment ex;
        std::string where = "experiment";
        if (!je.is_object()) {
            throw ConfigError("experiment entries must be objects");
        }
        read(je, "name", ex.name, where);
        where = "experiment '" + ex.name + "'";
        reject_unknown(je,
                       {"name", "kind", "system", "arms", "alpha_grid", "lambda_grid", "snr_db", "sigma_e2",
                        "mod_orders", "symbols", "symbols_per_channel", "ccdf_min_probability"},
                       where);
        std::string kind;
        read(je, "kind", kind, where);
        ex.kind = experiment_kind_from_string(kind);
        ex.system = defaults;
        if (je.contains("system")) {
            read_system(je.at("system"), ex.system, where + ".system");
        }
        if (je.contains("arms")) {
            for (const json& ja : je.at("arms")) {
                if (!ja.is_object()) {
                    throw ConfigError(where + ".arms: entries must be objects");
                }
                reject_unknown(ja, {"alpha", "lambda", "R"}, where + ".arms");
                ArmSpec a;
                a.alpha = ex.system.alpha;
                a.lambda = ex.system.lambda;
                a.R = ex.system.R;
                read(ja, "alpha", a.alpha, where + ".arms");
                read(ja, "lambda", a.lambda, where + ".arms");
                read(ja, "R", a.R, where + ".arms");
                ex.arms.push_back(a);
            }
        }
        read(je, "alpha_grid", ex.alpha_grid, where);
        read(je, "lambda_grid", ex.lambda_grid, where);
        read(je, "snr_db", ex.snr_db, where);
        read(je, "sigma_e2", ex.sigma_e2, where);
        read(je, "mod_orders", ex.mod_orders, where);
        read(je, "symbols", ex.symbols, where);
        read(je, "symbols_per_channel", ex.symbols_per_channel, where);
        read(je, "ccdf_min_probability", ex.ccdf_min_probability, where);
        sc.experiments.push_back(std::move(ex));
    }
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

// ---- result tables ------------------------------------------------------

void ResultTable::add(ResultRow row) { rows.push_back(std::move(row)); }

void ResultTable::write_csv(std::ostream& os) const
{
    os << "scenario,experiment,kind,arm,alpha,lambda,R,mod_order,sigma_e2,snr_db,x,metric,value,ci,seed,version\n";
    for (const ResultRow& r : rows) {
        os << scenario << ',' << r.experiment << ',' << to_string(kind) << ',' << r.arm << ',' << fmt(r.alpha)
           << ',' << fmt(r.lambda) << ',' << (r.R >= 0 ? std::to_string(r.R) : "") << ','
           << (r.mod_order > 0 ? std::to_string(r.mod_order) : "") << ',' << fmt(r.sigma_e2) << ','
           << fmt(r.snr_db) << ',' << fmt(r.x) << ',' << r.metric << ',' << fmt(r.value) << ',' << fmt(r.ci)
           << ',' << seed << ',' << version << '\n';
    }
}

std::string ResultTable::json_summary() const
{
    json j;
    j["scenario"] = scenario;
    j["experiment"] = experiment;
    j["kind"] = to_string(kind);
    j["seed"] = seed;
    j["version"] = version;
    json rows_j = json::array();
    for (const ResultRow& r : rows) {
        if (r.metric == "psd_db" || r.metric == "ccdf") {
            continue;
        }
        json o;
        o["arm"] = r.arm;
        auto put = [&](const char* key, double v) {
            if (!std::isnan(v)) {
                o[key] = v;
            }
        };
        put("alpha", r.alpha);
        put("lambda", r.lambda);
        if (r.R >= 0) {
            o["R"] = r.R;
        }
        if (r.mod_order > 0) {
            o["mod_order"] = r.mod_order;
        }
        put("sigma_e2", r.sigma_e2);
        put("snr_db", r.snr_db);
        put("x", r.x);
        o["metric"] = r.metric;
        put("value", r.value);
        put("ci", r.ci);
        rows_j.push_back(o);
    }
    j["rows"] = rows_j;
    return j.dump(2);
}

// ---- experiments --------------------------------------------------------

ResultTable run_psd_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    const EngineOutput out =
        run_arms(ex.system, ex.arms, ex.symbols, table.seed, opts.jobs, true, opts.verbose, ex.name);
    add_psd_rows(table, ex, out);
    add_summary_rows(table, ex, out);
    return table;
}

ResultTable run_tradeoff_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    const EngineOutput out =
        run_arms(ex.system, ex.arms, ex.symbols, table.seed, opts.jobs, true, opts.verbose, ex.name);
    const PsdEstimate plain = out.plain.welch.estimate();
    const std::vector<int> bins = notch_bins(ex.system);
    for (std::size_t a = 0; a < ex.arms.size(); ++a) {
        ResultRow r = arm_row(ex.name, ex.arms[a], ex.system);
        r.metric = "oob_reduction_db";
        r.value = oob_reduction(out.arms[a].welch.estimate(), plain, bins);
        table.add(r);
    }
    add_summary_rows(table, ex, out);
    return table;
}

ResultTable run_power_utilization(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    std::vector<ArmSpec> arms;
    for (double l : ex.lambda_grid) {
        for (double a : ex.alpha_grid) {
            arms.push_back(ArmSpec{a, l, ex.system.R});
        }
    }
    const EngineOutput out = run_arms(ex.system, arms, ex.symbols, table.seed, opts.jobs, false, opts.verbose, ex.name);
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const ArmStats& st = out.arms[a];
        ResultRow r = arm_row(ex.name, arms[a], ex.system);
        r.metric = "power_fraction";
        r.value = st.power_s / st.power_x;
        table.add(r);
        r.metric = "budget_use";
        r.value = st.budget > 0.0 ? st.power_s / st.budget : 0.0;
        table.add(r);
        r.metric = "solver_fallbacks";
        r.value = static_cast<double>(st.fallbacks);
        table.add(r);
    }
    return table;
}

ResultTable run_papr_ccdf(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    const EngineOutput out =
        run_arms(ex.system, ex.arms, ex.symbols, table.seed, opts.jobs, true, opts.verbose, ex.name);
    const double p = ex.ccdf_min_probability;
    auto curve_rows = [&](ResultRow base, const std::vector<double>& samples) {
        const CcdfCurve c = ccdf(samples, p);
        for (Eigen::Index g = 0; g < c.prob.size(); ++g) {
            ResultRow r = base;
            r.metric = "ccdf";
            r.x = c.thresholds_db(g);
            r.value = c.prob(g);
            table.add(r);
        }
        ResultRow r = base;
        r.metric = "papr_at_min_probability_db";
        r.x = p;
        r.value = ccdf_level(c, p);
        table.add(r);
        return r.value;
    };
    const double plain_level = curve_rows(plain_row(ex.name, ex.system), out.plain.papr);
    for (std::size_t a = 0; a < ex.arms.size(); ++a) {
        ResultRow base = arm_row(ex.name, ex.arms[a], ex.system);
        const double level = curve_rows(base, out.arms[a].papr);
        base.metric = "papr_reduction_at_min_probability_db";
        base.x = p;
        base.value = plain_level - level;
        table.add(base);
    }
    add_psd_rows(table, ex, out);
    add_summary_rows(table, ex, out);
    return table;
}

ResultTable run_ber(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    for (int order : ex.mod_orders) {
        for (double s2 : ex.sigma_e2) {
            SystemConfig cfg = ex.system;
            cfg.mod_order = order;
            if (opts.verbose) {
                std::cerr << "  " << ex.name << ": " << order << "QAM, sigma_e2 = " << s2 << "\n";
            }
            const BerCounts counts = ber_curve(cfg, ex.snr_db, s2, BerRun{ex.symbols, table.seed}, opts.jobs);
            for (int a = 0; a < kBerArms; ++a) {
                const auto arm = static_cast<BerArm>(a);
                for (std::size_t q = 0; q < ex.snr_db.size(); ++q) {
                    ResultRow r;
                    r.experiment = ex.name;
                    r.arm = to_string(arm);
                    r.alpha = cfg.alpha;
                    r.lambda = cfg.lambda;
                    r.R = cfg.R;
                    r.mod_order = order;
                    r.sigma_e2 = s2;
                    r.snr_db = ex.snr_db[q];
                    r.metric = "ber";
                    r.value = counts.ber(arm, q);
                    r.ci = binomial_halfwidth(counts.errors[static_cast<std::size_t>(a)][q], counts.bits[q], 1.96);
                    table.add(r);
                    r.metric = "bit_errors";
                    r.value = static_cast<double>(counts.errors[static_cast<std::size_t>(a)][q]);
                    r.ci = kNaN;
                    table.add(r);
                    if (a == 0) {
                        r.arm = "all";
                        r.metric = "bits";
                        r.value = static_cast<double>(counts.bits[q]);
                        table.add(r);
                    }
                }
            }
            ResultRow r;
            r.experiment = ex.name;
            r.arm = "suppressed";
            r.alpha = cfg.alpha;
            r.lambda = cfg.lambda;
            r.R = cfg.R;
            r.mod_order = order;
            r.sigma_e2 = s2;
            r.metric = "solver_fallbacks";
            r.value = static_cast<double>(counts.solver_fallbacks);
            table.add(r);
        }
    }
    return table;
}

ResultTable run_leakage_validation(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    ResultTable table = new_table(sc, ex, opts);
    for (const ArmSpec& a : ex.arms) {
        SystemConfig cfg = ex.system;
        cfg.alpha = a.alpha;
        cfg.lambda = a.lambda;
        cfg.R = a.R;
        const DesignMode mode = a.lambda == 0.0 ? DesignMode::lsqi : DesignMode::joint;
        if (opts.verbose) {
            std::cerr << "  " << ex.name << ": " << a.label() << "\n";
        }
        const auto reports = leakage_study(cfg, ex.sigma_e2, LeakageRun{ex.symbols, ex.symbols_per_channel, table.seed},
                                           mode, opts.jobs);
        for (const LeakageReport& rep : reports) {
            ResultRow r = arm_row(ex.name, a, cfg);
            r.sigma_e2 = rep.sigma_e2;
            r.metric = "xi_monte_carlo";
            r.value = rep.xi_monte_carlo;
            table.add(r);
            r.metric = "mse_minus_xi_db";
            r.value = rep.sigma_e2 > 0.0 ? db10(rep.sigma_e2) - db10(rep.xi_monte_carlo) : kNaN;
            table.add(r);
            if (mode == DesignMode::lsqi) {
                r.metric = "xi_closed_form";
                r.value = rep.xi_closed_form;
                table.add(r);
                r.metric = "closed_form_minus_mc_db";
                r.value = rep.xi_monte_carlo > 0.0 ? db10(rep.xi_closed_form) - db10(rep.xi_monte_carlo) : kNaN;
                table.add(r);
                r.metric = "xi_closed_form_per_symbol";
                r.value = rep.xi_closed_form_per_symbol;
                table.add(r);
                r.metric = "xi_closed_form_scenario_median";
                r.value = rep.xi_closed_form_scenario_median;
                table.add(r);
                r.metric = "median_multiplier";
                r.value = rep.median_multiplier;
                table.add(r);
            }
        }
    }
    return table;
}

ResultTable run_experiment(const Scenario& sc, const Experiment& ex, const RunOptions& opts)
{
    switch (ex.kind) {
    case ExperimentKind::psd: return run_psd_experiment(sc, ex, opts);
    case ExperimentKind::tradeoff: return run_tradeoff_experiment(sc, ex, opts);
    case ExperimentKind::power: return run_power_utilization(sc, ex, opts);
    case ExperimentKind::ccdf: return run_papr_ccdf(sc, ex, opts);
    case ExperimentKind::ber: return run_ber(sc, ex, opts);
    case ExperimentKind::leakage: return run_leakage_validation(sc, ex, opts);
    }
    throw ConfigError("unknown experiment kind");
}

std::vector<ResultTable> run_scenario(const Scenario& sc, const RunOptions& opts)
{
    sc.validate();
    std::vector<ResultTable> out;
    for (const Experiment& ex : sc.experiments) {
        if (opts.verbose) {
            std::cerr << "[" << sc.name << "] " << ex.name << " (" << to_string(ex.kind) << ")\n";
        }
        out.push_back(run_experiment(sc, ex, opts));
    }
    return out;
}

void write_outputs(const std::vector<ResultTable>& tables, const std::string& dir)
{
    std::filesystem::create_directories(dir);
    for (const ResultTable& t : tables) {
        const std::string stem = (std::filesystem::path(dir) / (t.scenario + "_" + t.experiment)).string();
        std::ofstream csv(stem + ".csv");
        t.write_csv(csv);
        std::ofstream js(stem + ".json");
        js << t.json_summary() << '\n';
        if (!csv || !js) {
            throw Error("failed to write results under '" + dir + "'");
        }
    }
}

// ---- acceptance ---------------------------------------------------------

namespace {

using RowPred = std::function<bool(const ResultRow&)>;

struct Lookup {
    const std::vector<ResultTable>& tables;

    std::vector<const ResultRow*> rows(ExperimentKind kind, const RowPred& pred) const
    {
        std::vector<const ResultRow*> out;
        for (const ResultTable& t : tables) {
            if (t.kind != kind || !t.reference_setup) {
                continue;
            }
            for (const ResultRow& r : t.rows) {
                if (pred(r)) {
                    out.push_back(&r);
                }
            }
        }
        return out;
    }

    std::optional<double> value(ExperimentKind kind, const RowPred& pred) const
    {
        auto rs = rows(kind, pred);
        if (rs.empty()) {
            return std::nullopt;
        }
        return rs.front()->value;
    }
};

RowPred arm_metric(double alpha, double lambda, int R, const std::string& metric)
{
    return [=](const ResultRow& r) {
        return r.metric == metric && r.arm != "plain" && same(r.alpha, alpha) && same(r.lambda, lambda) && r.R == R;
    };
}

RowPred plain_metric(const std::string& metric)
{
    return [=](const ResultRow& r) { return r.metric == metric && r.arm == "plain"; };
}

std::string num(double v, int prec = 2)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

constexpr double kMinErrors = 20.0;

// log10 of a BER curve at `snr`, linear in dB between grid points. Both
// bracketing points need `min_errors` counts.
std::optional<double> log_ber_at(const std::vector<double>& snr, const std::vector<double>& ber,
                                 const std::vector<double>& errors, double at, double min_errors)
{
    for (std::size_t q = 1; q < snr.size(); ++q) {
        if (at >= snr[q - 1] && at <= snr[q]) {
            if (errors[q - 1] < min_errors || errors[q] < min_errors) {
                return std::nullopt;
            }
            const double w = (at - snr[q - 1]) / (snr[q] - snr[q - 1]);
            return (1.0 - w) * std::log10(ber[q - 1]) + w * std::log10(ber[q]);
        }
    }
    return std::nullopt;
}

// Horizontal offset (dB) of `test` to the right of `ref`: weighted least
// squares in log10 BER over a 0.005 dB grid on [-5, 5]. Weights are the
// error counts. Returns the offset and the number of points used.
std::optional<std::pair<double, int>> pooled_shift(const std::vector<double>& snr, const std::vector<double>& ref,
                                                   const std::vector<double>& ref_errors,
                                                   const std::vector<double>& test,
                                                   const std::vector<double>& test_errors, double min_errors)
{
    std::optional<std::pair<double, int>> best;
    double best_cost = kInf;
    for (int k = -1000; k <= 1000; ++k) {
        const double delta = 0.005 * k;
        double cost = 0.0;
        double weight = 0.0;
        int used = 0;
        for (std::size_t q = 0; q < snr.size(); ++q) {
            if (test_errors[q] < min_errors) {
                continue;
            }
            const auto r = log_ber_at(snr, ref, ref_errors, snr[q] - delta, min_errors);
            if (!r) {
                continue;
            }
            const double d = std::log10(test[q]) - *r;
            cost += test_errors[q] * d * d;
            weight += test_errors[q];
            ++used;
        }
        if (used >= 3 && cost / weight < best_cost) {
            best_cost = cost / weight;
            best = std::make_pair(delta, used);
        }
    }
    return best;
}

}  // namespace

bool is_reference_setup(const SystemConfig& cfg)
{
    return cfg.N == 64 && cfg.L == 16 && cfg.notch_width == 10 && cfg.dc_disabled && cfg.zeta == 4 &&
           cfg.num_taps == 17 && cfg.guard_bins == 0;
}

std::vector<CriterionResult> evaluate_acceptance(const std::vector<ResultTable>& tables)
{
    const Lookup look{tables};
    std::vector<CriterionResult> out;
    auto add = [&](int id, std::string title) -> CriterionResult& {
        out.push_back(CriterionResult{id, std::move(title), false, false, "not run"});
        return out.back();
    };

    // 1. OOB reduction, lambda = 0.
    {
        CriterionResult& c = add(1, "OOB reduction at lambda=0: 18 dB (alpha=0.1), 22 dB (alpha=0.25), +/-3 dB");
        const auto a = look.value(ExperimentKind::psd, arm_metric(0.1, 0.0, 0, "oob_reduction_db"));
        const auto b = look.value(ExperimentKind::psd, arm_metric(0.25, 0.0, 0, "oob_reduction_db"));
        if (a && b) {
            c.evaluated = true;
            c.pass = std::abs(*a - 18.0) <= 3.0 && std::abs(*b - 22.0) <= 3.0;
            c.measured = "alpha=0.1: " + num(*a) + " dB, alpha=0.25: " + num(*b) + " dB";
        }
    }
    // 2. Partial CP.
    {
        CriterionResult& c = add(2, "Partial CP R=4, lambda=0: 7 dB reduction +/-2 dB");
        const auto rs = look.rows(ExperimentKind::psd, [](const ResultRow& r) {
            return r.metric == "oob_reduction_db" && r.R == 4 && same(r.lambda, 0.0);
        });
        if (!rs.empty()) {
            c.evaluated = true;
            c.pass = std::abs(rs.front()->value - 7.0) <= 2.0;
            c.measured = "alpha=" + num(rs.front()->alpha) + ": " + num(rs.front()->value) + " dB";
        }
    }
    // 3. Trade-off endpoints.
    {
        CriterionResult& c = add(3, "Trade-off at alpha=0.25: lambda=0 22+/-3 dB OOB, PAPR gain <= 0; "
                                    "lambda=1 mean PAPR reduction > 3 dB, OOB reduction <= 0");
        const auto oob0 = look.value(ExperimentKind::tradeoff, arm_metric(0.25, 0.0, 0, "oob_reduction_db"));
        const auto papr0 = look.value(ExperimentKind::tradeoff, arm_metric(0.25, 0.0, 0, "mean_papr_reduction_db"));
        const auto oob1 = look.value(ExperimentKind::tradeoff, arm_metric(0.25, 1.0, 0, "oob_reduction_db"));
        const auto papr1 = look.value(ExperimentKind::tradeoff, arm_metric(0.25, 1.0, 0, "mean_papr_reduction_db"));
        if (oob0 && papr0 && oob1 && papr1) {
            c.evaluated = true;
            c.pass = std::abs(*oob0 - 22.0) <= 3.0 && *papr0 <= 0.0 && *papr1 > 3.0 && *oob1 <= 0.0;
            c.measured = "lambda=0: OOB " + num(*oob0) + " dB, PAPR " + num(*papr0) + " dB; lambda=1: OOB " +
                         num(*oob1) + " dB, PAPR " + num(*papr1) + " dB";
        }
    }
    // 4 and 5. CCDF levels.
    {
        CriterionResult& c4 = add(4, "CCDF at 1e-3, alpha=0.25: plain 10.5, lambda=1 7, lambda=0.5 9 dB, +/-0.7 dB");
        const std::string m = "papr_at_min_probability_db";
        const auto plain = look.value(ExperimentKind::ccdf, plain_metric(m));
        const auto l1 = look.value(ExperimentKind::ccdf, arm_metric(0.25, 1.0, 0, m));
        const auto l05 = look.value(ExperimentKind::ccdf, arm_metric(0.25, 0.5, 0, m));
        if (plain && l1 && l05) {
            c4.evaluated = true;
            c4.pass = std::abs(*plain - 10.5) <= 0.7 && std::abs(*l1 - 7.0) <= 0.7 && std::abs(*l05 - 9.0) <= 0.7;
            c4.measured = "plain " + num(*plain) + " dB, lambda=1 " + num(*l1) + " dB, lambda=0.5 " + num(*l05) + " dB";
        }
        CriterionResult& c5 = add(5, "CCDF reduction at 1e-3, lambda=0.5: alpha=1 4 dB, alpha=0.25 1.5 dB, +/-0.7 dB");
        const auto a1 = look.value(ExperimentKind::ccdf, arm_metric(1.0, 0.5, 0, m));
        if (plain && a1 && l05) {
            const double r1 = *plain - *a1;
            const double r025 = *plain - *l05;
            c5.evaluated = true;
            c5.pass = std::abs(r1 - 4.0) <= 0.7 && std::abs(r025 - 1.5) <= 0.7;
            c5.measured = "alpha=1: " + num(r1) + " dB, alpha=0.25: " + num(r025) + " dB";
        }
    }
    // 6. Spectrum at lambda = 0.5.
    {
        CriterionResult& c = add(6, "Spectrum at lambda=0.5, alpha=0.25: OOB improvement 21 dB +/-3 dB");
        auto v = look.value(ExperimentKind::ccdf, arm_metric(0.25, 0.5, 0, "oob_reduction_db"));
        if (!v) {
            v = look.value(ExperimentKind::psd, arm_metric(0.25, 0.5, 0, "oob_reduction_db"));
        }
        if (v) {
            c.evaluated = true;
            c.pass = std::abs(*v - 21.0) <= 3.0;
            c.measured = num(*v) + " dB";
        }
    }
    // 7. Power utilization.
    {
        CriterionResult& c = add(7, "Power use: lambda=0 slope 1+/-0.02 through origin; lambda=1 saturates (<5%)");
        auto curve = [&](double lambda) {
            std::vector<std::pair<double, double>> pts;
            for (const ResultRow* r : look.rows(ExperimentKind::power, [&](const ResultRow& r) {
                     return r.metric == "power_fraction" && same(r.lambda, lambda);
                 })) {
                pts.emplace_back(r->alpha, r->value);
            }
            std::sort(pts.begin(), pts.end());
            return pts;
        };
        const auto c0 = curve(0.0);
        const auto c1 = curve(1.0);
        if (c0.size() >= 2 && c1.size() >= 2) {
            double sxy = 0.0;
            double sxx = 0.0;
            for (auto [a, y] : c0) {
                sxy += a * y;
                sxx += a * a;
            }
            const double slope = sxy / sxx;
            const auto& last = c1.back();
            const auto& prev = c1[c1.size() - 2];
            const double rise = (last.second - prev.second) / (last.first - prev.first);
            c.evaluated = true;
            c.pass = std::abs(slope - 1.0) <= 0.02 && rise < 0.05;
            c.measured = "lambda=0 slope " + num(slope, 4) + "; lambda=1 last increment " + num(100.0 * rise, 2) +
                         "% of the budget increment";
        }
    }
    // 8. Closed form vs Monte Carlo.
    {
        CriterionResult& c = add(8, "Leaked power closed form vs Monte Carlo (lambda=0) within 0.5 dB");
        const auto rs = look.rows(ExperimentKind::leakage,
                                  [](const ResultRow& r) { return r.metric == "closed_form_minus_mc_db"; });
        if (!rs.empty()) {
            c.evaluated = true;
            c.pass = true;
            double worst = 0.0;
            std::set<double> grid;
            for (const ResultRow* r : rs) {
                worst = std::max(worst, std::abs(r->value));
                c.pass = c.pass && std::abs(r->value) <= 0.5;
                grid.insert(r->sigma_e2);
            }
            for (double s : {1e-3, 1e-2, 1e-1}) {
                c.pass = c.pass && std::any_of(grid.begin(), grid.end(), [&](double g) { return same(g, s); });
            }
            c.measured = "worst |closed form - MC| = " + num(worst, 3) + " dB over " + std::to_string(rs.size()) +
                         " points";
        }
    }
    // 9. Joint-mode leakage margin.
    {
        CriterionResult& c = add(9, "Joint leakage (alpha=0.25, lambda=0.5) at least 8 dB below the channel MSE");
        const auto rs = look.rows(ExperimentKind::leakage, [](const ResultRow& r) {
            return r.metric == "mse_minus_xi_db" && same(r.alpha, 0.25) && same(r.lambda, 0.5) && r.R == 0;
        });
        if (!rs.empty()) {
            c.evaluated = true;
            c.pass = true;
            double worst = kInf;
            for (const ResultRow* r : rs) {
                worst = std::min(worst, r->value);
                c.pass = c.pass && r->value >= 8.0;
            }
            c.measured = "smallest margin " + num(worst) + " dB over " + std::to_string(rs.size()) + " MSE points";
        }
    }
    // 10. BER.
    {
        CriterionResult& c = add(10, "BER: perfect CSI shift <= 1.1 dB, no floor to 1e-4 (16/64QAM); "
                                     "imperfect CSI SA matches plain within binomial confidence");
        struct Curve {
            std::vector<double> snr;
            std::map<std::string, std::vector<double>> ber;
            std::map<std::string, std::vector<double>> errors;
            std::vector<double> bits;
        };
        std::map<std::pair<int, double>, Curve> curves;
        for (const ResultRow* r : look.rows(ExperimentKind::ber, [](const ResultRow&) { return true; })) {
            Curve& cv = curves[{r->mod_order, r->sigma_e2}];
            if (r->metric == "ber") {
                cv.ber[r->arm].push_back(r->value);
                if (r->arm == "plain") {
                    cv.snr.push_back(r->snr_db);
                }
            } else if (r->metric == "bit_errors") {
                cv.errors[r->arm].push_back(r->value);
            } else if (r->metric == "bits") {
                cv.bits.push_back(r->value);
            }
        }
        bool have16 = false;
        bool have64 = false;
        bool have_imperfect = false;
        bool pass = true;
        std::string measured;
        constexpr double kZ = 3.0;  // two-sided ~99.7% for the imperfect-CSI comparison
        for (auto& [key, cv] : curves) {
            const auto [order, s2] = key;
            const auto& sa = cv.ber["suppressed"];
            const auto& pl = cv.ber["plain"];
            if (s2 == 0.0) {
                have16 = have16 || order == 16;
                have64 = have64 || order == 64;
                const auto& se = cv.errors["suppressed"];
                const auto& pe = cv.errors["plain"];
                const auto shift = pooled_shift(cv.snr, pl, pe, sa, se, kMinErrors);
                const double worst_shift = shift ? shift->first : kNaN;
                const int points = shift ? shift->second : 0;
                // Floor: the curve must keep falling wherever the counts are
                // meaningful and reach 1e-4.
                bool floor_free = false;
                bool monotone = true;
                for (std::size_t q = 0; q < sa.size(); ++q) {
                    if (q > 0 && se[q] >= kMinErrors && sa[q] > sa[q - 1]) {
                        monotone = false;
                    }
                    if (sa[q] <= 1e-4) {
                        floor_free = true;
                        break;
                    }
                }
                pass = pass && points > 0 && worst_shift <= 1.1 && floor_free && monotone;
                measured += std::to_string(order) + "QAM: shift " + num(worst_shift) + " dB over " +
                            std::to_string(points) + " pts, " + (floor_free && monotone ? "reaches 1e-4" : "FLOOR") +
                            "; ";
            } else {
                have_imperfect = true;
                const auto& pm = cv.ber["plain_matched"];
                double worst = 0.0;
                for (std::size_t q = 0; q < sa.size(); ++q) {
                    const double n = cv.bits[q];
                    const double p = 0.5 * (sa[q] + pm[q]);
                    const double sd = std::sqrt(std::max(p * (1.0 - p), 1.0 / n) * 2.0 / n);
                    worst = std::max(worst, std::abs(sa[q] - pm[q]) / sd);
                }
                pass = pass && worst <= kZ;
                measured += std::to_string(order) + "QAM sigma_e2=" + fmt(s2) + ": max |SA - plain| " + num(worst) +
                            " sd; ";
            }
        }
        if (have16 && have64 && have_imperfect) {
            c.evaluated = true;
            c.pass = pass;
            c.measured = measured;
        }
    }
    return out;
}

bool emit_report(const std::vector<CriterionResult>& results, std::ostream& os)
{
    bool all = true;
    for (const CriterionResult& c : results) {
        const char* verdict = !c.evaluated ? "SKIP" : (c.pass ? "PASS" : "FAIL");
        if (c.evaluated && !c.pass) {
            all = false;
        }
        os << "[" << verdict << "] criterion " << c.id << ": " << c.title << " | measured: " << c.measured << "\n";
    }
    return all;
}

std::string report_json(const std::vector<CriterionResult>& results)
{
    json arr = json::array();
    for (const CriterionResult& c : results) {
        arr.push_back({{"id", c.id},
                       {"title", c.title},
                       {"evaluated", c.evaluated},
                       {"pass", c.pass},
                       {"measured", c.measured}});
    }
    json root;
    root["version"] = SALIGN_VERSION;
    root["criteria"] = arr;
    return root.dump(2);
}

}  // namespace salign

#include "hydrodp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hydrodp/errors.hpp"

namespace hydrodp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&key](const char* a) { return key == a; }) == allowed.end())
            throw ParseError("unknown key '" + key + "' in " + context);
    }
}

double require_number(const json& obj, const char* key, const std::string& context) {
    if (!obj.contains(key))
        throw ParseError("missing key '" + std::string(key) + "' in " + context);
    if (!obj[key].is_number())
        throw ParseError("key '" + std::string(key) + "' in " + context + " must be a number");
    return obj[key].get<double>();
}

std::vector<double> require_array(const json& obj, const char* key, const std::string& context) {
    if (!obj.contains(key))
        throw ParseError("missing key '" + std::string(key) + "' in " + context);
    if (!obj[key].is_array())
        throw ParseError("key '" + std::string(key) + "' in " + context + " must be an array");
    std::vector<double> out;
    for (const auto& v : obj[key]) {
        if (!v.is_number())
            throw ParseError("array '" + std::string(key) + "' in " + context +
                             " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// Acklam's rational approximation of the standard normal quantile.
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - plow) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

// Equal-probability discretization of a named parametric density: one atom
// per probability bin at the bin-midpoint quantile, clamped to non-negative
// inflows (coinciding atoms merge their weight).
InflowDistribution discretize_density(const json& density, const std::string& context) {
    reject_unknown_keys(density, {"name", "bins", "mean", "stddev", "log_mean", "log_stddev",
                               "low", "high"},
                        context);
    if (!density.contains("name") || !density["name"].is_string())
        throw ParseError("density in " + context + " needs a string 'name'");
    const std::string name = density["name"].get<std::string>();
    const int bins = density.contains("bins") ? density["bins"].get<int>() : 5;
    if (bins < 1) throw ParseError("density in " + context + " needs bins >= 1");

    auto quantile_of = [&](double p) -> double {
        if (name == "normal") {
            const double mean = require_number(density, "mean", context);
            const double sd = require_number(density, "stddev", context);
            return mean + sd * normal_quantile(p);
        }
        if (name == "lognormal") {
            const double mu = require_number(density, "log_mean", context);
            const double sig = require_number(density, "log_stddev", context);
            return std::exp(mu + sig * normal_quantile(p));
        }
        if (name == "uniform") {
            const double lo = require_number(density, "low", context);
            const double hi = require_number(density, "high", context);
            return lo + p * (hi - lo);
        }
        throw ParseError("unknown density '" + name + "' in " + context);
    };

    std::map<double, double> atoms;
    const double w = 1.0 / static_cast<double>(bins);
    for (int k = 0; k < bins; ++k) {
        const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(bins);
        const double x = std::max(0.0, quantile_of(p));
        atoms[x] += w;
    }
    InflowDistribution dist;
    for (const auto& [x, weight] : atoms) {
        dist.support.push_back(x);
        dist.weights.push_back(weight);
    }
    return dist;
}

HeadCurve parse_head_curve(const json& j, const std::string& context) {
    reject_unknown_keys(j, {"eta", "H_max", "points"}, context);
    HeadCurve curve;
    curve.efficiency = require_number(j, "eta", context);
    curve.max_head = require_number(j, "H_max", context);
    if (!j.contains("points") || !j["points"].is_array())
        throw ParseError("missing array 'points' in " + context);
    for (const auto& p : j["points"]) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw ParseError("points in " + context + " must be [store, head] pairs");
        curve.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return curve;
}

FlowModel parse_flow(const json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ParseError("flow: needs a string 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "deterministic") {
        reject_unknown_keys(j, {"kind", "inflows"}, "flow");
        if (!j.contains("inflows") || !j["inflows"].is_array())
            throw ParseError("flow: deterministic needs 'inflows' (array per reservoir)");
        DeterministicFlow det;
        for (const auto& series : j["inflows"]) {
            std::vector<double> s;
            for (const auto& v : series) s.push_back(v.get<double>());
            det.inflows.push_back(std::move(s));
        }
        return det;
    }
    if (kind == "independent") {
        reject_unknown_keys(j, {"kind", "confidence_level", "distributions"}, "flow");
        IndependentFlow ind;
        if (j.contains("confidence_level"))
            ind.confidence_level = j["confidence_level"].get<double>();
        if (!j.contains("distributions") || !j["distributions"].is_array())
            throw ParseError("flow: independent needs 'distributions'");
        int idx = 0;
        for (const auto& d : j["distributions"]) {
            const std::string context = "flow.distributions[" + std::to_string(idx++) + "]";
            if (d.contains("density")) {
                reject_unknown_keys(d, {"density"}, context);
                ind.per_period.push_back(discretize_density(d["density"], context));
            } else {
                reject_unknown_keys(d, {"support", "weights"}, context);
                InflowDistribution dist;
                dist.support = require_array(d, "support", context);
                dist.weights = require_array(d, "weights", context);
                ind.per_period.push_back(std::move(dist));
            }
        }
        return ind;
    }
    if (kind == "markov") {
        reject_unknown_keys(j, {"kind", "confidence_level", "bins", "transitions", "initial"},
                            "flow");
        MarkovFlow mk;
        if (j.contains("confidence_level"))
            mk.confidence_level = j["confidence_level"].get<double>();
        mk.bins = require_array(j, "bins", "flow");
        mk.initial = require_array(j, "initial", "flow");
        if (!j.contains("transitions") || !j["transitions"].is_array())
            throw ParseError("flow: markov needs 'transitions' (one matrix per period)");
        for (const auto& matrix : j["transitions"]) {
            std::vector<std::vector<double>> m;
            for (const auto& row : matrix) {
                std::vector<double> r;
                for (const auto& v : row) r.push_back(v.get<double>());
                m.push_back(std::move(r));
            }
            mk.transitions.push_back(std::move(m));
        }
        return mk;
    }
    throw ParseError("flow: unknown kind '" + kind + "'");
}

Scenario parse_scenario_json(const json& j) {
    reject_unknown_keys(j, {"n_periods", "demands", "costs", "tau_days", "reservoirs",
                            "cascade_stations", "flow"},
                        "scenario");
    Scenario s;
    if (!j.contains("n_periods") || !j["n_periods"].is_number_integer())
        throw ParseError("scenario: needs integer 'n_periods'");
    s.n_periods = j["n_periods"].get<int>();
    s.demands = require_array(j, "demands", "scenario");
    if (j.contains("tau_days")) s.tau_days = j["tau_days"].get<int>();

    if (!j.contains("costs") || !j["costs"].is_object())
        throw ParseError("scenario: needs object 'costs'");
    const json& jc = j["costs"];
    reject_unknown_keys(jc, {"c", "p", "K", "a", "gamma"}, "costs");
    s.costs.thermal_price = require_number(jc, "c", "costs");
    s.costs.deficit_penalty = require_number(jc, "p", "costs");
    s.costs.thermal_cap = require_number(jc, "K", "costs");
    if (jc.contains("a")) s.costs.sale_prices = require_array(jc, "a", "costs");
    if (jc.contains("gamma")) s.costs.demand_penalty = jc["gamma"].get<double>();

    if (!j.contains("reservoirs") || !j["reservoirs"].is_array())
        throw ParseError("scenario: needs array 'reservoirs'");
    int ridx = 0;
    for (const auto& jr : j["reservoirs"]) {
        const std::string context = "reservoirs[" + std::to_string(ridx++) + "]";
        reject_unknown_keys(jr, {"capacity", "initial", "levels", "head_curve"}, context);
        Reservoir r;
        r.capacity = require_number(jr, "capacity", context);
        r.initial_store = require_number(jr, "initial", context);
        if (!jr.contains("levels") || !jr["levels"].is_number_integer())
            throw ParseError("missing integer 'levels' in " + context);
        r.level_count = jr["levels"].get<int>();
        if (jr.contains("head_curve"))
            r.head_curve = parse_head_curve(jr["head_curve"], context + ".head_curve");
        s.reservoirs.push_back(std::move(r));
    }

    if (j.contains("cascade_stations")) {
        int cidx = 0;
        for (const auto& js : j["cascade_stations"]) {
            const std::string context = "cascade_stations[" + std::to_string(cidx++) + "]";
            reject_unknown_keys(js, {"pass_capacity", "lateral_inflows"}, context);
            CascadeStation st;
            st.pass_capacity = require_number(js, "pass_capacity", context);
            st.lateral_inflows = require_array(js, "lateral_inflows", context);
            s.cascade_stations.push_back(std::move(st));
        }
    }

    if (!j.contains("flow")) throw ParseError("scenario: needs object 'flow'");
    s.flow = parse_flow(j["flow"]);

    for (const Reservoir& r : s.reservoirs)
        if (r.head_curve) s.in_energy_units = false;
    return s;
}

json number_array(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(x);
    return out;
}

} // namespace

Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    Scenario s = parse_scenario_json(j);
    // Validate volume-denominated invariants before converting units.
    require_valid(s);
    convert_to_energy_units(s);
    require_valid(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string scenario_to_text(const Scenario& s) {
    json j;
    j["n_periods"] = s.n_periods;
    j["demands"] = number_array(s.demands);
    j["tau_days"] = s.tau_days;
    json jc;
    jc["c"] = s.costs.thermal_price;
    jc["p"] = s.costs.deficit_penalty;
    jc["K"] = s.costs.thermal_cap;
    if (!s.costs.sale_prices.empty()) jc["a"] = number_array(s.costs.sale_prices);
    if (s.costs.demand_penalty) jc["gamma"] = *s.costs.demand_penalty;
    j["costs"] = std::move(jc);

    // Curve-carrying reservoirs are file-denominated in volume units; undo
    // the ingestion conversion so a parse/serialize cycle is the identity.
    j["reservoirs"] = json::array();
    for (const Reservoir& r : s.reservoirs) {
        json jr;
        jr["capacity"] = r.capacity / r.energy_rate;
        jr["initial"] = r.initial_store / r.energy_rate;
        jr["levels"] = r.level_count;
        if (r.head_curve) {
            json jh;
            jh["eta"] = r.head_curve->efficiency;
            jh["H_max"] = r.head_curve->max_head;
            jh["points"] = json::array();
            for (const auto& p : r.head_curve->points)
                jh["points"].push_back(json::array({p.store, p.head}));
            jr["head_curve"] = std::move(jh);
        }
        j["reservoirs"].push_back(std::move(jr));
    }

    const double water_rate = s.reservoirs.empty() ? 1.0 : s.reservoirs[0].energy_rate;
    const auto scaled = [](const std::vector<double>& v, double rate) {
        json out = json::array();
        for (double x : v) out.push_back(x / rate);
        return out;
    };

    if (!s.cascade_stations.empty()) {
        j["cascade_stations"] = json::array();
        for (const CascadeStation& st : s.cascade_stations) {
            json js;
            js["pass_capacity"] = st.pass_capacity / water_rate;
            js["lateral_inflows"] = scaled(st.lateral_inflows, water_rate);
            j["cascade_stations"].push_back(std::move(js));
        }
    }

    json jf;
    if (const auto* det = std::get_if<DeterministicFlow>(&s.flow)) {
        jf["kind"] = "deterministic";
        jf["inflows"] = json::array();
        for (std::size_t r = 0; r < det->inflows.size(); ++r)
            jf["inflows"].push_back(scaled(
                det->inflows[r], r < s.reservoirs.size() ? s.reservoirs[r].energy_rate : 1.0));
    } else if (const auto* ind = std::get_if<IndependentFlow>(&s.flow)) {
        jf["kind"] = "independent";
        jf["confidence_level"] = ind->confidence_level;
        jf["distributions"] = json::array();
        for (const auto& d : ind->per_period) {
            json jd;
            jd["support"] = scaled(d.support, water_rate);
            jd["weights"] = number_array(d.weights);
            jf["distributions"].push_back(std::move(jd));
        }
    } else {
        const auto& mk = s.markov_flow();
        jf["kind"] = "markov";
        jf["confidence_level"] = mk.confidence_level;
        jf["bins"] = scaled(mk.bins, water_rate);
        jf["initial"] = number_array(mk.initial);
        jf["transitions"] = json::array();
        for (const auto& matrix : mk.transitions) {
            json jm = json::array();
            for (const auto& row : matrix) jm.push_back(number_array(row));
            jf["transitions"].push_back(std::move(jm));
        }
    }
    j["flow"] = std::move(jf);
    return j.dump(2) + "\n";
}

std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

struct BundleWriter {
    fs::path dir;
    json manifest_files = json::array();

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ParseError("cannot write '" + (dir / name).string() + "'");
        out << content;
        json f;
        f["name"] = name;
        f["bytes"] = content.size();
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(content)));
        f["fnv1a64"] = hex;
        manifest_files.push_back(std::move(f));
    }
};

std::string stage_file(const char* prefix, int stage) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d.csv", prefix, stage);
    return buf;
}

void append_state_columns(std::string& row, const Grid& grid, std::span<const int> idx) {
    for (int k = 0; k < grid.dims(); ++k) {
        row += ',';
        row += format_g12(grid.store(k, idx[static_cast<std::size_t>(k)]));
    }
}

} // namespace

void write_result_bundle(const SolveResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    BundleWriter w{out_dir};
    const Grid& grid = result.grid;
    const std::size_t D = grid.size();
    const auto bins = static_cast<std::size_t>(result.inflow_bins);
    std::vector<int> idx(static_cast<std::size_t>(grid.dims()));

    std::string header = "state";
    for (int k = 0; k < grid.dims(); ++k) header += ",store_" + std::to_string(k);
    if (bins > 1) header += ",bin";

    for (std::size_t t = 0; t < result.values.size(); ++t) {
        const ValueTable& vt = result.values[t];
        std::string csv = header + ",value\n";
        for (std::size_t state = 0; state < D; ++state) {
            grid.unflatten(state, idx);
            for (std::size_t b = 0; b < bins; ++b) {
                std::string row = std::to_string(state);
                append_state_columns(row, grid, idx);
                if (bins > 1) row += ',' + std::to_string(b);
                row += ',';
                row += format_g12(vt.values[b * D + state]);
                row += '\n';
                csv += row;
            }
        }
        w.write(stage_file("value", vt.stage), csv);
    }

    for (std::size_t t = 0; t < result.policies.size(); ++t) {
        const PolicyTable& pt = result.policies[t];
        const auto cps = static_cast<std::size_t>(pt.controls_per_state);
        std::string csv = header;
        for (std::size_t c = 0; c < cps; ++c) csv += ",release_" + std::to_string(c);
        csv += '\n';
        for (std::size_t state = 0; state < D; ++state) {
            grid.unflatten(state, idx);
            for (std::size_t b = 0; b < bins; ++b) {
                std::string row = std::to_string(state);
                append_state_columns(row, grid, idx);
                if (bins > 1) row += ',' + std::to_string(b);
                for (std::size_t c = 0; c < cps; ++c) {
                    row += ',';
                    row += format_g12(pt.controls[(b * D + state) * cps + c]);
                }
                row += '\n';
                csv += row;
            }
        }
        w.write(stage_file("policy", pt.stage), csv);
    }

    std::size_t eval_total = 0;
    for (std::size_t e : result.evaluations_per_stage) eval_total += e;
    std::string metrics = "metric,value\n";
    metrics += std::string("model,") + model_name(result.model) + "\n";
    metrics += "f1," + format_g12(result.initial_value) + "\n";
    metrics += "stages," + std::to_string(result.values.size()) + "\n";
    metrics += "states_per_stage," + std::to_string(D * bins) + "\n";
    metrics +=
        "minimizations_per_stage," + std::to_string(result.minimizations_per_stage.front()) + "\n";
    metrics += "evaluations_total," + std::to_string(eval_total) + "\n";
    metrics += "wall_ms," + format_g12(result.wall_ms) + "\n";
    w.write("metrics.csv", metrics);

    json manifest;
    manifest["model"] = model_name(result.model);
    manifest["f1"] = result.initial_value;
    manifest["inflow_bins"] = result.inflow_bins;
    manifest["files"] = std::move(w.manifest_files);
    if (!result.notes.empty()) manifest["notes"] = result.notes;
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

SolveResult read_policy_bundle(const Scenario& scenario, const std::string& bundle_dir) {
    const fs::path dir(bundle_dir);
    std::ifstream min(dir / "manifest.json", std::ios::binary);
    if (!min) throw ParseError("cannot open '" + (dir / "manifest.json").string() + "'");
    json manifest;
    try {
        manifest = json::parse(min);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed manifest.json at byte " + std::to_string(e.byte));
    }

    SolveResult out;
    out.model = model_from_name(manifest["model"].get<std::string>());
    out.initial_value = manifest["f1"].get<double>();
    out.inflow_bins = manifest.value("inflow_bins", 1);
    out.grid = Grid::from_reservoirs(scenario.reservoirs);
    const std::size_t D = out.grid.size();
    const auto bins = static_cast<std::size_t>(out.inflow_bins);
    if (out.model == Model::markov) {
        const auto* mk = std::get_if<MarkovFlow>(&scenario.flow);
        if (!mk || mk->bins.size() != bins)
            throw ApplicabilityError("policy bundle: inflow bins do not match the scenario");
    }

    for (int stage = 1; stage <= scenario.n_periods; ++stage) {
        const fs::path file = dir / stage_file("policy", stage);
        std::ifstream in(file, std::ios::binary);
        if (!in)
            throw ApplicabilityError("policy bundle: missing " + file.string() +
                                     " for the scenario's " + std::to_string(scenario.n_periods) +
                                     " periods");
        std::string line;
        if (!std::getline(in, line)) throw ParseError("empty policy file " + file.string());
        // Header tells how many release columns follow the state columns.
        int release_cols = 0;
        {
            std::stringstream hs(line);
            std::string col;
            while (std::getline(hs, col, ','))
                if (col.rfind("release_", 0) == 0) ++release_cols;
        }
        if (release_cols < 1) throw ParseError("no release columns in " + file.string());

        PolicyTable pt;
        pt.stage = stage;
        pt.controls_per_state = release_cols;
        pt.controls.assign(D * bins * static_cast<std::size_t>(release_cols), 0.0);
        const int state_cols = out.grid.dims() + 1 + (bins > 1 ? 1 : 0);
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (static_cast<int>(cells.size()) != state_cols + release_cols)
                throw ParseError("bad column count in " + file.string());
            const auto state = static_cast<std::size_t>(std::stoull(cells[0]));
            const std::size_t b =
                bins > 1 ? static_cast<std::size_t>(
                               std::stoull(cells[static_cast<std::size_t>(state_cols) - 1]))
                         : 0;
            for (int c = 0; c < release_cols; ++c)
                pt.controls[(b * D + state) * static_cast<std::size_t>(release_cols) +
                            static_cast<std::size_t>(c)] =
                    std::stod(cells[static_cast<std::size_t>(state_cols + c)]);
            ++rows;
        }
        if (rows != D * bins)
            throw ApplicabilityError("policy bundle: " + file.string() + " has " +
                                     std::to_string(rows) + " states, scenario grid has " +
                                     std::to_string(D * bins));
        out.policies.push_back(std::move(pt));
    }
    return out;
}

void write_simulation_bundle(const std::vector<RolloutTrace>& traces,
                             const std::string& out_dir) {
    fs::create_directories(out_dir);
    BundleWriter w{out_dir};

    double cost_min = 0.0, cost_max = 0.0, cost_sum = 0.0, spill_sum = 0.0, deficit_sum = 0.0;
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const RolloutTrace& trace = traces[t];
        std::string csv;
        if (!trace.periods.empty()) {
            const std::size_t m = trace.periods[0].store_before.size();
            const std::size_t cps = trace.periods[0].release.size();
            csv = "period";
            for (std::size_t j = 0; j < m; ++j) csv += ",store_before_" + std::to_string(j);
            for (std::size_t j = 0; j < m; ++j) csv += ",inflow_" + std::to_string(j);
            for (std::size_t c = 0; c < cps; ++c) csv += ",release_" + std::to_string(c);
            for (std::size_t j = 0; j < m; ++j) csv += ",spill_" + std::to_string(j);
            csv += ",hydro,thermal,deficit,surplus,cost\n";
        }
        double spill = 0.0, deficit = 0.0;
        for (std::size_t i = 0; i < trace.periods.size(); ++i) {
            const RolloutPeriod& rec = trace.periods[i];
            std::string row = std::to_string(i + 1);
            for (double v : rec.store_before) row += ',' + format_g12(v);
            for (double v : rec.inflow) row += ',' + format_g12(v);
            for (double v : rec.release) row += ',' + format_g12(v);
            for (double v : rec.spill) {
                row += ',' + format_g12(v);
                spill += v;
            }
            row += ',' + format_g12(rec.hydro);
            row += ',' + format_g12(rec.thermal);
            row += ',' + format_g12(rec.deficit);
            deficit += rec.deficit;
            row += ',' + format_g12(rec.surplus);
            row += ',' + format_g12(rec.cost);
            row += '\n';
            csv += row;
        }
        char name[32];
        std::snprintf(name, sizeof name, "trace_%04zu.csv", t + 1);
        w.write(name, csv);

        const double cost = trace.total_cost;
        if (t == 0 || cost < cost_min) cost_min = cost;
        if (t == 0 || cost > cost_max) cost_max = cost;
        cost_sum += cost;
        spill_sum += spill;
        deficit_sum += deficit;
    }

    std::string summary = "paths,cost_mean,cost_min,cost_max,spill_mean,deficit_mean\n";
    const double np = traces.empty() ? 1.0 : static_cast<double>(traces.size());
    summary += std::to_string(traces.size());
    if (traces.empty()) {
        summary += ",,,,,\n";
    } else {
        summary += ',' + format_g12(cost_sum / np);
        summary += ',' + format_g12(cost_min);
        summary += ',' + format_g12(cost_max);
        summary += ',' + format_g12(spill_sum / np);
        summary += ',' + format_g12(deficit_sum / np);
        summary += '\n';
    }
    w.write("summary.csv", summary);

    json manifest;
    manifest["paths"] = traces.size();
    manifest["files"] = std::move(w.manifest_files);
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

std::vector<std::vector<double>> read_inflow_csv(const std::string& path,
                                                 std::size_t reservoir_count,
                                                 bool markov_prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open inflow file '" + path + "'");
    std::vector<std::vector<double>> series(reservoir_count);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (!line.empty() && !(line[0] >= '0' && line[0] <= '9')) continue; // header
        }
        std::stringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != reservoir_count + 1)
            throw ParseError("inflow file '" + path + "': expected period plus " +
                             std::to_string(reservoir_count) + " columns");
        for (std::size_t j = 0; j < reservoir_count; ++j)
            series[j].push_back(std::stod(cells[j + 1]));
    }
    (void)markov_prefix; // length checked by rollout
    return series;
}

} // namespace hydrodp

#include "mbridge/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mbridge/errors.hpp"

namespace mbridge {

using nlohmann::json;

namespace {

std::vector<double> number_array(const json& j, const std::string& where) {
    if (!j.is_array())
        throw ParseError(where + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number())
            throw ParseError(where + ": expected numbers, found " +
                             std::string(v.type_name()));
        out.push_back(v.get<double>());
    }
    return out;
}

DiscreteMeasure parse_measure(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ParseError("missing field \"" + key + "\"");
    const json& m = j.at(key);
    if (!m.is_object())
        throw ParseError(key + ": expected an object with atoms and weights");
    if (!m.contains("atoms")) throw ParseError(key + ".atoms: missing");
    if (!m.contains("weights")) throw ParseError(key + ".weights: missing");
    try {
        return validate_measure(number_array(m.at("atoms"), key + ".atoms"),
                                number_array(m.at("weights"), key + ".weights"));
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(key + ": " + e.what());
    }
}

json interval_json(const std::optional<Interval>& I) {
    if (!I) return nullptr;
    json out = json::array();
    out.push_back(I->lo);
    out.push_back(I->hi);
    return out;
}

json residuals_json(const Residuals& r) {
    return json{{"marginal_mu", r.marginal_mu},
                {"marginal_nu", r.marginal_nu},
                {"martingale", r.martingale},
                {"mass", r.mass}};
}

}  // namespace

InstanceFile parse_instance_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!j.is_object()) throw ParseError("top level: expected an object");
    InstanceFile file{parse_measure(j, "mu"), parse_measure(j, "nu"), {}};
    if (j.contains("name")) {
        if (!j.at("name").is_string())
            throw ParseError("name: expected a string");
        file.name = j.at("name").get<std::string>();
    }
    return file;
}

InstanceFile load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_instance_text(buf.str());
}

std::string instance_to_json(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const std::optional<std::string>& name) {
    json j;
    if (name) j["name"] = *name;
    j["mu"] = {{"atoms", mu.atoms()}, {"weights", mu.weights()}};
    j["nu"] = {{"atoms", nu.atoms()}, {"weights", nu.weights()}};
    return j.dump(2) + "\n";
}

std::string feasibility_to_json(const FeasibilityReport& r) {
    json j{{"means_equal", r.means_equal},
           {"convex_order", r.convex_order},
           {"irreducible", r.irreducible},
           {"endpoint_assumption", r.endpoint_assumption},
           {"interval_I", interval_json(r.interval_I)},
           {"detail", r.detail}};
    return j.dump(2) + "\n";
}

std::string feasibility_to_text(const FeasibilityReport& r) {
    std::ostringstream os;
    os.precision(17);
    auto flag = [](bool b) { return b ? "true" : "false"; };
    os << "means_equal:         " << flag(r.means_equal) << "\n";
    os << "convex_order:        " << flag(r.convex_order) << "\n";
    os << "irreducible:         " << flag(r.irreducible) << "\n";
    os << "endpoint_assumption: " << flag(r.endpoint_assumption) << "\n";
    if (r.interval_I)
        os << "interval_I:          (" << r.interval_I->lo << ", "
           << r.interval_I->hi << ")\n";
    else
        os << "interval_I:          not evaluable\n";
    for (const std::string& d : r.detail) os << "  - " << d << "\n";
    return os.str();
}

std::string report_to_json(const SolveReport& report,
                           const ProblemInstance& instance,
                           const std::optional<std::string>& name) {
    json j;
    if (name) j["name"] = *name;
    j["mode"] = report.mode == SolveMode::Relaxed ? "relaxed" : "martingale";
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["gauge"] = "canonical";
    j["potentials"] = {{"f", report.potentials.f},
                       {"g", report.potentials.g},
                       {"h", report.potentials.h}};
    j["primal"] = report.primal;
    j["dual"] = report.dual;
    j["gap"] = report.gap;
    j["residuals"] = residuals_json(report.residuals);
    if (report.mode == SolveMode::Relaxed) {
        j["relaxed"] = {{"one_sided", report.one_sided},
                        {"comp_slack", report.comp_slack}};
        if (report.tv_to_martingale)
            j["relaxed"]["tv_to_martingale"] = *report.tv_to_martingale;
    }
    j["warnings"] = report.warnings;
    j["shift"] = instance.shift;
    j["atoms"] = {{"x", instance.mu.atoms()}, {"y", instance.nu.atoms()}};
    return j.dump(2) + "\n";
}

void write_coupling_csv(const std::string& path, const Coupling& coupling,
                        const ProblemInstance& instance) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out.precision(17);
    out << "i,j,x,y,pi\n";
    for (std::size_t i = 0; i < coupling.log_weights.rows(); ++i)
        for (std::size_t j = 0; j < coupling.log_weights.cols(); ++j)
            out << i << ',' << j << ',' << instance.mu.atom(i) + instance.shift
                << ',' << instance.nu.atom(j) + instance.shift << ','
                << std::exp(coupling.log_weights(i, j)) << "\n";
}

void write_trace_csv(const std::string& path, const SolveReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out.precision(17);
    const bool relaxed = report.mode == SolveMode::Relaxed;
    out << "iter,marginal_mu,marginal_nu,martingale,mass,dual";
    if (relaxed) out << ",one_sided,comp_slack";
    out << "\n";
    for (std::size_t k = 0; k < report.trace.size(); ++k) {
        const TracePoint& t = report.trace[k];
        out << (k + 1) << ',' << t.residuals.marginal_mu << ','
            << t.residuals.marginal_nu << ',' << t.residuals.martingale << ','
            << t.residuals.mass << ',' << t.dual;
        if (relaxed)
            out << ',' << t.one_sided.value_or(0.0) << ','
                << t.comp_slack.value_or(0.0);
        out << "\n";
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << content;
}

}  // namespace mbridge

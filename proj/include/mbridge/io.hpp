#ifndef MBRIDGE_IO_HPP
#define MBRIDGE_IO_HPP

#include <optional>
#include <string>

#include "mbridge/measures.hpp"
#include "mbridge/solver.hpp"

namespace mbridge {

/// Parsed instance file: two raw measures plus an optional name. Atoms
/// and weights are validated into DiscreteMeasures during parsing.
struct InstanceFile {
    DiscreteMeasure mu;
    DiscreteMeasure nu;
    std::optional<std::string> name;
};

/// Parses the instance JSON {"mu": {"atoms": [...], "weights": [...]},
/// "nu": {...}, "name": "..."} from a string. Throws ParseError with a
/// field or position diagnostic.
InstanceFile parse_instance_text(const std::string& text);

/// Reads and parses an instance file. Throws ParseError (unreadable file
/// included).
InstanceFile load_instance(const std::string& path);

/// Serializes a measure pair as instance JSON. Doubles round-trip
/// losslessly.
std::string instance_to_json(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                             const std::optional<std::string>& name = {});

std::string feasibility_to_json(const FeasibilityReport& report);

/// Human-readable feasibility block (one field per line).
std::string feasibility_to_text(const FeasibilityReport& report);

/// Solve report JSON: gauge, potentials, primal/dual/gap, residuals,
/// warnings, iterations, convergence flag and (relaxed mode) the relaxed
/// diagnostics.
std::string report_to_json(const SolveReport& report, const ProblemInstance& instance,
                           const std::optional<std::string>& name = {});

/// Coupling CSV, row-major, header i,j,x,y,pi. Atom columns are written
/// in the original (uncentered) coordinates.
void write_coupling_csv(const std::string& path, const Coupling& coupling,
                        const ProblemInstance& instance);

/// Per-sweep trace CSV. Relaxed-mode runs gain one_sided and comp_slack
/// columns.
void write_trace_csv(const std::string& path, const SolveReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mbridge

#endif  // MBRIDGE_IO_HPP

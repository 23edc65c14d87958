#pragma once

// JSON instance files, report serialization and CSV output.
//
// Instance file:
//   {
//     "alphabets": {"U": 2, "X": 2, "Y": 2, "V": 2},   // optional "W", "W1", "W2"
//     "source":  [p(u) ...],
//     "channel": [[T(y|x) ...] per x],
//     "target":  [[Q(x,v|u) flattened x-major] per u],
//     "utility":    [phi(u,x,y,v) flattened],            // optional
//     "distortion": [[d(u,v) ...] per u],                  // optional
//     "cost":       [c(x) ...]                             // optional
//   }

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coordkit/constraint.hpp"
#include "coordkit/region.hpp"
#include "coordkit/sim.hpp"

namespace coordkit {

using Json = nlohmann::ordered_json;

struct InstanceFile {
  StrictInstance instance;
  AlphabetProfile profile;  // includes any auxiliary sizes given
  std::optional<UtilitySpec> utility;
};

/// Throws InstanceFormatError naming the offending field and cell.
InstanceFile parse_instance(const Json& j);
InstanceFile load_instance(const std::string& path);
Json instance_to_json(const StrictInstance& inst);

Json to_json(const FiniteDist& d);
Json to_json(const Kernel& k);
FiniteDist dist_from_json(const Json& j);
Kernel kernel_from_json(const Json& j);

Verdict verdict_from_string(const std::string& s);

Json to_json(const ConstraintReport& r);
ConstraintReport report_from_json(const Json& j);

Json to_json(const CapacityResult& r);
Json to_json(const MembershipResult& r);
Json to_json(const MaxUtilityResult& r);
Json to_json(const DecompositionResult& r);
Json to_json(const RatePlan& p);
Json to_json(const MonteCarloSummary& s);

/// Resolved invocation: subcommand, paths and every parameter after defaults.
struct RunSpec {
  std::string subcommand;
  std::string instance_path;
  std::string output_path;
  std::vector<std::pair<std::string, std::string>> params;

  void set(std::string name, std::string value);
  Json to_json() const;
};

/// Formats with 12 significant digits.
std::string format_number(double v);

/// Header row and numeric rows; writes a `# run_spec: {...}` comment first.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void write(std::ostream& os, const RunSpec& spec) const;
};

}  // namespace coordkit

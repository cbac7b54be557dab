#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pfrac/analysis.hpp"
#include "pfrac/scenarios.hpp"

namespace pfrac {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

FormulationKind formulation_from_string(std::string_view s);
Geometry geometry_from_string(std::string_view s);
Irreversibility irreversibility_from_string(std::string_view s);
std::string_view to_string(Irreversibility i);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Reads `key = value` lines; `#` starts a comment. Keys are normalised to
/// lower case. A key given twice with different values is rejected.
KeyValues read_key_values(std::istream& in);

/// Layers the key/value pairs over the defaults of the scenario they name
/// (the `scenario` key, else `fallback`). Accepts the parameter names used in
/// the benchmark tables (mu0, nu0, G_c, delta_t, ...) as aliases. Throws
/// ConfigError on unknown keys, malformed or out-of-range values.
ScenarioConfig build_config(const KeyValues& kv, Geometry fallback = Geometry::Shear);
/// Applies the pairs to an existing config without resetting defaults.
void apply_config(ScenarioConfig& config, const KeyValues& kv);

ScenarioConfig parse_config(std::string_view text, Geometry fallback = Geometry::Shear);
ScenarioConfig load_config(const std::filesystem::path& path, Geometry fallback = Geometry::Shear);

/// Canonical text form; parse_config(emit_config(c)) == c.
std::string emit_config(const ScenarioConfig& config);

std::string format_double(double v);
std::vector<double> parse_double_list(std::string_view s);

inline constexpr std::string_view kLoadCsvHeader =
    "step,t,displacement_mm,Fx_kN,Fy_kN,Fx_deg_kN,Fy_deg_kN,newton_iters";

void write_load_csv(std::ostream& out, const std::vector<LoadDisplacementRecord>& history);

/// One row per load step: iterations, final residual norm, line-search cuts
/// and active-set size of the accepted iterate.
void write_convergence_log(std::ostream& out, const std::vector<LoadDisplacementRecord>& history,
                           const std::vector<std::vector<NewtonIteration>>& logs);

/// Legacy ASCII VTK on the vertices: u (padded to 3 components), phi, tau
/// and p. Without a pressure block p = lambda div u, averaged over the cells
/// sharing a vertex.
void write_vtk(std::ostream& out, const Scenario& scenario, const SystemState& state);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceTable>& tables);
void write_infsup_csv(std::ostream& out, const std::vector<InfSupReport>& reports);
void write_sweep_csv(std::ostream& out, std::string_view key, const std::vector<std::pair<double, PeakLoad>>& rows);

std::string pairing_name(Pairing p);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config;
  std::string version;
  std::string started;   // UTC, ISO 8601
  std::string finished;
  std::string status;
  std::map<std::string, std::string> checksums;  // file name -> sha256
};

std::string utc_timestamp();

/// Checksums every listed file (relative to dir) and writes manifest.json
/// through a temporary file and a rename.
void write_manifest(const std::filesystem::path& dir, RunManifest manifest, const std::vector<std::string>& files);

/// Writes `content` to dir/name via a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string_view version();

}  // namespace pfrac

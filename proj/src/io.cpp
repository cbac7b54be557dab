#include "pfrac/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <locale>
#include <sstream>

#include <openssl/evp.h>

#include "json.hpp"

namespace pfrac {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_double(const std::string& key, std::string_view v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(out))
    throw ConfigError("'" + key + "': expected a number, got '" + t + "'");
  return out;
}

int to_int(const std::string& key, std::string_view v) {
  const std::string t = trim(v);
  int out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("'" + key + "': expected an integer, got '" + t + "'");
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  const std::string t = lower(trim(v));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + t + "'");
}

// Alias -> canonical key.
const std::map<std::string, std::string>& key_aliases() {
  static const std::map<std::string, std::string> m{
      {"scenario", "scenario"},
      {"geometry", "scenario"},
      {"mu", "mu"},
      {"mu0", "mu"},
      {"mu_0", "mu"},
      {"nu", "nu"},
      {"nu0", "nu"},
      {"nu_0", "nu"},
      {"lambda", "lambda"},
      {"lambda0", "lambda"},
      {"lambda_0", "lambda"},
      {"gc", "gc"},
      {"g_c", "gc"},
      {"kappa", "kappa"},
      {"eps", "eps"},
      {"epsilon", "eps"},
      {"eps_factor", "eps_factor"},
      {"epsilon_factor", "eps_factor"},
      {"base_subdivisions", "base_subdivisions"},
      {"refinements", "refinements"},
      {"dt", "dt"},
      {"delta_t", "dt"},
      {"end_time", "end_time"},
      {"t_end", "end_time"},
      {"formulation", "formulation"},
      {"irreversibility", "irreversibility"},
      {"degrade_pressure_mass", "degrade_pressure_mass"},
      {"use_mu_in_driving_force", "use_mu_in_driving_force"},
      {"split_standard", "split_standard"},
      {"output_dir", "output_dir"},
      {"snapshots", "snapshots"},
      {"mirror_slit", "mirror_slit"},
  };
  return m;
}

std::string canonical_key(const std::string& key) {
  const auto it = key_aliases().find(key);
  if (it == key_aliases().end()) throw ConfigError("unknown configuration key '" + key + "'");
  return it->second;
}

}  // namespace

FormulationKind formulation_from_string(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t == "standard-q1q1") return FormulationKind::StandardQ1Q1;
  if (t == "standard-q2q1" || t == "standard") return FormulationKind::StandardQ2Q1;
  if (t == "mixed") return FormulationKind::MixedQ2Q1Q1Q1Star;
  throw ConfigError("unknown formulation '" + t + "' (standard-q1q1, standard-q2q1, mixed)");
}

Geometry geometry_from_string(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t == "shear") return Geometry::Shear;
  if (t == "lpanel" || t == "l-panel") return Geometry::LPanel;
  throw ConfigError("unknown scenario '" + t + "' (shear, lpanel)");
}

Irreversibility irreversibility_from_string(std::string_view s) {
  const std::string t = lower(trim(s));
  if (t == "multiplier") return Irreversibility::Multiplier;
  if (t == "penalty") return Irreversibility::Penalty;
  throw ConfigError("unknown irreversibility '" + t + "' (multiplier, penalty)");
}

std::string_view to_string(Irreversibility i) { return i == Irreversibility::Multiplier ? "multiplier" : "penalty"; }

std::string format_double(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<double> parse_double_list(std::string_view s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_double("list", item));
  }
  return out;
}

KeyValues read_key_values(std::istream& in) {
  KeyValues out;
  std::map<std::string, std::string> seen;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    std::string key = lower(trim(std::string_view(line).substr(0, eq)));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(number) + ": empty key");
    const std::string canon = canonical_key(key);
    if (auto it = seen.find(canon); it != seen.end() && it->second != value)
      throw ConfigError("'" + canon + "' is given twice with different values ('" + it->second + "', '" + value + "')");
    seen[canon] = value;
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_config(ScenarioConfig& c, const KeyValues& kv) {
  std::optional<double> lambda;
  for (const auto& [raw, value] : kv) {
    const std::string key = canonical_key(lower(raw));
    if (key == "scenario") {
      if (geometry_from_string(value) != c.geometry)
        throw ConfigError("scenario '" + value + "' conflicts with the selected scenario");
    } else if (key == "mu") {
      c.mu = to_double(key, value);
    } else if (key == "nu") {
      c.nu = to_double(key, value);
    } else if (key == "lambda") {
      lambda = to_double(key, value);
    } else if (key == "gc") {
      c.gc = to_double(key, value);
    } else if (key == "kappa") {
      c.kappa = to_double(key, value);
    } else if (key == "eps") {
      c.eps = to_double(key, value);
    } else if (key == "eps_factor") {
      c.eps_factor = to_double(key, value);
    } else if (key == "base_subdivisions") {
      c.base_subdivisions = to_int(key, value);
    } else if (key == "refinements") {
      c.refinements = to_int(key, value);
    } else if (key == "dt") {
      c.dt = to_double(key, value);
    } else if (key == "end_time") {
      c.t_end = to_double(key, value);
    } else if (key == "formulation") {
      c.mode.kind = formulation_from_string(value);
    } else if (key == "irreversibility") {
      c.mode.irreversibility = irreversibility_from_string(value);
    } else if (key == "degrade_pressure_mass") {
      c.mode.degrade_pressure_mass = to_bool(key, value);
    } else if (key == "use_mu_in_driving_force") {
      c.mode.use_mu_in_driving_force = to_bool(key, value);
    } else if (key == "split_standard") {
      c.mode.split_standard = to_bool(key, value);
    } else if (key == "output_dir") {
      if (value.empty()) throw ConfigError("output_dir must not be empty");
      c.output_dir = value;
    } else if (key == "snapshots") {
      try {
        c.snapshots = parse_double_list(value);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("'snapshots': ") + e.what());
      }
    } else if (key == "mirror_slit") {
      c.mirror_slit = to_bool(key, value);
    }
  }
  try {
    c.validate();
    if (lambda) {
      // Lambda follows from (nu, mu); a given value is only checked.
      const double derived = lame_from_poisson(c.nu, c.mu);
      if (std::abs(*lambda - derived) > 1e-2 * std::max(1.0, std::abs(derived))) {
        std::ostringstream msg;
        msg << "lambda = " << *lambda << " is inconsistent with nu = " << c.nu << ", mu = " << c.mu
            << " (lambda = 2 nu mu / (1 - 2 nu) = " << derived << ")";
        throw ConfigError(msg.str());
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ScenarioConfig build_config(const KeyValues& kv, Geometry fallback) {
  Geometry g = fallback;
  for (const auto& [key, value] : kv)
    if (canonical_key(lower(key)) == "scenario") g = geometry_from_string(value);
  ScenarioConfig c = ScenarioConfig::defaults(g);
  apply_config(c, kv);
  return c;
}

ScenarioConfig parse_config(std::string_view text, Geometry fallback) {
  std::istringstream in{std::string(text)};
  return build_config(read_key_values(in), fallback);
}

ScenarioConfig load_config(const std::filesystem::path& path, Geometry fallback) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return build_config(read_key_values(in), fallback);
}

std::string emit_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "scenario = " << to_string(c.geometry) << "\n"
     << "formulation = " << to_string(c.mode.kind) << "\n"
     << "irreversibility = " << to_string(c.mode.irreversibility) << "\n"
     << "degrade_pressure_mass = " << b(c.mode.degrade_pressure_mass) << "\n"
     << "use_mu_in_driving_force = " << b(c.mode.use_mu_in_driving_force) << "\n"
     << "split_standard = " << b(c.mode.split_standard) << "\n"
     << "mu = " << format_double(c.mu) << "\n"
     << "nu = " << format_double(c.nu) << "\n"
     << "gc = " << format_double(c.gc) << "\n"
     << "kappa = " << format_double(c.kappa) << "\n"
     << "eps = " << format_double(c.eps) << "\n"
     << "eps_factor = " << format_double(c.eps_factor) << "\n"
     << "base_subdivisions = " << c.base_subdivisions << "\n"
     << "refinements = " << c.refinements << "\n"
     << "dt = " << format_double(c.dt) << "\n"
     << "end_time = " << format_double(c.t_end) << "\n"
     << "output_dir = " << c.output_dir << "\n"
     << "snapshots = ";
  for (std::size_t i = 0; i < c.snapshots.size(); ++i) os << (i ? "," : "") << format_double(c.snapshots[i]);
  os << "\nmirror_slit = " << b(c.mirror_slit) << "\n";
  return os.str();
}

void write_load_csv(std::ostream& out, const std::vector<LoadDisplacementRecord>& history) {
  out.imbue(std::locale::classic());
  out << kLoadCsvHeader << "\n";
  for (const auto& r : history)
    out << r.step << ',' << format_double(r.time) << ',' << format_double(r.displacement) << ','
        << format_double(r.fx) << ',' << format_double(r.fy) << ',' << format_double(r.fx_deg) << ','
        << format_double(r.fy_deg) << ',' << r.newton_iterations << "\n";
}

void write_convergence_log(std::ostream& out, const std::vector<LoadDisplacementRecord>& history,
                           const std::vector<std::vector<NewtonIteration>>& logs) {
  out.imbue(std::locale::classic());
  out << "step,t,iters,final_residual,ls_cuts,staggered_iters,active_set_size\n";
  for (std::size_t k = 0; k < history.size(); ++k) {
    const auto& r = history[k];
    double residual = 0.0;
    int cuts = 0, staggered = 0;
    Index active = 0;
    if (k < logs.size() && !logs[k].empty()) {
      const auto& last = logs[k].back();
      for (double v : last.residual) residual += v * v;
      residual = std::sqrt(residual);
      active = last.active_size;
      for (const auto& it : logs[k]) {
        cuts += it.line_search_cuts;
        staggered += it.staggered;
      }
    }
    out << r.step << ',' << format_double(r.time) << ',' << r.newton_iterations << ',' << format_double(residual)
        << ',' << cuts << ',' << staggered << ',' << active << "\n";
  }
}

void write_vtk(std::ostream& out, const Scenario& scenario, const SystemState& state) {
  const Mesh& mesh = scenario.mesh();
  const DofMap& dofs = scenario.dofs();
  const Index n = mesh.n_nodes();
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n"
      << to_string(scenario.config().geometry) << " t=" << format_double(state.time) << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const Point& p : mesh.nodes()) out << p.x << ' ' << p.y << " 0\n";
  out << "CELLS " << mesh.n_cells() << ' ' << 5 * mesh.n_cells() << "\n";
  for (const QuadCell& c : mesh.cells())
    out << "4 " << c.nodes[0] << ' ' << c.nodes[1] << ' ' << c.nodes[2] << ' ' << c.nodes[3] << "\n";
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (Index c = 0; c < mesh.n_cells(); ++c) out << "9\n";

  // Vertex values: vertex dofs come first in every space.
  std::vector<double> pressure(static_cast<std::size_t>(n), 0.0);
  if (!dofs.p().empty()) {
    for (Index i = 0; i < n; ++i) pressure[static_cast<std::size_t>(i)] = state.values[dofs.p_dof(i)];
  } else {
    const auto u = state.u(dofs);
    const std::span<const double> uc(u.data(), static_cast<std::size_t>(u.size()));
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    const std::array<Vec2, 4> corners{Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
    for (Index c = 0; c < mesh.n_cells(); ++c) {
      for (int v = 0; v < 4; ++v) {
        const Mat2 grad =
            evaluate_gradient(mesh, dofs.displacement_space(), uc, 2, c, corners[v].x(), corners[v].y());
        const auto node = static_cast<std::size_t>(mesh.cell(c).nodes[v]);
        pressure[node] += scenario.material().lambda * grad.trace();
        ++count[node];
      }
    }
    for (std::size_t i = 0; i < pressure.size(); ++i)
      if (count[i] > 0) pressure[i] /= count[i];
  }

  out << "POINT_DATA " << n << "\n";
  out << "VECTORS u double\n";
  for (Index i = 0; i < n; ++i) out << state.values[dofs.u_dof(i, 0)] << ' ' << state.values[dofs.u_dof(i, 1)] << " 0\n";
  out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (Index i = 0; i < n; ++i) out << state.values[dofs.phi_dof(i)] << "\n";
  out << "SCALARS tau double 1\nLOOKUP_TABLE default\n";
  for (Index i = 0; i < n; ++i) out << (dofs.tau().empty() ? 0.0 : state.values[dofs.tau_dof(i)]) << "\n";
  out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (double v : pressure) out << v << "\n";
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceTable>& tables) {
  out.imbue(std::locale::classic());
  out << "method,nu,h,l2_error,h1_error,l2_order,h1_order\n";
  for (const auto& t : tables)
    for (const auto& r : t.rows)
      out << t.method << ',' << format_double(t.nu) << ',' << format_double(r.h) << ',' << format_double(r.l2_error)
          << ',' << format_double(r.h1_error) << ',' << format_double(r.l2_order) << ','
          << format_double(r.h1_order) << "\n";
}

std::string pairing_name(Pairing p) {
  switch (p) {
    case Pairing::Q1Q1: return "Q1Q1";
    case Pairing::Q2Q1: return "Q2Q1";
    case Pairing::Q2Q1Q1Q1Star: return "Q2Q1Q1Q1*";
  }
  return "?";
}

void write_infsup_csv(std::ostream& out, const std::vector<InfSupReport>& reports) {
  out.imbue(std::locale::classic());
  out << "pairing,coefficient,cells_per_side,h,beta,min_eigenvalue\n";
  for (const auto& rep : reports)
    for (const auto& e : rep.entries)
      out << pairing_name(rep.pairing) << ",\"" << rep.coefficient << "\"," << e.cells_per_side << ','
          << format_double(e.h) << ',' << format_double(e.beta) << ',' << format_double(e.min_eigenvalue) << "\n";
}

void write_sweep_csv(std::ostream& out, std::string_view key, const std::vector<std::pair<double, PeakLoad>>& rows) {
  out.imbue(std::locale::classic());
  out << key << ",peak_load_kN,peak_step,peak_t\n";
  for (const auto& [v, p] : rows)
    out << format_double(v) << ',' << format_double(p.value) << ',' << p.step << ',' << format_double(p.time) << "\n";
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "' for checksumming");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_manifest(const std::filesystem::path& dir, RunManifest m, const std::vector<std::string>& files) {
  for (const auto& f : files) m.checksums[f] = sha256_file(dir / f);
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["version"] = m.version;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["status"] = m.status;
  j["config"] = m.config;
  j["checksums"] = m.checksums;
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

std::string_view version() { return "0.1.0"; }

}  // namespace pfrac

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sqha/constants.hpp"
#include "sqha/io/config.hpp"
#include "sqha/io/csv.hpp"

namespace sqha::io {

inline constexpr std::string_view version = "0.1.0";

struct Provenance {
  double hbar = codata.hbar;
  double k_B = codata.k_B;
  double bohr = codata.bohr;
  double atomic_mass_unit = codata.atomic_mass_unit;
  std::string version{io::version};
  std::uint64_t seed = 0;
  std::string config_hash;

  bool operator==(const Provenance&) const = default;
};

/// JSON summary: {config, results, provenance}.
struct SummaryRecord {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json results = nlohmann::json::object();
  Provenance provenance;

  bool operator==(const SummaryRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const Provenance& p) {
  j = nlohmann::json{{"constants",
                      {{"hbar", p.hbar},
                       {"k_B", p.k_B},
                       {"bohr", p.bohr},
                       {"atomic_mass_unit", p.atomic_mass_unit}}},
                     {"version", p.version},
                     {"seed", p.seed},
                     {"config_hash", p.config_hash}};
}

inline void from_json(const nlohmann::json& j, Provenance& p) {
  const auto& c = j.at("constants");
  c.at("hbar").get_to(p.hbar);
  c.at("k_B").get_to(p.k_B);
  c.at("bohr").get_to(p.bohr);
  c.at("atomic_mass_unit").get_to(p.atomic_mass_unit);
  j.at("version").get_to(p.version);
  j.at("seed").get_to(p.seed);
  j.at("config_hash").get_to(p.config_hash);
}

inline void to_json(nlohmann::json& j, const SummaryRecord& r) {
  j = nlohmann::json{{"config", r.config}, {"results", r.results}, {"provenance", r.provenance}};
}

inline void from_json(const nlohmann::json& j, SummaryRecord& r) {
  r.config = j.at("config");
  r.results = j.at("results");
  j.at("provenance").get_to(r.provenance);
}

inline SummaryRecord make_summary(const ExperimentConfig& cfg, nlohmann::json results) {
  SummaryRecord r;
  for (const auto& [section, keys] : canonical_entries(cfg)) {
    for (const auto& [key, value] : keys) r.config[section][key] = value;
  }
  r.results = std::move(results);
  r.provenance.seed = cfg.seed;
  r.provenance.config_hash = config_hash(cfg);
  return r;
}

inline std::string to_text(const SummaryRecord& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline SummaryRecord parse_summary(std::string_view text) {
  try {
    return nlohmann::json::parse(text).get<SummaryRecord>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed summary: ") + e.what());
  }
}

inline void write_outputs(const SummaryRecord& r, const std::filesystem::path& json_path) {
  write_file_atomically(json_path, to_text(r));
}

}  // namespace sqha::io

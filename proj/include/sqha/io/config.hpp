#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sqha/constants.hpp"
#include "sqha/dynamics.hpp"
#include "sqha/error.hpp"
#include "sqha/potentials_states.hpp"

namespace sqha::io {

enum class ExperimentKind {
  simulate,
  lambda_c,
  lambda_q,
  classify,
  case_lindemann,
  case_helium,
  noise_audit
};
enum class MaterialPreset { generic, helium4 };
enum class PotentialKind { free, harmonic };
enum class StateKind { gaussian, harmonic_ground, pseudo_gaussian, square_well };

/// Every field is either set in the document or falls back to the default
/// listed here; std::nullopt means "derived at run time" (see README).
struct ExperimentConfig {
  // [experiment]
  ExperimentKind kind = ExperimentKind::simulate;
  std::uint64_t seed = 0;
  PotentialKind potential = PotentialKind::harmonic;
  std::optional<double> delta_L;   // m
  std::optional<double> lambda_q;  // m
  // [material]
  std::optional<MaterialPreset> preset;
  std::optional<double> mass;        // kg
  std::optional<double> well_depth;  // J
  std::optional<double> r0;          // m
  std::optional<double> sigma;       // m
  std::optional<double> half_width;  // m
  std::optional<double> depth_factor;
  MassConvention mass_convention = MassConvention::full;
  TruncationConstant truncation = TruncationConstant::paper;
  // [grid]
  std::optional<double> q_min;  // m
  std::optional<double> q_max;  // m
  std::optional<std::int64_t> n_points;
  // [state]
  StateKind state = StateKind::harmonic_ground;
  std::optional<double> center;  // m
  std::optional<double> width;   // m, Gaussian standard deviation
  double velocity = 0.0;         // m/s
  PseudoGaussianKind family = PseudoGaussianKind::power_f;
  std::optional<double> core_width;    // m, sqrt of the core variance
  std::optional<double> lambda_scale;  // m
  double g = 1.4;
  double h = 1.0;
  // [integrator]
  Scheme scheme = Scheme::deterministic_quantum;
  std::optional<double> dt;  // s
  double cfl_safety = 0.5;
  BoundaryCondition boundary = BoundaryCondition::zero_flux;
  double density_floor = 1e-12;
  std::optional<double> t_end;  // s
  std::int64_t output_stride = 10;
  // [noise]
  double theta = 0.0;  // K
  double mobility = 1.0;
  bool conserving = true;
  std::optional<double> lambda_c;  // m
  std::int64_t samples = 10000;
  // [output]
  std::string csv;
  std::string json;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

enum class Quantity { none, mass, length, energy, temperature, time, velocity };

inline std::string_view quantity_name(Quantity q) {
  switch (q) {
    case Quantity::none: return "dimensionless";
    case Quantity::mass: return "mass";
    case Quantity::length: return "length";
    case Quantity::energy: return "energy";
    case Quantity::temperature: return "temperature";
    case Quantity::time: return "time";
    case Quantity::velocity: return "velocity";
  }
  return "?";
}

struct UnitEntry {
  std::string_view symbol;
  Quantity quantity;
  double factor;
};

inline const std::vector<UnitEntry>& unit_table() {
  static const std::vector<UnitEntry> table{
      {"kg", Quantity::mass, 1.0},
      {"u", Quantity::mass, codata.atomic_mass_unit},
      {"m", Quantity::length, 1.0},
      {"nm", Quantity::length, 1e-9},
      {"A", Quantity::length, 1e-10},
      {"Bohr", Quantity::length, codata.bohr},
      {"J", Quantity::energy, 1.0},
      {"eV", Quantity::energy, 1.602176634e-19},
      {"kB", Quantity::energy, codata.k_B},
      {"K", Quantity::temperature, 1.0},
      {"s", Quantity::time, 1.0},
      {"ps", Quantity::time, 1e-12},
      {"fs", Quantity::time, 1e-15},
      {"m/s", Quantity::velocity, 1.0},
  };
  return table;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

/// "<number>[ ]<unit>" converted to SI. Without a unit the number is taken as SI.
inline double parse_quantity(std::string_view text, detail::Quantity q) {
  text = detail::trim(text);
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto r = std::from_chars(first, last, x);
  if (r.ec != std::errc() || r.ptr == first) {
    throw ValidationError("malformed number '" + std::string(text) + "'");
  }
  if (!std::isfinite(x)) throw ValidationError("value must be finite");
  const std::string_view unit = detail::trim(std::string_view(r.ptr, static_cast<std::size_t>(last - r.ptr)));
  if (unit.empty()) return x;
  for (const auto& e : detail::unit_table()) {
    if (e.symbol == unit || (unit == "bohr" && e.symbol == "Bohr")) {
      if (e.quantity != q) {
        throw ValidationError("unit '" + std::string(unit) + "' is not a " +
                              std::string(detail::quantity_name(q)) + " unit");
      }
      return x * e.factor;
    }
  }
  throw ValidationError("unknown unit '" + std::string(unit) + "'");
}

namespace detail {

template <class E>
struct Word {
  std::string_view text;
  E value;
};

template <class I = std::int64_t>
I parse_integer(std::string_view text) {
  text = trim(text);
  I v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec == std::errc::result_out_of_range) {
    throw ValidationError("integer out of range '" + std::string(text) + "'");
  }
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || text.empty()) {
    throw ValidationError("malformed integer '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ValidationError("malformed boolean '" + std::string(text) + "'");
}

template <class E>
E parse_word(std::string_view text, const std::vector<Word<E>>& words) {
  text = trim(text);
  std::string allowed;
  for (const auto& w : words) {
    if (w.text == text) return w.value;
    if (!allowed.empty()) allowed += ", ";
    allowed += w.text;
  }
  throw ValidationError("'" + std::string(text) + "' is not one of: " + allowed);
}

template <class E>
std::string word_of(E v, const std::vector<Word<E>>& words) {
  for (const auto& w : words) {
    if (w.value == v) return std::string(w.text);
  }
  return "?";
}

inline const std::vector<Word<ExperimentKind>> kind_words{
    {"simulate", ExperimentKind::simulate},
    {"lambda_c", ExperimentKind::lambda_c},
    {"lambda_q", ExperimentKind::lambda_q},
    {"classify", ExperimentKind::classify},
    {"case_lindemann", ExperimentKind::case_lindemann},
    {"case_helium", ExperimentKind::case_helium},
    {"noise_audit", ExperimentKind::noise_audit}};
inline const std::vector<Word<MaterialPreset>> preset_words{{"generic", MaterialPreset::generic},
                                                            {"helium4", MaterialPreset::helium4}};
inline const std::vector<Word<PotentialKind>> potential_words{{"free", PotentialKind::free},
                                                              {"harmonic", PotentialKind::harmonic}};
inline const std::vector<Word<StateKind>> state_words{
    {"gaussian", StateKind::gaussian},
    {"harmonic_ground", StateKind::harmonic_ground},
    {"pseudo_gaussian", StateKind::pseudo_gaussian},
    {"square_well", StateKind::square_well}};
inline const std::vector<Word<PseudoGaussianKind>> family_words{
    {"constant_f", PseudoGaussianKind::constant_f},
    {"linear_f", PseudoGaussianKind::linear_f},
    {"log_f", PseudoGaussianKind::log_f},
    {"power_f", PseudoGaussianKind::power_f}};
inline const std::vector<Word<MassConvention>> mass_convention_words{
    {"full", MassConvention::full}, {"reduced", MassConvention::reduced}};
inline const std::vector<Word<TruncationConstant>> truncation_words{
    {"paper", TruncationConstant::paper}, {"lj_zero_crossing", TruncationConstant::lj_zero_crossing}};
inline const std::vector<Word<Scheme>> scheme_words{
    {"deterministic_quantum", Scheme::deterministic_quantum},
    {"stochastic_quantum", Scheme::stochastic_quantum},
    {"classical_limit", Scheme::classical_limit}};
inline const std::vector<Word<BoundaryCondition>> boundary_words{
    {"zero_flux", BoundaryCondition::zero_flux}, {"periodic", BoundaryCondition::periodic}};

/// One documented key: how to read it into the config and how to print it back.
struct KeyBinding {
  std::string_view section;
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

template <class T>
KeyBinding real(std::string_view sec, std::string_view key, Quantity q, T ExperimentConfig::*member) {
  return {sec, key,
          [q, member](ExperimentConfig& c, std::string_view v) { c.*member = parse_quantity(v, q); },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if constexpr (std::is_same_v<T, double>) {
              return format_double(c.*member);
            } else {
              if (!(c.*member)) return std::nullopt;
              return format_double(*(c.*member));
            }
          }};
}

template <class T>
KeyBinding integer(std::string_view sec, std::string_view key, T ExperimentConfig::*member) {
  return {sec, key,
          [member](ExperimentConfig& c, std::string_view v) {
            if constexpr (std::is_same_v<T, std::uint64_t>) {
              if (!trim(v).empty() && trim(v).front() == '-') throw ValidationError("must be >= 0");
              c.*member = parse_integer<std::uint64_t>(v);
            } else {
              c.*member = parse_integer(v);
            }
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if constexpr (std::is_same_v<T, std::optional<std::int64_t>>) {
              if (!(c.*member)) return std::nullopt;
              return std::to_string(*(c.*member));
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <class E, class T>
KeyBinding word(std::string_view sec, std::string_view key, T ExperimentConfig::*member,
                const std::vector<Word<E>>& words) {
  return {sec, key,
          [member, &words](ExperimentConfig& c, std::string_view v) {
            c.*member = parse_word(v, words);
          },
          [member, &words](const ExperimentConfig& c) -> std::optional<std::string> {
            if constexpr (std::is_same_v<T, std::optional<E>>) {
              if (!(c.*member)) return std::nullopt;
              return word_of(*(c.*member), words);
            } else {
              return word_of(c.*member, words);
            }
          }};
}

inline KeyBinding boolean(std::string_view sec, std::string_view key, bool ExperimentConfig::*member) {
  return {sec, key,
          [member](ExperimentConfig& c, std::string_view v) { c.*member = parse_bool(v); },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return c.*member ? "true" : "false";
          }};
}

inline KeyBinding path(std::string_view sec, std::string_view key,
                       std::string ExperimentConfig::*member) {
  return {sec, key,
          [member](ExperimentConfig& c, std::string_view v) { c.*member = std::string(trim(v)); },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if ((c.*member).empty()) return std::nullopt;
            return c.*member;
          }};
}

inline const std::vector<KeyBinding>& key_table() {
  using C = ExperimentConfig;
  static const std::vector<KeyBinding> table{
      word("experiment", "kind", &C::kind, kind_words),
      integer("experiment", "seed", &C::seed),
      word("experiment", "potential", &C::potential, potential_words),
      real("experiment", "delta_L", Quantity::length, &C::delta_L),
      real("experiment", "lambda_q", Quantity::length, &C::lambda_q),
      word("material", "preset", &C::preset, preset_words),
      real("material", "mass", Quantity::mass, &C::mass),
      real("material", "well_depth", Quantity::energy, &C::well_depth),
      real("material", "r0", Quantity::length, &C::r0),
      real("material", "sigma", Quantity::length, &C::sigma),
      real("material", "half_width", Quantity::length, &C::half_width),
      real("material", "depth_factor", Quantity::none, &C::depth_factor),
      word("material", "mass_convention", &C::mass_convention, mass_convention_words),
      word("material", "truncation", &C::truncation, truncation_words),
      real("grid", "q_min", Quantity::length, &C::q_min),
      real("grid", "q_max", Quantity::length, &C::q_max),
      integer("grid", "n_points", &C::n_points),
      word("state", "kind", &C::state, state_words),
      real("state", "center", Quantity::length, &C::center),
      real("state", "width", Quantity::length, &C::width),
      real("state", "velocity", Quantity::velocity, &C::velocity),
      word("state", "family", &C::family, family_words),
      real("state", "core_width", Quantity::length, &C::core_width),
      real("state", "lambda_scale", Quantity::length, &C::lambda_scale),
      real("state", "g", Quantity::none, &C::g),
      real("state", "h", Quantity::none, &C::h),
      word("integrator", "scheme", &C::scheme, scheme_words),
      real("integrator", "dt", Quantity::time, &C::dt),
      real("integrator", "cfl_safety", Quantity::none, &C::cfl_safety),
      word("integrator", "boundary", &C::boundary, boundary_words),
      real("integrator", "density_floor", Quantity::none, &C::density_floor),
      real("integrator", "t_end", Quantity::time, &C::t_end),
      integer("integrator", "output_stride", &C::output_stride),
      real("noise", "theta", Quantity::temperature, &C::theta),
      real("noise", "mobility", Quantity::none, &C::mobility),
      boolean("noise", "conserving", &C::conserving),
      real("noise", "lambda_c", Quantity::length, &C::lambda_c),
      integer("noise", "samples", &C::samples),
      path("output", "csv", &C::csv),
      path("output", "json", &C::json),
  };
  return table;
}

inline const KeyBinding* find_key(std::string_view section, std::string_view key) {
  for (const auto& b : key_table()) {
    if (b.section == section && b.key == key) return &b;
  }
  return nullptr;
}

}  // namespace detail

inline std::string_view to_string(ExperimentKind k) {
  for (const auto& w : detail::kind_words) {
    if (w.value == k) return w.text;
  }
  return "?";
}

/// Range checks that do not depend on the experiment kind.
inline void validate(const ExperimentConfig& c) {
  if (!(c.theta >= 0.0)) throw ValidationError("noise.theta: theta must be ≥ 0");
  if (!(c.mobility > 0.0)) throw ValidationError("noise.mobility: must be positive");
  if (c.lambda_c && !(*c.lambda_c > 0.0)) throw ValidationError("noise.lambda_c: must be positive");
  if (c.samples < 1) throw ValidationError("noise.samples: must be positive");
  if (c.mass && !(*c.mass > 0.0)) throw ValidationError("material.mass: must be positive");
  if (c.well_depth && !(*c.well_depth > 0.0)) {
    throw ValidationError("material.well_depth: must be positive");
  }
  if (c.r0 && !(*c.r0 > 0.0)) throw ValidationError("material.r0: must be positive");
  if (c.half_width && !(*c.half_width > 0.0)) {
    throw ValidationError("material.half_width: must be positive");
  }
  if (c.n_points && *c.n_points < 8) throw ValidationError("grid.n_points: at least 8 required");
  if (c.q_min && c.q_max && !(*c.q_min < *c.q_max)) {
    throw ValidationError("grid: q_min must be below q_max");
  }
  if (c.dt && !(*c.dt > 0.0)) throw ValidationError("integrator.dt: must be positive");
  if (c.t_end && !(*c.t_end >= 0.0)) throw ValidationError("integrator.t_end: must be >= 0");
  if (!(c.cfl_safety > 0.0 && c.cfl_safety <= 1.0)) {
    throw ValidationError("integrator.cfl_safety: must lie in (0, 1]");
  }
  if (!(c.density_floor > 0.0 && c.density_floor < 1.0)) {
    throw ValidationError("integrator.density_floor: must lie in (0, 1)");
  }
  if (c.output_stride < 1) throw ValidationError("integrator.output_stride: must be positive");
  if (c.width && !(*c.width > 0.0)) throw ValidationError("state.width: must be positive");
  if (c.delta_L && !(*c.delta_L > 0.0)) throw ValidationError("experiment.delta_L: must be positive");
  if (c.lambda_q && !(*c.lambda_q > 0.0)) {
    throw ValidationError("experiment.lambda_q: must be positive");
  }
}

/// Sets "section.key" from its text form, as a flag override would.
inline void set_value(ExperimentConfig& c, std::string_view dotted, std::string_view value) {
  const auto dot = dotted.find('.');
  if (dot == std::string_view::npos) {
    throw ValidationError("override '" + std::string(dotted) + "' must be section.key");
  }
  const auto* b = detail::find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
  if (!b) throw ValidationError("unknown key '" + std::string(dotted) + "'");
  try {
    b->set(c, value);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(dotted) + ": " + e.what());
  }
}

/// Line-based document: "[section]" headers, "key = value" pairs, '#' comments.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {}) {
  ExperimentConfig c = std::move(base);
  std::string section;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ValidationError(where + "malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      static constexpr std::string_view sections[] = {"experiment", "material", "grid", "state",
                                                      "integrator", "noise",    "output"};
      bool known = false;
      for (auto s : sections) known = known || s == section;
      if (!known) throw ValidationError(where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + "expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ValidationError(where + "key '" + key + "' outside any section");
    const std::string dotted = section + "." + key;
    const auto* b = detail::find_key(section, key);
    if (!b) throw ValidationError(where + "unknown key '" + dotted + "'");
    if (value.empty()) throw ValidationError(where + "missing value for '" + dotted + "'");
    if (auto it = seen.find(dotted); it != seen.end()) {
      throw ValidationError(where + "duplicate key '" + dotted + "' (first on line " +
                            std::to_string(it->second) + ")");
    }
    seen.emplace(dotted, line_no);
    try {
      b->set(c, value);
    } catch (const ValidationError& e) {
      throw ValidationError(where + dotted + ": " + e.what());
    }
  }
  validate(c);
  return c;
}

/// Canonical text: every set key in table order, SI values, shortest
/// round-trip numbers. parse_config(serialize(c)) == c.
inline std::string serialize(const ExperimentConfig& c) {
  std::ostringstream os;
  std::string_view current;
  for (const auto& b : detail::key_table()) {
    const auto v = b.get(c);
    if (!v) continue;
    if (b.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << b.section << "]\n";
      current = b.section;
    }
    os << b.key << " = " << *v << '\n';
  }
  return os.str();
}

/// Nested section -> key -> canonical text, for echoing into summaries.
inline std::map<std::string, std::map<std::string, std::string>> canonical_entries(
    const ExperimentConfig& c) {
  std::map<std::string, std::map<std::string, std::string>> out;
  for (const auto& b : detail::key_table()) {
    if (auto v = b.get(c)) out[std::string(b.section)][std::string(b.key)] = *v;
  }
  return out;
}

/// Preset defaults overlaid with any explicit [material] keys.
inline MaterialParams resolve_material(const ExperimentConfig& c) {
  const MaterialPreset preset = c.preset.value_or(
      c.kind == ExperimentKind::case_helium ? MaterialPreset::helium4 : MaterialPreset::generic);
  MaterialParams p = preset == MaterialPreset::helium4 ? MaterialParams::helium4()
                                                       : MaterialParams::generic();
  if (c.mass) p.mass = *c.mass;
  if (c.well_depth) p.well_depth = *c.well_depth;
  if (c.r0) p.r0 = *c.r0;
  if (c.half_width) p.half_width = *c.half_width;
  if (c.sigma) {
    p.sigma = *c.sigma;
  } else if (c.r0 || c.half_width) {
    if (p.half_width) p.sigma = p.r0 - *p.half_width;
  }
  if (c.depth_factor) p.depth_factor = *c.depth_factor;
  p.validate();
  return p;
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  static constexpr char digits[] = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

}  // namespace sqha::io

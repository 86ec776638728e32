#include "tdcgl/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "tdcgl/errors.hpp"
#include "tdcgl/snapshot_io.hpp"

namespace tdcgl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("bad number for '" + key + "': " + s);
  return v;
}

int to_int(const std::string& s, const std::string& key) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw FormatError("bad integer for '" + key + "': " + s);
  return v;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename Access>
Field real_field(Access access) {
  return {[access](const RunConfig& c) { return format_double(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v, const std::string& key) { access(c) = to_double(v, key); }};
}

template <typename Access>
Field int_field(Access access) {
  return {[access](const RunConfig& c) { return std::to_string(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v, const std::string& key) { access(c) = to_int(v, key); }};
}

template <typename Access>
Field fn_field(Access access) {
  return {[access](const RunConfig& c) { return format_function(access(const_cast<RunConfig&>(c))); },
          [access](RunConfig& c, const std::string& v, const std::string& key) {
            try {
              access(c) = parse_function(v);
            } catch (const FormatError& e) {
              throw FormatError("bad function for '" + key + "': " + e.what());
            }
          }};
}

#define TDCGL_REAL(key, member) {key, real_field([](RunConfig& c) -> double& { return c.member; })}
#define TDCGL_INT(key, member) {key, int_field([](RunConfig& c) -> int& { return c.member; })}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      TDCGL_INT("grid_n", grid_n),
      TDCGL_REAL("alpha", model.alpha),
      TDCGL_REAL("eta", model.eta),
      {"f", fn_field([](RunConfig& c) -> NonlinearFn& { return c.model.f; })},
      {"g", fn_field([](RunConfig& c) -> NonlinearFn& { return c.model.g; })},
      TDCGL_REAL("ic.A", ic.A),
      TDCGL_REAL("ic.W", ic.W),
      TDCGL_REAL("ic.delta", ic.delta),
      TDCGL_REAL("ic.r0", ic.r0),
      TDCGL_INT("ic.n", ic.n),
      TDCGL_REAL("ic.x0", ic.x0),
      TDCGL_REAL("ic.y0", ic.y0),
      TDCGL_REAL("ic.A_phi", ic.A_phi),
      TDCGL_REAL("ic.center_x", ic.center_x),
      TDCGL_REAL("ic.center_y", ic.center_y),
      TDCGL_REAL("plan.dz", plan.dz),
      TDCGL_INT("plan.n_steps", plan.n_steps),
      TDCGL_INT("plan.snapshot_every", plan.snapshot_every),
      TDCGL_REAL("relax.epsilon", relax.epsilon),
      TDCGL_REAL("relax.initial_bump", relax.initial_bump),
      TDCGL_INT("relax.max_outer_iters", relax.max_outer_iters),
      TDCGL_INT("relax.n_iso_levels", relax.n_iso_levels),
      TDCGL_REAL("relax.histogram_bin_width", relax.histogram_bin_width),
      TDCGL_INT("relax.retrieval_max_iters", relax.retrieval_max_iters),
      TDCGL_REAL("relax.grad_norm_tol", relax.grad_norm_tol),
      TDCGL_INT("dissipation.levels", dissipation.levels),
      TDCGL_REAL("dissipation.dz", dissipation.dz),
      TDCGL_INT("dissipation.steps_per_plane", dissipation.steps_per_plane),
      TDCGL_REAL("dissipation.headroom", dissipation.headroom),
      TDCGL_REAL("threshold.eta_rel", thresholds.eta_rel),
      TDCGL_REAL("threshold.alpha_rel", thresholds.alpha_rel),
      TDCGL_REAL("threshold.sigma_phi", thresholds.sigma_phi),
      TDCGL_REAL("threshold.sigma_grad", thresholds.sigma_grad),
      TDCGL_REAL("threshold.f_amplitude_rel", thresholds.f_amplitude_rel),
      TDCGL_REAL("threshold.f_correlation", thresholds.f_correlation),
  };
  return table;
}

#undef TDCGL_REAL
#undef TDCGL_INT

}  // namespace

void DissipationPlan::validate() const {
  if (levels < 2) throw std::invalid_argument("dissipation.levels must be at least 2");
  if (!(dz > 0.0)) throw std::invalid_argument("dissipation.dz must be positive");
  if (steps_per_plane < 1) throw std::invalid_argument("dissipation.steps_per_plane must be positive");
  if (!(headroom >= 1.0)) throw std::invalid_argument("dissipation.headroom must be at least 1");
}

void RunConfig::validate() const {
  GridSpec::square(grid_n).validate();
  model.validate();
  ic.validate();
  plan.validate();
  relax.validate();
  dissipation.validate();
}

std::string format_function(const NonlinearFn& fn) {
  switch (fn.kind()) {
    case NonlinearFn::Kind::zero:
      return "zero";
    case NonlinearFn::Kind::sine_scaled:
      return "sine_scaled " + format_double(fn.amplitude());
    case NonlinearFn::Kind::power:
      return "power " + format_double(fn.coefficient()) + " " + format_double(fn.exponent());
    case NonlinearFn::Kind::tabulated: {
      std::string s = "table ";
      for (std::size_t k = 0; k < fn.xs().size(); ++k) {
        if (k) s += ',';
        s += format_double(fn.xs()[k]) + ":" + format_double(fn.ys()[k]);
      }
      return s;
    }
  }
  return "zero";
}

NonlinearFn parse_function(const std::string& text) {
  const std::vector<std::string> w = split_ws(text);
  if (w.empty()) throw FormatError("empty function");
  if (w[0] == "zero" && w.size() == 1) return NonlinearFn::zero();
  if (w[0] == "sine_scaled" && w.size() == 2) return NonlinearFn::sine_scaled(to_double(w[1], "sine_scaled"));
  if (w[0] == "power" && w.size() == 3) return NonlinearFn::power(to_double(w[1], "power"), to_double(w[2], "power"));
  if (w[0] == "table" && w.size() == 2) {
    std::vector<double> xs, ys;
    std::istringstream in(w[1]);
    for (std::string item; std::getline(in, item, ',');) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw FormatError("table entry without ':': " + item);
      xs.push_back(to_double(item.substr(0, colon), "table"));
      ys.push_back(to_double(item.substr(colon + 1), "table"));
    }
    try {
      return NonlinearFn::tabulated(std::move(xs), std::move(ys));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what());
    }
  }
  throw FormatError("unrecognized function '" + text + "'");
}

std::string serialize(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(cfg) + "\n";
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  std::map<std::string, const Field*> lookup;
  for (const auto& [key, field] : fields()) lookup[key] = &field;
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw FormatError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw FormatError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    it->second->set(cfg, value, key);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  ReadAudit::record(path);
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << serialize(cfg);
  if (!out) throw FormatError("write failed for " + path);
}

}  // namespace tdcgl

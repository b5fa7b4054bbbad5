#include "budtrack/config.hpp"

#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "budtrack/io.hpp"

namespace budtrack {

namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("bad boolean value: " + v);
}

using Setter = std::function<void(AppConfig&, const std::string&)>;

std::map<std::string, Setter> build_setters() {
  std::map<std::string, Setter> s;
  auto D = [&s](const std::string& key, auto get) {
    s[key] = [get](AppConfig& c, const std::string& v) { get(c) = std::stod(v); };
  };
  auto I = [&s](const std::string& key, auto get) {
    s[key] = [get](AppConfig& c, const std::string& v) { get(c) = std::stoi(v); };
  };
  auto B = [&s](const std::string& key, auto get) {
    s[key] = [get](AppConfig& c, const std::string& v) { get(c) = parse_bool(v); };
  };

  s["sim.seed"] = [](AppConfig& c, const std::string& v) {
    c.sim.seed = std::stoull(v);
  };
  I("sim.n_plants", [](AppConfig& c) -> int& { return c.sim.n_plants; });
  I("sim.frames_per_plant",
    [](AppConfig& c) -> int& { return c.sim.frames_per_plant; });
  D("sim.dt_days", [](AppConfig& c) -> double& { return c.sim.dt_days; });
  D("sim.dt_jitter", [](AppConfig& c) -> double& { return c.sim.dt_jitter; });
  D("sim.entanglement",
    [](AppConfig& c) -> double& { return c.sim.entanglement; });
  D("sim.occlusion_prob",
    [](AppConfig& c) -> double& { return c.sim.occlusion_prob; });
  D("sim.emerge_window_lo",
    [](AppConfig& c) -> double& { return c.sim.emerge_window_lo; });
  D("sim.emerge_window_hi",
    [](AppConfig& c) -> double& { return c.sim.emerge_window_hi; });
  I("sim.min_branches", [](AppConfig& c) -> int& { return c.sim.min_branches; });
  I("sim.max_branches", [](AppConfig& c) -> int& { return c.sim.max_branches; });
  D("sim.sway_amp", [](AppConfig& c) -> double& { return c.sim.sway_amp; });
  D("sim.base_up_rate",
    [](AppConfig& c) -> double& { return c.sim.base_up_rate; });
  B("sim.render_masks",
    [](AppConfig& c) -> bool& { return c.sim.render_masks; });
  I("sim.raster_size", [](AppConfig& c) -> int& { return c.sim.raster_size; });
  I("sim.stroke_px", [](AppConfig& c) -> int& { return c.sim.stroke_px; });

  D("spatial.sigma_d", [](AppConfig& c) -> double& { return c.spatial.sigma_d; });
  D("spatial.sigma_a", [](AppConfig& c) -> double& { return c.spatial.sigma_a; });

  D("temporal.tau_temporal",
    [](AppConfig& c) -> double& { return c.temporal.tau_temporal; });
  D("temporal.beta_absent",
    [](AppConfig& c) -> double& { return c.temporal.beta_absent; });
  D("temporal.lambda_vert",
    [](AppConfig& c) -> double& { return c.temporal.lambda_vert; });
  D("temporal.eps_tol",
    [](AppConfig& c) -> double& { return c.temporal.eps_tol; });
  D("temporal.sigma_m",
    [](AppConfig& c) -> double& { return c.temporal.sigma_m; });
  I("temporal.topk_global",
    [](AppConfig& c) -> int& { return c.temporal.topk_global; });

  D("gate.alpha_new", [](AppConfig& c) -> double& { return c.gate.alpha_new; });
  D("gate.alpha_exist",
    [](AppConfig& c) -> double& { return c.gate.alpha_exist; });
  D("gate.alpha_min", [](AppConfig& c) -> double& { return c.gate.alpha_min; });
  D("gate.alpha_max", [](AppConfig& c) -> double& { return c.gate.alpha_max; });
  D("gate.tau_spatial",
    [](AppConfig& c) -> double& { return c.gate.tau_spatial; });
  D("gate.tau_temporal",
    [](AppConfig& c) -> double& { return c.gate.tau_temporal; });
  D("gate.unmatched_logit",
    [](AppConfig& c) -> double& { return c.gate.unmatched_logit; });
  I("gate.hidden", [](AppConfig& c) -> int& { return c.gate.mlp.hidden; });

  I("net.embed_dim", [](AppConfig& c) -> int& { return c.net.embed_dim; });
  I("net.heads", [](AppConfig& c) -> int& { return c.net.heads; });
  I("net.ffn_dim", [](AppConfig& c) -> int& { return c.net.ffn_dim; });
  D("net.learning_rate",
    [](AppConfig& c) -> double& { return c.net.learning_rate; });
  I("net.epochs", [](AppConfig& c) -> int& { return c.net.epochs; });
  s["net.seed"] = [](AppConfig& c, const std::string& v) {
    c.net.seed = std::stoull(v);
  };

  D("split.train", [](AppConfig& c) -> double& { return c.split.train; });
  D("split.val", [](AppConfig& c) -> double& { return c.split.val; });
  D("split.test", [](AppConfig& c) -> double& { return c.split.test; });

  s["tracker.mode"] = [](AppConfig& c, const std::string& v) {
    parse_track_mode(v);  // validates
    c.mode = v;
  };
  B("tracker.use_gravitropism",
    [](AppConfig& c) -> bool& { return c.use_gravitropism; });
  B("tracker.drop_history",
    [](AppConfig& c) -> bool& { return c.drop_history; });
  D("tracker.match_radius",
    [](AppConfig& c) -> double& { return c.match_radius; });
  D("train.gate_lr", [](AppConfig& c) -> double& { return c.gate_lr; });
  I("train.gate_epochs", [](AppConfig& c) -> int& { return c.gate_epochs; });
  return s;
}

}  // namespace

AppConfig parse_config(const std::string& text) {
  static const std::map<std::string, Setter> setters = build_setters();
  AppConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key " + key);
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for " + key);
    }
  }
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_file(path));
}

std::string serialize_config(const AppConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "[sim]\n"
      << "seed = " << c.sim.seed << "\n"
      << "n_plants = " << c.sim.n_plants << "\n"
      << "frames_per_plant = " << c.sim.frames_per_plant << "\n"
      << "dt_days = " << c.sim.dt_days << "\n"
      << "dt_jitter = " << c.sim.dt_jitter << "\n"
      << "entanglement = " << c.sim.entanglement << "\n"
      << "occlusion_prob = " << c.sim.occlusion_prob << "\n"
      << "emerge_window_lo = " << c.sim.emerge_window_lo << "\n"
      << "emerge_window_hi = " << c.sim.emerge_window_hi << "\n"
      << "min_branches = " << c.sim.min_branches << "\n"
      << "max_branches = " << c.sim.max_branches << "\n"
      << "sway_amp = " << c.sim.sway_amp << "\n"
      << "base_up_rate = " << c.sim.base_up_rate << "\n"
      << "render_masks = " << (c.sim.render_masks ? "true" : "false") << "\n"
      << "raster_size = " << c.sim.raster_size << "\n"
      << "stroke_px = " << c.sim.stroke_px << "\n\n";
  out << "[spatial]\n"
      << "sigma_d = " << c.spatial.sigma_d << "\n"
      << "sigma_a = " << c.spatial.sigma_a << "\n\n";
  out << "[temporal]\n"
      << "tau_temporal = " << c.temporal.tau_temporal << "\n"
      << "beta_absent = " << c.temporal.beta_absent << "\n"
      << "lambda_vert = " << c.temporal.lambda_vert << "\n"
      << "eps_tol = " << c.temporal.eps_tol << "\n"
      << "sigma_m = " << c.temporal.sigma_m << "\n"
      << "topk_global = " << c.temporal.topk_global << "\n\n";
  out << "[gate]\n"
      << "alpha_new = " << c.gate.alpha_new << "\n"
      << "alpha_exist = " << c.gate.alpha_exist << "\n"
      << "alpha_min = " << c.gate.alpha_min << "\n"
      << "alpha_max = " << c.gate.alpha_max << "\n"
      << "tau_spatial = " << c.gate.tau_spatial << "\n"
      << "tau_temporal = " << c.gate.tau_temporal << "\n"
      << "unmatched_logit = " << c.gate.unmatched_logit << "\n"
      << "hidden = " << c.gate.mlp.hidden << "\n\n";
  out << "[net]\n"
      << "embed_dim = " << c.net.embed_dim << "\n"
      << "heads = " << c.net.heads << "\n"
      << "ffn_dim = " << c.net.ffn_dim << "\n"
      << "learning_rate = " << c.net.learning_rate << "\n"
      << "epochs = " << c.net.epochs << "\n"
      << "seed = " << c.net.seed << "\n\n";
  out << "[split]\n"
      << "train = " << c.split.train << "\n"
      << "val = " << c.split.val << "\n"
      << "test = " << c.split.test << "\n\n";
  out << "[tracker]\n"
      << "mode = " << c.mode << "\n"
      << "use_gravitropism = " << (c.use_gravitropism ? "true" : "false") << "\n"
      << "drop_history = " << (c.drop_history ? "true" : "false") << "\n"
      << "match_radius = " << c.match_radius << "\n\n";
  out << "[train]\n"
      << "gate_lr = " << c.gate_lr << "\n"
      << "gate_epochs = " << c.gate_epochs << "\n";
  return out.str();
}

TrackerOptions tracker_options(const AppConfig& cfg) {
  TrackerOptions o;
  o.mode = parse_track_mode(cfg.mode);
  o.spatial = cfg.spatial;
  o.temporal = cfg.temporal;
  o.gate = cfg.gate;
  o.use_gravitropism = cfg.use_gravitropism;
  o.drop_history = cfg.drop_history;
  return o;
}

}  // namespace budtrack

#include "mfq/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mfq {

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, p);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw std::invalid_argument("bad number: " + s);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "# initial_k,initial_x,initial_y,horizon\n# " +
                    std::to_string(traj.initial().k) + "," + format_double(traj.initial().x) +
                    "," + format_double(traj.initial().y) + "," +
                    format_double(traj.horizon()) + "\ntime,kind,pre_k,pre_x,pre_y\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const State pre = traj.pre_state(i);
    out += format_double(traj.event_time(i));
    out += traj.event_kind(i) == JumpType::Arrival ? ",A," : ",S,";
    out += std::to_string(pre.k) + "," + format_double(pre.x) + "," + format_double(pre.y) +
           "\n";
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.size() < 3 || rows[0].rfind("# ", 0) != 0 || rows[1].rfind("# ", 0) != 0)
    throw std::invalid_argument("trajectory_from_csv: malformed header");
  const auto head = split(rows[1].substr(2), ',');
  if (head.size() != 4) throw std::invalid_argument("trajectory_from_csv: malformed header");
  const State initial = make_state(static_cast<int>(parse_double(head[0])),
                                   parse_double(head[1]), parse_double(head[2]));
  Trajectory traj(initial, parse_double(head[3]));
  for (std::size_t r = 3; r < rows.size(); ++r) {
    if (rows[r].empty()) continue;
    const auto f = split(rows[r], ',');
    if (f.size() != 5) throw std::invalid_argument("trajectory_from_csv: malformed row");
    traj.append(parse_double(f[0]), f[1] == "A" ? JumpType::Arrival : JumpType::Service);
  }
  return traj;
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::ordered_json j;
  j["initial"] = {{"k", traj.initial().k}, {"x", traj.initial().x}, {"y", traj.initial().y}};
  j["horizon"] = traj.horizon();
  auto& events = j["events"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const State pre = traj.pre_state(i);
    events.push_back({{"time", traj.event_time(i)},
                      {"kind", traj.event_kind(i) == JumpType::Arrival ? "A" : "S"},
                      {"pre", {{"k", pre.k}, {"x", pre.x}, {"y", pre.y}}}});
  }
  return j.dump(2) + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const State initial = make_state(j.at("initial").at("k").get<int>(),
                                   j.at("initial").at("x").get<double>(),
                                   j.at("initial").at("y").get<double>());
  Trajectory traj(initial, j.at("horizon").get<double>());
  for (const auto& ev : j.at("events"))
    traj.append(ev.at("time").get<double>(),
                ev.at("kind").get<std::string>() == "A" ? JumpType::Arrival
                                                        : JumpType::Service);
  return traj;
}

std::string flow_to_csv(const MeasureFlow& flow, const CellScheme& scheme) {
  std::string out = "# cell_width," + format_double(scheme.width) +
                    "\ngrid_time,k,x_bin,y_bin,weight\n";
  for (std::size_t i = 0; i < flow.grid().size(); ++i) {
    const std::string t = format_double(flow.grid()[i]);
    for (const auto& [cell, w] : flow.measures()[i].binned(scheme))
      out += t + "," + std::to_string(cell.k) + "," + std::to_string(cell.ix) + "," +
             std::to_string(cell.iy) + "," + format_double(w) + "\n";
  }
  return out;
}

MeasureFlow flow_from_csv(const std::string& text, CellScheme* scheme_out) {
  const auto rows = lines_of(text);
  if (rows.size() < 3 || rows[0].rfind("# cell_width,", 0) != 0)
    throw std::invalid_argument("flow_from_csv: malformed header");
  CellScheme scheme{parse_double(rows[0].substr(13))};
  if (scheme_out) *scheme_out = scheme;

  std::vector<double> grid;
  std::vector<EmpiricalMeasure> measures;
  std::vector<EmpiricalMeasure::Atom> atoms;
  auto flush = [&] {
    if (atoms.empty()) return;
    double total = 0.0;
    for (const auto& [s, w] : atoms) total += w;
    for (auto& [s, w] : atoms) w /= total;
    measures.emplace_back(std::move(atoms));
    atoms.clear();
  };
  for (std::size_t r = 2; r < rows.size(); ++r) {
    if (rows[r].empty()) continue;
    const auto f = split(rows[r], ',');
    if (f.size() != 5) throw std::invalid_argument("flow_from_csv: malformed row");
    const double t = parse_double(f[0]);
    if (grid.empty() || t != grid.back()) {
      flush();
      grid.push_back(t);
    }
    const int k = static_cast<int>(parse_double(f[1]));
    const double x = (parse_double(f[2]) + 0.5) * scheme.width;
    const double y = k > 0 ? (parse_double(f[3]) + 0.5) * scheme.width : 0.0;
    atoms.emplace_back(make_state(k, x, y), parse_double(f[4]));
  }
  flush();
  return MeasureFlow(std::move(grid), std::move(measures));
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["kernel"] = {{"id", cfg.kernel_id}, {"params", cfg.kernel_params}};
  j["mode"] = cfg.mode;
  j["particles"] = cfg.particles;
  j["horizon"] = cfg.horizon;
  j["grid_step"] = cfg.grid_step;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["suites"] = cfg.suites;
  j["initial"] = {{"k", cfg.initial_k}, {"x", cfg.initial_x}, {"y", cfg.initial_y}};
  j["cell_width"] = cfg.cell_width;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  cfg.kernel_id = j.at("kernel").at("id").get<std::string>();
  cfg.kernel_params = j.at("kernel").at("params").get<std::map<std::string, double>>();
  cfg.mode = j.at("mode").get<std::string>();
  cfg.particles = j.at("particles").get<std::size_t>();
  cfg.horizon = j.at("horizon").get<double>();
  if (j.contains("grid_step")) cfg.grid_step = j.at("grid_step").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("suites")) cfg.suites = j.at("suites").get<std::vector<std::string>>();
  if (j.contains("initial")) {
    cfg.initial_k = j.at("initial").at("k").get<int>();
    cfg.initial_x = j.at("initial").at("x").get<double>();
    cfg.initial_y = j.at("initial").at("y").get<double>();
  }
  if (j.contains("cell_width")) cfg.cell_width = j.at("cell_width").get<double>();
  return cfg;
}

SimMode parse_mode(const std::string& mode_text) {
  if (mode_text == "self") return SelfConsistentMode{};
  if (mode_text.rfind("frozen:", 0) == 0)
    return FrozenDelayMode{parse_double(mode_text.substr(7))};
  if (mode_text.rfind("flow:", 0) == 0)
    return GivenFlowMode{flow_from_csv(read_file(mode_text.substr(5)))};
  throw std::invalid_argument("parse_mode: unknown mode '" + mode_text + "'");
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> issues;
  if (cfg.particles < 1) issues.push_back("particles: must be >= 1");
  if (!(cfg.horizon > 0.0)) issues.push_back("horizon: must be positive");
  if (cfg.grid_step < 0.0) issues.push_back("grid_step: must be nonnegative");
  if (!(cfg.cell_width > 0.0)) issues.push_back("cell_width: must be positive");
  if (cfg.initial_k < 0 || cfg.initial_x < 0.0 || cfg.initial_y < 0.0)
    issues.push_back("initial: coordinates must be nonnegative");
  if (cfg.initial_k == 0 && cfg.initial_y != 0.0)
    issues.push_back("initial: y must be 0 when k == 0");
  try {
    (void)Kernel::parse(cfg.kernel_id, cfg.kernel_params);
  } catch (const std::exception& e) {
    issues.push_back(std::string("kernel: ") + e.what());
  }
  if (cfg.mode.rfind("frozen:", 0) == 0) {
    double h = 0.0;
    try {
      h = parse_double(cfg.mode.substr(7));
    } catch (const std::exception&) {
      issues.push_back("mode: malformed frozen delay");
    }
    if (h > 0.0) {
      const double step = cfg.grid_step > 0.0 ? cfg.grid_step : 0.01 * cfg.horizon;
      if (step > h + 1e-12) issues.push_back("grid_step: must be <= the frozen delay h");
    } else {
      issues.push_back("mode: frozen delay h must be positive");
    }
  } else if (cfg.mode != "self" && cfg.mode.rfind("flow:", 0) != 0) {
    issues.push_back("mode: must be self, frozen:<h>, or flow:<file>");
  }
  const std::vector<std::string> known = {"simulate", "dynkin",    "girsanov",
                                          "picard",   "tightness", "mm1-validate",
                                          "all"};
  for (const auto& s : cfg.suites)
    if (std::find(known.begin(), known.end(), s) == known.end())
      issues.push_back("suites: unknown suite '" + s + "'");
  return issues;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // hash the canonical serialization with the output directory blanked, so
  // the hash identifies the experiment rather than where it was written
  ExperimentConfig canon = cfg;
  canon.out_dir.clear();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(canon))));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace mfq

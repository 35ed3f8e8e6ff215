#ifndef MFQ_IO_HPP
#define MFQ_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfq/measure.hpp"
#include "mfq/simulate.hpp"
#include "mfq/state.hpp"

namespace mfq {

// Trajectory renderings: header with the initial state and horizon, then one
// record per event with time, kind (A|S), and the pre-jump state. Field order
// is fixed and doubles are printed round-trip exact, so serializing the same
// trajectory twice yields identical bytes.
std::string trajectory_to_csv(const Trajectory& traj);
std::string trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text);
Trajectory trajectory_from_json(const std::string& text);

// Flow rendering against a declared cell scheme: a header line with the cell
// width, then rows (grid_time, k, x_bin, y_bin, weight). The measures are
// compressed to the scheme before writing, so the round trip reproduces the
// compressed flow exactly.
std::string flow_to_csv(const MeasureFlow& flow, const CellScheme& scheme);
MeasureFlow flow_from_csv(const std::string& text, CellScheme* scheme_out = nullptr);

struct ExperimentConfig {
  std::string kernel_id = "const";
  std::map<std::string, double> kernel_params = {{"a", 1.0}, {"b", 2.0}};
  std::string mode = "self";  // "self" | "frozen:<h>" | "flow:<file>"
  std::size_t particles = 1000;
  double horizon = 1.0;
  double grid_step = 0.0;  // 0 -> 0.01 * horizon
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::vector<std::string> suites = {"all"};
  // initial condition: point mass
  int initial_k = 0;
  double initial_x = 0.0;
  double initial_y = 0.0;
  double cell_width = 0.25;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// Empty iff the config is runnable; each entry names the field and constraint.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// Build the simulator configuration for a config; requires an already parsed
// mode (use parse_mode for "flow:<file>" indirection).
SimMode parse_mode(const std::string& mode_text);

std::uint64_t fnv1a64(const std::string& bytes);

// Hash of the canonical serialization; stamped into every output file.
std::string config_hash(const ExperimentConfig& cfg);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Round-trip exact decimal rendering of a double (shortest form).
std::string format_double(double v);

}  // namespace mfq

#endif

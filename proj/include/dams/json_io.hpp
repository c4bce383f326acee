// JSON serialization for the exchange formats: finite joint distributions,
// moment sets, linear models, and confidence-bound reports.
#ifndef DAMS_JSON_IO_HPP
#define DAMS_JSON_IO_HPP

#include <json.hpp>
#include <string>

#include "dams/adapt.hpp"
#include "dams/discrete.hpp"
#include "dams/moments.hpp"

namespace dams {

// {"d": int, "points": [{"x": [...], "y": num, "p": num}, ...]}
nlohmann::json to_json(const DiscreteJoint& dist);
DiscreteJoint discrete_joint_from_json(const nlohmann::json& j);

// {"xtx": [[...]], "xty": [...] (optional), "q": [...], "n": int}
nlohmann::json to_json(const MomentSet& ms);
MomentSet moment_set_from_json(const nlohmann::json& j);

// {"beta": [...], "method": "...", "dropped": [...]}
nlohmann::json to_json(const LinearModel& model);
LinearModel linear_model_from_json(const nlohmann::json& j);

// {"r_hat": [...], "half_width": [...], "unreliable": [...],
//  "delta": ..., "n_source": ..., "n_target": ...}
nlohmann::json to_json(const BoundReport& report);

// Parses a file; malformed JSON raises UsageError with the parser message.
nlohmann::json read_json_file(const std::string& path);

// Pretty-prints with a trailing newline; write is atomic.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace dams

#endif  // DAMS_JSON_IO_HPP

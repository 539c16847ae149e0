#ifndef SSNN_NETIO_HPP
#define SSNN_NETIO_HPP

#include <iosfwd>
#include <string>

#include "ssnn/network.hpp"

namespace ssnn {

// Line-oriented network description: one "key value..." per line, one
// "layer <kind> <key> <value>..." per layer, '#' comments. Unknown keys are
// errors. See README for the schema.
std::string serialize_network_spec(const NetworkSpec& spec);
NetworkSpec parse_network_spec(std::istream& in);
NetworkSpec parse_network_spec_string(const std::string& text);
NetworkSpec load_network_spec(const std::string& path);
void save_network_spec(const NetworkSpec& spec, const std::string& path);

// Flat binary tensor container: magic, JSON header (name/dtype/shape/offset
// per tensor), then raw little-endian float64 data. Weights, tau_param and
// v_threshold all travel in one file, so a checkpoint is a single artifact.
void save_params(const NetworkSpec& spec, const NetworkParams& params, const std::string& path);
NetworkParams load_params(const NetworkSpec& spec, const std::string& path);

// FaultMap text files (format: fault.hpp serialize/parse).
class FaultMap;
void save_fault_map(const FaultMap& map, const std::string& path);
FaultMap load_fault_map(const std::string& path);

} // namespace ssnn

#endif

#pragma once

#include "hazardlab/mechanism_dist.hpp"

#include <json.hpp>

#include <string>

namespace hazardlab {

using json = nlohmann::ordered_json;

// Encoders produce the canonical form; decoders validate and report the JSON
// path of the first offending field in the InputError message.

json encode_shape(const HazardShape& shape);
HazardShape decode_shape(const json& j, const std::string& path);

json encode_distribution(const MechanismDistribution& dist);
MechanismDistribution decode_distribution(const json& j, const std::string& path);

json encode_law(const PositiveLaw& law);
PositiveLaw decode_law(const json& j, const std::string& path);

json encode_vector(const vector_t& v);
vector_t decode_vector(const json& j, const std::string& path);
matrix_t decode_matrix(const json& j, const std::string& path);
CovariateValue decode_covariate(const json& j, const std::string& path);

/// Field lookup that reports `path.key` when the key is missing.
const json& require_field(const json& obj, const char* key, const std::string& path);
double decode_number(const json& j, const std::string& path);

}  // namespace hazardlab

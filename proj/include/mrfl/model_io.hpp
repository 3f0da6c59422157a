#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mrfl/model.hpp"

namespace mrfl {

// Model file layout:
//   {"n": 3, "arities": [2, 2, 3], "r": 2,
//    "tensors": [{"vertices": [0, 1], "shape": [2, 2], "values": [...]}]}
// Vertices are 0-based; values are row-major with the last vertex fastest.
nlohmann::json model_to_json(const MarkovRandomField& model);
MarkovRandomField model_from_json(const nlohmann::json& j);

void save_model(const MarkovRandomField& model, const std::string& path);
MarkovRandomField load_model(const std::string& path);

}  // namespace mrfl

#include "mrfl/model_io.hpp"

#include <fstream>
#include <stdexcept>

namespace mrfl {

nlohmann::json model_to_json(const MarkovRandomField& model) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const CliqueTensor& t : model.tensors()) {
    tensors.push_back({{"vertices", t.vertices()}, {"shape", t.shape()}, {"values", t.values()}});
  }
  return {{"n", model.num_nodes()},
          {"arities", model.arities()},
          {"r", model.order_bound()},
          {"tensors", std::move(tensors)}};
}

MarkovRandomField model_from_json(const nlohmann::json& j) {
  const int n = j.at("n").get<int>();
  auto arities = j.at("arities").get<std::vector<int>>();
  if (static_cast<int>(arities.size()) != n) {
    throw std::invalid_argument("model file: arities length does not match n");
  }
  std::vector<CliqueTensor> tensors;
  for (const auto& t : j.at("tensors")) {
    tensors.emplace_back(t.at("vertices").get<std::vector<int>>(),
                         t.at("shape").get<std::vector<int>>(),
                         t.at("values").get<std::vector<double>>());
  }
  return MarkovRandomField(std::move(arities), j.at("r").get<int>(), std::move(tensors));
}

void save_model(const MarkovRandomField& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << model_to_json(model).dump(2) << '\n';
}

MarkovRandomField load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return model_from_json(nlohmann::json::parse(in));
}

}  // namespace mrfl

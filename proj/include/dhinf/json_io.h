#pragma once

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "dhinf/model.h"

namespace dhinf {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major nested arrays. An empty array yields a 0x0 matrix.
MatrixXd MatrixFromJson(const nlohmann::json& j, const char* name);
nlohmann::json MatrixToJson(const MatrixXd& M);

/// Plant document: "E","A","Bw","Bu","C","Dw" plus an optional "uncertainty"
/// object with "MA","NA","MB","NB","MC","NC","MD","ND","s". Missing
/// uncertainty keys mean zero factors; a missing "Bu" means a zero column.
/// Throws ParseError (malformed document) or DimensionError.
UncertainPlant PlantFromJson(const nlohmann::json& j);
nlohmann::json PlantToJson(const UncertainPlant& plant);

UncertainPlant LoadPlant(const std::filesystem::path& path);
nlohmann::json LoadJson(const std::filesystem::path& path);

}  // namespace dhinf

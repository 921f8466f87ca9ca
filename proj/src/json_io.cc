#include "dhinf/json_io.h"

#include <fstream>

namespace dhinf {

MatrixXd MatrixFromJson(const nlohmann::json& j, const char* name) {
  if (!j.is_array()) {
    throw ParseError(std::string(name) + ": expected a nested array");
  }
  if (j.empty()) return MatrixXd(0, 0);
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  MatrixXd M(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ParseError(std::string(name) + ": ragged or non-array row");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        throw ParseError(std::string(name) + ": non-numeric entry");
      }
      M(i, k) = j[i][k].get<double>();
    }
  }
  return M;
}

nlohmann::json MatrixToJson(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

MatrixXd Required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing key \"") + key + "\"");
  return MatrixFromJson(j.at(key), key);
}

MatrixXd Optional(const nlohmann::json& j, const char* key) {
  return j.contains(key) ? MatrixFromJson(j.at(key), key) : MatrixXd();
}

}  // namespace

UncertainPlant PlantFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("plant document must be an object");
  DescriptorPlant plant =
      DescriptorPlant::Make(Required(j, "E"), Required(j, "A"),
                            Required(j, "Bw"), Optional(j, "Bu"),
                            Required(j, "C"), Required(j, "Dw"));
  if (!j.contains("uncertainty")) return UncertainPlant::Certain(std::move(plant));

  const nlohmann::json& u = j.at("uncertainty");
  if (!u.is_object()) throw ParseError("\"uncertainty\" must be an object");
  MatrixXd f[8];
  const char* keys[8] = {"MA", "NA", "MB", "NB", "MC", "NC", "MD", "ND"};
  for (int i = 0; i < 8; ++i) f[i] = Optional(u, keys[i]);

  int s = 0;
  if (u.contains("s")) {
    if (!u.at("s").is_number_integer()) throw ParseError("\"s\" must be an integer");
    s = u.at("s").get<int>();
  } else {
    // Infer from the first factor present: M factors have s columns.
    for (int i = 0; i < 8 && s == 0; ++i) {
      if (f[i].size() > 0) s = static_cast<int>(i % 2 == 0 ? f[i].cols() : f[i].rows());
    }
  }
  return UncertainPlant::Make(std::move(plant), s, f[0], f[1], f[2], f[3], f[4],
                              f[5], f[6], f[7]);
}

nlohmann::json PlantToJson(const UncertainPlant& u) {
  const DescriptorPlant& p = u.plant;
  nlohmann::json j = {{"E", MatrixToJson(p.E)},   {"A", MatrixToJson(p.A)},
                      {"Bw", MatrixToJson(p.Bw)}, {"Bu", MatrixToJson(p.Bu)},
                      {"C", MatrixToJson(p.C)},   {"Dw", MatrixToJson(p.Dw)}};
  if (u.s > 0) {
    j["uncertainty"] = {{"s", u.s},
                        {"MA", MatrixToJson(u.MA)}, {"NA", MatrixToJson(u.NA)},
                        {"MB", MatrixToJson(u.MB)}, {"NB", MatrixToJson(u.NB)},
                        {"MC", MatrixToJson(u.MC)}, {"NC", MatrixToJson(u.NC)},
                        {"MD", MatrixToJson(u.MD)}, {"ND", MatrixToJson(u.ND)}};
  }
  return j;
}

nlohmann::json LoadJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

UncertainPlant LoadPlant(const std::filesystem::path& path) {
  return PlantFromJson(LoadJson(path));
}

}  // namespace dhinf

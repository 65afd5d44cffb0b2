#include "sdet/complex_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdet {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  return matrix_from_json(j, rows, cols);
}

Mat matrix_from_json(const json& j, int rows, int cols) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  // a 0-row block may be written as [] regardless of its column count
  if (rows == 0 && j.empty()) return Mat(0, cols);
  if (static_cast<int>(j.size()) != rows)
    throw std::invalid_argument("matrix has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      throw std::invalid_argument("matrix row " + std::to_string(i) + " has wrong length");
    for (int c = 0; c < cols; ++c) m(i, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

const GradedMap& ComplexFile::map(const std::string& name) const {
  auto it = maps.find(name);
  if (it == maps.end()) throw std::invalid_argument("complex file has no map named '" + name + "'");
  return it->second;
}

json graded_map_to_json(const GradedMap& m) {
  json blocks = json::array();
  for (const auto& b : m.blocks()) blocks.push_back(matrix_to_json(b));
  return {{"shift", m.shift()}, {"blocks", blocks}};
}

GradedMap graded_map_from_json(const GradedVectorSpace& space, const json& j) {
  const int shift = j.at("shift").get<int>();
  const json& jb = j.at("blocks");
  const int n = space.top_degree();
  if (!jb.is_array() || static_cast<int>(jb.size()) != n + 1)
    throw std::invalid_argument("map needs " + std::to_string(n + 1) + " blocks");
  std::vector<Mat> blocks;
  for (int k = 0; k <= n; ++k)
    blocks.push_back(matrix_from_json(jb[static_cast<std::size_t>(k)], space.dim(k + shift), space.dim(k)));
  return GradedMap(space, shift, std::move(blocks));
}

json complex_file_to_json(const ComplexFile& c) {
  json maps = json::object();
  for (const auto& [name, m] : c.maps) maps[name] = graded_map_to_json(m);
  return {{"dims", c.space.dims()}, {"maps", maps}};
}

ComplexFile complex_file_from_json(const json& j) {
  ComplexFile c{GradedVectorSpace(j.at("dims").get<std::vector<int>>()), {}};
  for (auto it = j.at("maps").begin(); it != j.at("maps").end(); ++it)
    c.maps.emplace(it.key(), graded_map_from_json(c.space, it.value()));
  return c;
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace sdet

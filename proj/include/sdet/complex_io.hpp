#pragma once

#include <map>
#include <string>

#include "sdet/graded.hpp"
#include "sdet/report.hpp"

namespace sdet {

// Matrices are row lists of [re, im] pairs (plain numbers are accepted as real).
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j, int rows, int cols);
Mat matrix_from_json(const json& j);

// Complex file: {"dims": [...], "maps": {"d": {"shift": 1, "blocks": [...]}, ...}}
struct ComplexFile {
  GradedVectorSpace space;
  std::map<std::string, GradedMap> maps;

  const GradedMap& map(const std::string& name) const;
};

json graded_map_to_json(const GradedMap& m);
GradedMap graded_map_from_json(const GradedVectorSpace& space, const json& j);

json complex_file_to_json(const ComplexFile& c);
ComplexFile complex_file_from_json(const json& j);

json load_json_file(const std::string& path);

}  // namespace sdet

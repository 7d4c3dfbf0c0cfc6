#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruelle/maps.hpp"
#include "ruelle/toral.hpp"

namespace ruelle::io {

using json = nlohmann::json;

// "doubling" or {"degree": d, "trig": [{"j": 1, "a": 0.1, "b": 0.0}, ...]}.
ExpandingCircleMap parse_map(const json& j);
json map_to_json(const ExpandingCircleMap& map);

// "cos", "sin", "const", "coboundary" or {"terms": [{"k": 1, "cos": 1.0, "sin": 0.0}, ...]}.
TrigObservable parse_observable(const json& j);

// "cat" or [[a11, a12], [a21, a22]].
ToralAutomorphism parse_automorphism(const json& j);

// "cos1" (cos 2 pi y1), "cos2", "const" or {"terms": [{"k": [k1, k2], "cos": amp}, ...]}.
TrigObservable2D parse_observable2d(const json& j);

json pair_to_json(const StandardPair& p);
json family_to_json(const StandardFamily& f);

// Shortest round-trip decimal representation.
std::string format_double(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Write to path.tmp and rename over path.
void atomic_write(const std::string& path, const std::string& content);

// JSON header line, then column-major little-endian doubles.
void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m, const json& header);

}  // namespace ruelle::io

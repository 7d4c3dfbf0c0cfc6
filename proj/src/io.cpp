#include "ruelle/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ruelle::io {

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument("unknown field '" + key + "' in " + what);
  }
}

}  // namespace

ExpandingCircleMap parse_map(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "doubling") return doubling_map();
    throw std::invalid_argument("unknown map shorthand '" + s + "'");
  }
  if (!j.is_object()) throw std::invalid_argument("map must be a string or an object");
  require_keys(j, {"degree", "trig"}, "map");
  const int degree = j.value("degree", 2);
  std::vector<TrigTerm> terms;
  if (j.contains("trig")) {
    for (const auto& t : j.at("trig")) {
      require_keys(t, {"j", "a", "b"}, "trig term");
      terms.push_back({t.at("j").get<int>(), t.value("a", 0.0), t.value("b", 0.0)});
    }
  }
  return build_expanding_map(degree, terms);
}

json map_to_json(const ExpandingCircleMap& map) {
  json terms = json::array();
  for (const auto& t : map.terms()) terms.push_back({{"j", t.j}, {"a", t.a}, {"b", t.b}});
  return {{"degree", map.degree()}, {"trig", terms}};
}

TrigObservable parse_observable(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "cos") return TrigObservable::cosine(1);
    if (s == "sin") return TrigObservable::sine(1);
    if (s == "const") return TrigObservable::constant(1.0);
    if (s == "coboundary") return TrigObservable::cosine(1) + TrigObservable::cosine(2, -1.0);
    throw std::invalid_argument("unknown observable shorthand '" + s + "'");
  }
  if (!j.is_object()) throw std::invalid_argument("observable must be a string or an object");
  require_keys(j, {"terms"}, "observable");
  TrigObservable obs = TrigObservable::constant(0.0);
  for (const auto& t : j.at("terms")) {
    require_keys(t, {"k", "cos", "sin"}, "observable term");
    const int k = t.at("k").get<int>();
    if (k < 0) throw std::invalid_argument("observable frequency must be >= 0");
    if (k == 0) {
      obs = obs + TrigObservable::constant(t.value("cos", 0.0));
      continue;
    }
    obs = obs + TrigObservable::cosine(k, t.value("cos", 0.0)) + TrigObservable::sine(k, t.value("sin", 0.0));
  }
  return obs;
}

ToralAutomorphism parse_automorphism(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "cat") return cat_map();
    throw std::invalid_argument("unknown automorphism shorthand");
  }
  if (!j.is_array() || j.size() != 2 || j[0].size() != 2 || j[1].size() != 2)
    throw std::invalid_argument("automorphism must be a 2x2 integer array");
  return toral_eigen({j[0][0].get<long long>(), j[0][1].get<long long>(), j[1][0].get<long long>(),
                      j[1][1].get<long long>()});
}

TrigObservable2D parse_observable2d(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "cos1") return TrigObservable2D::cosine({1, 0});
    if (s == "cos2") return TrigObservable2D::cosine({0, 1});
    if (s == "const") return TrigObservable2D::cosine({0, 0});
    throw std::invalid_argument("unknown 2D observable shorthand '" + s + "'");
  }
  if (!j.is_object()) throw std::invalid_argument("2D observable must be a string or an object");
  require_keys(j, {"terms"}, "2D observable");
  std::map<Lattice, std::complex<double>> coeffs;
  for (const auto& t : j.at("terms")) {
    require_keys(t, {"k", "cos"}, "2D observable term");
    const Lattice k{t.at("k")[0].get<long long>(), t.at("k")[1].get<long long>()};
    const double amp = t.value("cos", 0.0);
    for (const auto& [kk, c] : TrigObservable2D::cosine(k, amp).coeffs()) coeffs[kk] += c;
  }
  return TrigObservable2D(coeffs, true);
}

json pair_to_json(const StandardPair& p) {
  return {{"b", p.b}, {"x", {p.x[0], p.x[1]}}, {"nodes", p.nodes}, {"log_h", p.log_h}, {"a", p.a}};
}

json family_to_json(const StandardFamily& f) {
  json pairs = json::array();
  for (const auto& p : f.pairs) pairs.push_back(pair_to_json(p));
  return {{"pairs", pairs}, {"masses", f.masses}};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != header_.size()) throw std::invalid_argument("CSV row width mismatch");
  rows_.push_back(cells);
}

void CsvTable::add_row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  s.reserve(cells.size());
  for (double v : cells) s.push_back(format_double(v));
  add_row(s);
}

std::string CsvTable::str() const {
  const auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  std::ostringstream out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << quote(cells[i]);
    out << "\r\n";
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp);
    f << content;
    if (!f) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

void write_matrix_binary(const std::string& path, const Eigen::MatrixXd& m, const json& header) {
  json h = header;
  h["rows"] = m.rows();
  h["cols"] = m.cols();
  h["layout"] = "column-major float64 little-endian";
  std::string content = h.dump() + "\n";
  content.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  atomic_write(path, content);
}

}  // namespace ruelle::io

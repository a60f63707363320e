#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "latclass/em.hpp"
#include "latclass/model.hpp"
#include "latclass/table.hpp"

namespace latclass {

// ---------------------------------------------------------------------------
// A tiny ordered JSON emitter. Doubles are printed with %.17g so that equal
// configurations always produce byte-identical artifacts; non-finite values
// become null.
// ---------------------------------------------------------------------------

class JsonValue {
 public:
  enum class Type { null, boolean, integer, number, string, array, object };

  JsonValue() : type_(Type::null) {}
  JsonValue(bool b) : type_(Type::boolean), bool_(b) {}
  JsonValue(int v) : type_(Type::integer), int_(v) {}
  JsonValue(long long v) : type_(Type::integer), int_(v) {}
  JsonValue(std::uint64_t v) : type_(Type::integer), int_(static_cast<long long>(v)) {}
  JsonValue(double v) : type_(Type::number), num_(v) {}
  JsonValue(const char* s) : type_(Type::string), str_(s) {}
  JsonValue(std::string s) : type_(Type::string), str_(std::move(s)) {}

  static JsonValue array() {
    JsonValue v;
    v.type_ = Type::array;
    return v;
  }
  static JsonValue object() {
    JsonValue v;
    v.type_ = Type::object;
    return v;
  }

  JsonValue& push(JsonValue v) {
    items_.push_back(std::move(v));
    return *this;
  }
  JsonValue& set(const std::string& key, JsonValue v) {
    fields_.emplace_back(key, std::move(v));
    return *this;
  }

  template <typename Seq>
  static JsonValue number_array(const Seq& seq) {
    JsonValue a = array();
    for (const auto& v : seq) a.push(JsonValue(static_cast<double>(v)));
    return a;
  }
  template <typename Seq>
  static JsonValue int_array(const Seq& seq) {
    JsonValue a = array();
    for (const auto& v : seq) a.push(JsonValue(static_cast<long long>(v)));
    return a;
  }

  std::string dump() const {
    std::string out;
    write(out);
    return out;
  }

 private:
  static void escape(const std::string& s, std::string& out) {
    out += '"';
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
      }
    }
    out += '"';
  }

  void write(std::string& out) const {
    switch (type_) {
      case Type::null: out += "null"; break;
      case Type::boolean: out += bool_ ? "true" : "false"; break;
      case Type::integer: out += std::to_string(int_); break;
      case Type::number: {
        if (!std::isfinite(num_)) {
          out += "null";
        } else {
          char buf[40];
          std::snprintf(buf, sizeof(buf), "%.17g", num_);
          out += buf;
        }
        break;
      }
      case Type::string: escape(str_, out); break;
      case Type::array: {
        out += '[';
        for (std::size_t i = 0; i < items_.size(); ++i) {
          if (i) out += ',';
          items_[i].write(out);
        }
        out += ']';
        break;
      }
      case Type::object: {
        out += '{';
        for (std::size_t i = 0; i < fields_.size(); ++i) {
          if (i) out += ',';
          escape(fields_[i].first, out);
          out += ':';
          fields_[i].second.write(out);
        }
        out += '}';
        break;
      }
    }
  }

  Type type_;
  bool bool_ = false;
  long long int_ = 0;
  double num_ = 0.0;
  std::string str_;
  std::vector<JsonValue> items_;
  std::vector<std::pair<std::string, JsonValue>> fields_;
};

// ---------------------------------------------------------------------------
// Table ingestion: JSON ({"dims": [...], "counts": [...]}) or, for 2-way
// tables, CSV rows of comma-separated integers. '#' lines are comments.
// ---------------------------------------------------------------------------

namespace detail {

inline long long json_int(const nlohmann::json& v) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  throw parse_error(parse_error::kind::malformed, "expected an integer");
}

}  // namespace detail

inline ContingencyTable load_table_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(parse_error::kind::malformed, std::string("bad JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dims") || !doc.contains("counts") ||
      !doc["dims"].is_array() || !doc["counts"].is_array())
    throw parse_error(parse_error::kind::malformed,
                      "table document needs 'dims' and 'counts' arrays");
  std::vector<int> dims;
  for (const auto& v : doc["dims"]) dims.push_back(static_cast<int>(detail::json_int(v)));
  std::vector<long long> counts;
  for (const auto& v : doc["counts"]) counts.push_back(detail::json_int(v));
  return ContingencyTable(std::move(dims), std::move(counts));
}

inline ContingencyTable load_table_csv(const std::string& text) {
  std::vector<std::vector<long long>> rows;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<long long> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size())
          throw parse_error(parse_error::kind::malformed, "non-integer cell: " + cell);
        row.push_back(v);
      } catch (const parse_error&) {
        throw;
      } catch (const std::exception&) {
        throw parse_error(parse_error::kind::malformed, "non-integer cell: " + cell);
      }
    }
    if (row.empty()) throw parse_error(parse_error::kind::malformed, "empty CSV row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw parse_error(parse_error::kind::malformed, "empty table document");
  const int cols = static_cast<int>(rows[0].size());
  std::vector<long long> counts;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != cols)
      throw parse_error(parse_error::kind::shape_mismatch, "ragged CSV rows");
    counts.insert(counts.end(), r.begin(), r.end());
  }
  return ContingencyTable({static_cast<int>(rows.size()), cols}, std::move(counts));
}

inline ContingencyTable load_table(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    throw parse_error(parse_error::kind::malformed, "empty table document");
  return text[first] == '{' ? load_table_json(text) : load_table_csv(text);
}

inline ContingencyTable load_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(parse_error::kind::malformed, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_table(buf.str());
}

inline JsonValue table_to_json(const ContingencyTable& t) {
  JsonValue obj = JsonValue::object();
  obj.set("dims", JsonValue::int_array(t.dims()));
  obj.set("counts", JsonValue::int_array(t.counts()));
  return obj;
}

inline std::string serialize_table(const ContingencyTable& t) {
  return table_to_json(t).dump();
}

// ---------------------------------------------------------------------------
// Parameter points and fit results (full redundant simplex coordinates)
// ---------------------------------------------------------------------------

inline JsonValue param_to_json(const ParamPoint& theta) {
  JsonValue obj = JsonValue::object();
  JsonValue lam = JsonValue::array();
  for (int h = 0; h < theta.lambda.size(); ++h) lam.push(JsonValue(theta.lambda[h]));
  obj.set("lambda", std::move(lam));
  JsonValue cond = JsonValue::array();
  for (const auto& m : theta.cond) {
    JsonValue axis = JsonValue::array();
    for (int h = 0; h < m.cols(); ++h) {
      JsonValue col = JsonValue::array();
      for (int i = 0; i < m.rows(); ++i) col.push(JsonValue(m(i, h)));
      axis.push(std::move(col));
    }
    cond.push(std::move(axis));
  }
  obj.set("cond", std::move(cond));
  return obj;
}

inline ParamPoint param_from_json(const nlohmann::json& doc) {
  ParamPoint theta;
  const auto& lam = doc.at("lambda");
  theta.lambda.resize(lam.size());
  for (std::size_t h = 0; h < lam.size(); ++h) theta.lambda[h] = lam[h].get<double>();
  for (const auto& axis : doc.at("cond")) {
    const int r = static_cast<int>(axis.size());
    const int d = static_cast<int>(axis.at(0).size());
    Eigen::MatrixXd m(d, r);
    for (int h = 0; h < r; ++h)
      for (int i = 0; i < d; ++i) m(i, h) = axis[h][i].get<double>();
    theta.cond.push_back(std::move(m));
  }
  return theta;
}

inline JsonValue fit_result_to_json(const FitResult& fr) {
  JsonValue obj = JsonValue::object();
  obj.set("algorithm", fr.algorithm);
  obj.set("loglik", fr.loglik);
  obj.set("iterations", fr.iterations);
  obj.set("converged", fr.converged);
  obj.set("gradient_norm", fr.gradient_norm);
  obj.set("classification", to_string(fr.classification));
  obj.set("hessian_condition_number", fr.hessian_condition);
  obj.set("theta", param_to_json(fr.theta));
  JsonValue fitted = JsonValue::object();
  fitted.set("dims", JsonValue::int_array(fr.fitted.dims));
  fitted.set("p", JsonValue::number_array(fr.fitted.p));
  obj.set("fitted", std::move(fitted));
  return obj;
}

// "p/q" when v is within 1e-9 of a rational with denominator <= 120, else a
// plain decimal; used by the human-readable critical-point summaries.
inline std::string format_ratio(double v) {
  for (int q = 1; q <= 120; ++q) {
    const double pq = v * q;
    const double p = std::round(pq);
    if (std::abs(pq - p) <= 1e-9 * q * std::max(1.0, std::abs(v))) {
      const long long pi = static_cast<long long>(p);
      const long long g = std::gcd(std::abs(pi), static_cast<long long>(q));
      const long long pn = pi / g, qn = q / g;
      if (qn == 1) return std::to_string(pn);
      return std::to_string(pn) + "/" + std::to_string(qn);
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace latclass

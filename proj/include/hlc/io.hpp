#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <utility>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/evaluation.hpp"
#include "hlc/geometry.hpp"
#include "hlc/projection.hpp"

namespace hlc {

using Json = nlohmann::json;

namespace detail {

inline const Json& require_field(const Json& j, const std::string& key,
                                 const std::string& ptr) {
  if (!j.is_object())
    throw ParseError("expected object at " + (ptr.empty() ? "/" : ptr));
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError("missing field '" + key + "' at " +
                     (ptr.empty() ? "/" : ptr));
  return *it;
}

inline double as_number(const Json& j, const std::string& ptr) {
  if (!j.is_number())
    throw ParseError("expected number at " + ptr);
  const double v = j.get<double>();
  if (!std::isfinite(v))
    throw ParseError("non-finite number at " + ptr);
  return v;
}

inline int as_int(const Json& j, const std::string& ptr) {
  if (!j.is_number_integer())
    throw ParseError("expected integer at " + ptr);
  return j.get<int>();
}

inline Vec as_vector(const Json& j, const std::string& ptr) {
  if (!j.is_array())
    throw ParseError("expected array at " + ptr);
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v(static_cast<int>(i)) = as_number(j[i], ptr + "/" + std::to_string(i));
  return v;
}

inline Mat as_matrix(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty())
    throw ParseError("expected non-empty array of rows at " + ptr);
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0)
    throw ParseError("expected non-empty row arrays at " + ptr + "/0");
  Mat m(static_cast<int>(j.size()), static_cast<int>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string rptr = ptr + "/" + std::to_string(i);
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError("ragged or non-array row at " + rptr);
    for (size_t k = 0; k < cols; ++k)
      m(static_cast<int>(i), static_cast<int>(k)) =
          as_number(j[i][k], rptr + "/" + std::to_string(k));
  }
  return m;
}

inline Json vector_to_json(const Vec& v) {
  Json j = Json::array();
  for (int i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline Json matrix_to_json(const Mat& m) {
  Json j = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

}  // namespace detail

inline Json body_to_json(const ConvexBody& K) {
  Json j;
  j["p"] = K.dim();
  if (auto* b = std::get_if<ConvexBody::Ball>(&K.payload())) {
    j["kind"] = "ball";
    j["radius"] = b->radius;
  } else if (auto* b = std::get_if<ConvexBody::Box>(&K.payload())) {
    j["kind"] = "box";
    j["halfwidths"] = detail::vector_to_json(b->halfwidths);
  } else if (auto* b = std::get_if<ConvexBody::LinearImage>(&K.payload())) {
    j["kind"] = "linear_image";
    j["matrix"] = detail::matrix_to_json(b->matrix);
    j["base"] = body_to_json(*b->base);
  } else {
    const auto& h = std::get<ConvexBody::PointHull>(K.payload());
    j["kind"] = "point_hull";
    j["vertices"] = detail::matrix_to_json(h.vertices);
  }
  return j;
}

inline ConvexBody body_from_json(const Json& j, const std::string& ptr = "") {
  const Json& kind_j = detail::require_field(j, "kind", ptr);
  if (!kind_j.is_string())
    throw ParseError("expected string at " + ptr + "/kind");
  const std::string kind = kind_j.get<std::string>();
  const int p = detail::as_int(detail::require_field(j, "p", ptr), ptr + "/p");
  try {
    if (kind == "ball") {
      const double r = detail::as_number(
          detail::require_field(j, "radius", ptr), ptr + "/radius");
      return ConvexBody::ball(p, r);
    }
    if (kind == "box") {
      Vec h = detail::as_vector(detail::require_field(j, "halfwidths", ptr),
                                ptr + "/halfwidths");
      if (h.size() != p)
        throw ParseError("halfwidths length != p at " + ptr + "/halfwidths");
      return ConvexBody::box(h);
    }
    if (kind == "linear_image") {
      Mat A = detail::as_matrix(detail::require_field(j, "matrix", ptr),
                                ptr + "/matrix");
      if (A.rows() != p || A.cols() != p)
        throw ParseError("matrix is not p x p at " + ptr + "/matrix");
      ConvexBody base = body_from_json(
          detail::require_field(j, "base", ptr), ptr + "/base");
      return ConvexBody::linear_image(A, std::move(base));
    }
    if (kind == "point_hull") {
      Mat V = detail::as_matrix(detail::require_field(j, "vertices", ptr),
                                ptr + "/vertices");
      if (V.cols() != p)
        throw ParseError("vertex dimension != p at " + ptr + "/vertices");
      return ConvexBody::point_hull(V);
    }
  } catch (const InputError& e) {
    throw ParseError("invalid body at " + (ptr.empty() ? "/" : ptr) + ": " +
                     e.what());
  }
  throw ParseError("unknown body kind '" + kind + "' at " + ptr + "/kind");
}

inline Json generator_to_json(const PiecewiseLinearConcave& g, int p,
                              double log_volume) {
  Json j;
  j["breakpoints"] = detail::vector_to_json(g.breakpoints);
  j["values"] = detail::vector_to_json(g.values);
  j["p"] = p;
  j["log_volume"] = log_volume;
  return j;
}

// a generator together with the (p, log_volume) context it was fitted for
struct ParsedGenerator {
  PiecewiseLinearConcave gen;
  int p = 0;
  double log_volume = 0.0;
};

inline ParsedGenerator generator_from_json(const Json& j,
                                           const std::string& ptr) {
  ParsedGenerator out;
  out.gen.breakpoints = detail::as_vector(
      detail::require_field(j, "breakpoints", ptr), ptr + "/breakpoints");
  out.gen.values = detail::as_vector(detail::require_field(j, "values", ptr),
                                     ptr + "/values");
  out.p = detail::as_int(detail::require_field(j, "p", ptr), ptr + "/p");
  out.log_volume = detail::as_number(
      detail::require_field(j, "log_volume", ptr), ptr + "/log_volume");
  if (out.p < 1) throw ParseError("p must be >= 1 at " + ptr + "/p");
  try {
    validate_generator(out.gen);
  } catch (const InputError& e) {
    throw ParseError("invalid generator at " + ptr + ": " + e.what());
  }
  return out;
}

inline Json model_to_json(const Model& m, std::uint64_t seed = 0,
                          const std::string& mode = "") {
  Json j;
  j["p"] = m.p;
  j["mu"] = detail::vector_to_json(m.mu);
  j["body"] = body_to_json(m.body);
  j["log_volume"] = m.log_volume;
  j["generator"] = generator_to_json(m.generator, m.p, m.log_volume);
  j["meta"] = Json{{"seed", seed},
                   {"mode", mode},
                   {"volume_is_mc", m.volume_is_mc},
                   {"volume_std_error", m.volume_std_error}};
  return j;
}

inline Model model_from_json(const Json& j) {
  Model m;
  m.p = detail::as_int(detail::require_field(j, "p", ""), "/p");
  m.mu = detail::as_vector(detail::require_field(j, "mu", ""), "/mu");
  m.body = body_from_json(detail::require_field(j, "body", ""), "/body");
  m.log_volume = detail::as_number(
      detail::require_field(j, "log_volume", ""), "/log_volume");
  ParsedGenerator pg = generator_from_json(
      detail::require_field(j, "generator", ""), "/generator");
  if (pg.p != m.p)
    throw ParseError("generator p disagrees with model p at /generator/p");
  if (std::fabs(pg.log_volume - m.log_volume) >
      1e-12 * std::max(1.0, std::fabs(m.log_volume)))
    throw ParseError(
        "generator log_volume disagrees with model log_volume at "
        "/generator/log_volume");
  m.generator = std::move(pg.gen);
  if (j.contains("meta") && j["meta"].is_object()) {
    const Json& meta = j["meta"];
    if (meta.contains("volume_is_mc") && meta["volume_is_mc"].is_boolean())
      m.volume_is_mc = meta["volume_is_mc"].get<bool>();
    if (meta.contains("volume_std_error"))
      m.volume_std_error =
          detail::as_number(meta["volume_std_error"], "/meta/volume_std_error");
  }
  try {
    validate_model(m);
  } catch (const InputError& e) {
    throw ParseError(std::string("model invariant violated: ") + e.what());
  }
  return m;
}

// p/log_volume are only consulted for the knots variant, whose embedded
// generator schema carries the (p, log_volume) it was normalized for
inline Json family_to_json(const GeneratorFamily& f, int p = 0,
                           double log_volume = 0.0) {
  Json j;
  switch (f.kind) {
    case GeneratorFamily::Kind::kGauss: j["kind"] = "gauss"; break;
    case GeneratorFamily::Kind::kUnif:
      j["kind"] = "unif";
      j["r0"] = f.r0;
      break;
    case GeneratorFamily::Kind::kExp: j["kind"] = "exp"; break;
    case GeneratorFamily::Kind::kKnots:
      if (p < 1)
        throw InputError(
            "family_to_json: knots serialization needs the target (p, "
            "log_volume)");
      j["kind"] = "knots";
      j["generator"] = generator_to_json(f.knots, p, log_volume);
      break;
  }
  return j;
}

inline GeneratorFamily family_from_json(const Json& j,
                                        const std::string& ptr) {
  const Json& kind_j = detail::require_field(j, "kind", ptr);
  if (!kind_j.is_string())
    throw ParseError("expected string at " + ptr + "/kind");
  const std::string kind = kind_j.get<std::string>();
  if (kind == "gauss") return GeneratorFamily::gauss();
  if (kind == "exp") return GeneratorFamily::exponential();
  if (kind == "unif") {
    const double r0 = detail::as_number(detail::require_field(j, "r0", ptr),
                                        ptr + "/r0");
    try {
      return GeneratorFamily::unif(r0);
    } catch (const InputError& e) {
      throw ParseError("invalid family at " + ptr + ": " + e.what());
    }
  }
  if (kind == "knots")
    return GeneratorFamily::from_knots(
        generator_from_json(detail::require_field(j, "generator", ptr),
                            ptr + "/generator")
            .gen);
  throw ParseError("unknown family kind '" + kind + "' at " + ptr + "/kind");
}

// {"family":{...}, "body":{...}, "mu":[...], "mc_budget"?, "seed"?}
inline TruthSpec truth_from_json(const Json& j) {
  const Json& fam_j = detail::require_field(j, "family", "");
  GeneratorFamily fam = family_from_json(fam_j, "/family");
  ConvexBody body =
      body_from_json(detail::require_field(j, "body", ""), "/body");
  Vec mu = detail::as_vector(detail::require_field(j, "mu", ""), "/mu");
  if (fam.kind == GeneratorFamily::Kind::kKnots) {
    const Json& gj = detail::require_field(fam_j, "generator", "/family");
    const int gp = detail::as_int(
        detail::require_field(gj, "p", "/family/generator"),
        "/family/generator/p");
    if (gp != body.dim())
      throw ParseError(
          "family generator p disagrees with body dimension at "
          "/family/generator/p");
  }
  int budget = 100000;
  std::uint64_t seed = 0;
  if (j.contains("mc_budget"))
    budget = detail::as_int(j["mc_budget"], "/mc_budget");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ParseError("expected integer at /seed");
    seed = j["seed"].get<std::uint64_t>();
  }
  try {
    return make_truth(std::move(fam), std::move(body), std::move(mu), budget,
                      seed);
  } catch (const InputError& e) {
    throw ParseError(std::string("invalid truth spec: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + path);
}

// numeric CSV, headerless or with one header line; NaN/inf rejected
inline Mat read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    bool parse_ok = true;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const char* s = tok.c_str();
      char* endp = nullptr;
      const double v = std::strtod(s, &endp);
      while (endp && *endp == ' ') ++endp;
      if (endp == s || (endp && *endp != '\0')) {
        parse_ok = false;
        break;
      }
      if (!std::isfinite(v)) {
        throw ParseError(path + ": non-finite value at line " +
                         std::to_string(lineno));
      }
      row.push_back(v);
    }
    if (!parse_ok) {
      if (first_content) {
        first_content = false;  // one header line allowed
        continue;
      }
      throw ParseError(path + ": unparsable value at line " +
                       std::to_string(lineno));
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path + ": inconsistent column count at line " +
                       std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<int>(i), static_cast<int>(k)) = rows[i][k];
  return m;
}

inline std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_matrix_csv(const std::string& path, const Mat& m,
                             const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open " + path + " for writing");
  if (!header.empty()) {
    if (static_cast<int>(header.size()) != m.cols())
      throw InputError("csv header width does not match matrix");
    for (size_t k = 0; k < header.size(); ++k)
      out << (k ? "," : "") << header[k];
    out << '\n';
  }
  for (int i = 0; i < m.rows(); ++i) {
    for (int k = 0; k < m.cols(); ++k)
      out << (k ? "," : "") << format_float(m(i, k));
    out << '\n';
  }
  if (!out) throw InputError("failed writing " + path);
}

}  // namespace hlc

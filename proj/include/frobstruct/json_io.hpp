#pragma once

// Wire formats for the batch front end. A chart is {"p", "vars", "laurent"?},
// a module adds {"level", "rank", "actions"} where actions maps "var:l" to a
// rank-by-rank matrix of polynomial strings (the theta matrix of the basis
// generator D_var<p^l>), and an indigenous candidate adds "line" and
// optionally "delta". Serialization uses insertion-ordered objects and the
// canonical polynomial text form throughout, so equal data produces equal
// bytes.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <frobstruct/chart.hpp>
#include <frobstruct/dmod.hpp>
#include <frobstruct/indigenous.hpp>
#include <frobstruct/polymat.hpp>

namespace frobstruct {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& json_field(const Json& j, const char* name,
                              const char* who) {
  const auto it = j.find(name);
  if (it == j.end())
    throw std::invalid_argument(std::string(who) + ": missing field \"" +
                                name + "\"");
  return *it;
}

}  // namespace detail

inline ChartPtr chart_from_json(const Json& j) {
  const std::int64_t p =
      detail::json_field(j, "p", "chart").get<std::int64_t>();
  const Json& jv = detail::json_field(j, "vars", "chart");
  if (!jv.is_array() || jv.empty())
    throw std::invalid_argument("chart: \"vars\" must be a nonempty array");
  std::vector<std::string> vars;
  for (const Json& v : jv) vars.push_back(v.get<std::string>());
  std::vector<bool> laurent(vars.size(), false);
  if (j.contains("laurent")) {
    for (const Json& v : j["laurent"]) {
      const std::string name = v.get<std::string>();
      bool found = false;
      for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i] == name) {
          laurent[i] = true;
          found = true;
        }
      if (!found)
        throw std::invalid_argument("chart: laurent name " + name +
                                    " is not a chart variable");
    }
  }
  return make_chart(p, std::move(vars), std::move(laurent));
}

inline Json chart_to_json(const ChartPtr& c) {
  Json j = Json::object();
  j["p"] = c->p();
  j["vars"] = c->vars();
  Json lau = Json::array();
  for (std::size_t i = 0; i < c->dim(); ++i)
    if (c->laurent(i)) lau.push_back(c->var_name(i));
  if (!lau.empty()) j["laurent"] = lau;
  return j;
}

inline PolyMat matrix_from_json(const ChartPtr& c, const Json& j,
                                const char* who) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string(who) +
                                ": matrix must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0)
    throw std::invalid_argument(std::string(who) +
                                ": matrix rows must be nonempty arrays");
  PolyMat m(c, rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw std::invalid_argument(std::string(who) + ": ragged matrix");
    for (std::size_t k = 0; k < cols; ++k)
      m.at(i, k) = parse_poly(c, j[i][k].get<std::string>());
  }
  return m;
}

inline Json matrix_to_json(const PolyMat& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t k = 0; k < m.cols(); ++k)
      row.push_back(m.at(i, k).to_string());
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<RingElem> section_from_json(const ChartPtr& c,
                                               const Json& j,
                                               const char* who) {
  if (!j.is_array())
    throw std::invalid_argument(std::string(who) + ": expected an array of "
                                "polynomial strings");
  std::vector<RingElem> out;
  out.reserve(j.size());
  for (const Json& s : j) out.push_back(parse_poly(c, s.get<std::string>()));
  return out;
}

inline Json section_to_json(const std::vector<RingElem>& v) {
  Json out = Json::array();
  for (const RingElem& f : v) out.push_back(f.to_string());
  return out;
}

inline DMod dmod_from_json(const Json& j) {
  const ChartPtr c = chart_from_json(j);
  const int level = detail::json_field(j, "level", "module").get<int>();
  const std::size_t rank =
      detail::json_field(j, "rank", "module").get<std::size_t>();
  const Json& actions = detail::json_field(j, "actions", "module");
  std::vector<std::vector<PolyMat>> gens;
  for (std::size_t var = 0; var < c->dim(); ++var) {
    std::vector<PolyMat> per_var;
    for (int l = 0; l <= level; ++l) {
      const std::string key = c->var_name(var) + ":" + std::to_string(l);
      const auto it = actions.find(key);
      if (it == actions.end())
        throw std::invalid_argument("module: missing action \"" + key + "\"");
      PolyMat m = matrix_from_json(c, *it, "module");
      if (m.rows() != rank || m.cols() != rank)
        throw std::invalid_argument("module: action \"" + key +
                                    "\" is not rank x rank");
      per_var.push_back(std::move(m));
    }
    gens.push_back(std::move(per_var));
  }
  return DMod(c, level, rank, std::move(gens));
}

inline Json dmod_to_json(const DMod& m) {
  Json j = chart_to_json(m.chart());
  j["level"] = m.level();
  j["rank"] = m.rank();
  Json actions = Json::object();
  for (std::size_t var = 0; var < m.chart()->dim(); ++var)
    for (int l = 0; l <= m.level(); ++l)
      actions[m.chart()->var_name(var) + ":" + std::to_string(l)] =
          matrix_to_json(m.gen(var, l));
  j["actions"] = std::move(actions);
  return j;
}

inline IndigenousCandidate indigenous_from_json(const Json& j) {
  DMod m = dmod_from_json(j);
  std::vector<RingElem> line = section_from_json(
      m.chart(), detail::json_field(j, "line", "candidate"), "line");
  return IndigenousCandidate(std::move(m), std::move(line));
}

inline AffineIndigenousCandidate affine_from_json(const Json& j) {
  DMod m = dmod_from_json(j);
  const ChartPtr c = m.chart();
  std::vector<RingElem> line = section_from_json(
      c, detail::json_field(j, "line", "candidate"), "line");
  std::vector<RingElem> delta = section_from_json(
      c, detail::json_field(j, "delta", "candidate"), "delta");
  return AffineIndigenousCandidate(std::move(m), std::move(line),
                                   std::move(delta));
}

inline Json candidate_to_json(const IndigenousCandidate& c) {
  Json j = dmod_to_json(c.module);
  j["line"] = section_to_json(c.line);
  return j;
}

inline Json candidate_to_json(const AffineIndigenousCandidate& c) {
  Json j = dmod_to_json(c.module);
  j["line"] = section_to_json(c.line);
  j["delta"] = section_to_json(c.delta);
  return j;
}

}  // namespace frobstruct

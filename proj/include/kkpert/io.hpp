#pragma once

// JSON problem files and reports. Matrices are row-major arrays of rows, each entry an
// explicit [re, im] pair. Non-finite numbers are written as null.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kkpert/pipeline.hpp"

namespace kkpert::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kProblemVersion = "kkpert.problem.v1";

#ifdef KKPERT_VERSION
inline constexpr const char* kToolVersion = KKPERT_VERSION;
#else
inline constexpr const char* kToolVersion = "0.1.0";
#endif

[[noreturn]] inline void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ParseError, path + ": " + what);
}

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline double number_at(const Json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected a number");
  return j.get<double>();
}

inline Matrix matrix_from_json(const Json& j, const std::string& path, int expected = -1) {
  if (!j.is_array() || j.empty()) parse_fail(path, "expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (expected > 0 && rows != expected) parse_fail(path, "expected " + std::to_string(expected) + " rows");
  Matrix m(rows, rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) parse_fail(rp, "matrix must be square");
    for (Eigen::Index c = 0; c < rows; ++c) {
      const Json& e = row[static_cast<std::size_t>(c)];
      const std::string ep = rp + "[" + std::to_string(c) + "]";
      if (!e.is_array() || e.size() != 2) parse_fail(ep, "expected an [re, im] pair");
      m(i, c) = Complex(number_at(e[0], ep + "[0]"), number_at(e[1], ep + "[1]"));
    }
  }
  return m;
}

inline void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> known) {
  if (!j.is_object()) parse_fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) parse_fail(path + "." + it.key(), "unknown field");
  }
}

// ---- tolerances and search options ----

inline Json to_json(const Tolerances& t) {
  return Json{{"mem_tol", t.mem_tol},   {"rank_tol", t.rank_tol}, {"dist_tol", t.dist_tol},
              {"diag_tol", t.diag_tol}, {"hom_tol", t.hom_tol},   {"sched_tol", t.sched_tol},
              {"sim_tol", t.sim_tol},   {"inv_tol", t.inv_tol},   {"der_tol", t.der_tol},
              {"pipe_tol", t.pipe_tol}, {"audit_tol", t.audit_tol}};
}

inline Tolerances tolerances_from_json(const Json& j, const std::string& path, Tolerances t = {}) {
  reject_unknown(j, path,
                 {"mem_tol", "rank_tol", "dist_tol", "diag_tol", "hom_tol", "sched_tol", "sim_tol", "inv_tol",
                  "der_tol", "pipe_tol", "audit_tol"});
  auto field = [&](const char* name, double& dst) {
    if (j.contains(name)) {
      dst = number_at(j.at(name), path + "." + name);
      if (!(dst > 0.0)) parse_fail(path + "." + name, "tolerance must be positive");
    }
  };
  field("mem_tol", t.mem_tol);
  field("rank_tol", t.rank_tol);
  field("dist_tol", t.dist_tol);
  field("diag_tol", t.diag_tol);
  field("hom_tol", t.hom_tol);
  field("sched_tol", t.sched_tol);
  field("sim_tol", t.sim_tol);
  field("inv_tol", t.inv_tol);
  field("der_tol", t.der_tol);
  field("pipe_tol", t.pipe_tol);
  field("audit_tol", t.audit_tol);
  return t;
}

inline Json to_json(const SearchOptions& s) {
  return Json{{"starts", s.starts},
              {"iterations", s.iterations},
              {"plateau", s.plateau},
              {"seed", s.seed},
              {"target", num(s.target)},
              {"rng", CounterRng::name()}};
}

inline SearchOptions search_from_json(const Json& j, const std::string& path, SearchOptions s) {
  reject_unknown(j, path, {"starts", "iterations", "plateau", "seed", "target", "rng"});
  if (j.contains("starts")) {
    if (!j["starts"].is_number_integer() || j["starts"].get<int>() < 0) parse_fail(path + ".starts", "expected a count");
    s.starts = j["starts"].get<int>();
  }
  if (j.contains("iterations")) {
    if (!j["iterations"].is_number_integer() || j["iterations"].get<int>() < 0)
      parse_fail(path + ".iterations", "expected a count");
    s.iterations = j["iterations"].get<int>();
  }
  if (j.contains("plateau")) s.plateau = number_at(j["plateau"], path + ".plateau");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) parse_fail(path + ".seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("target") && !j["target"].is_null()) s.target = number_at(j["target"], path + ".target");
  if (j.contains("rng") && j["rng"] != CounterRng::name()) parse_fail(path + ".rng", "unsupported generator");
  return s;
}

// ---- problem files ----

struct MapSpec {
  std::string domain;  // name of an algebra
  int codomain_dim = 0;
  std::vector<Matrix> images;  // one per element of the domain's listed basis
};

struct GeneratorSpec {
  std::vector<int> block_sizes;
  double t = 0.0;
  std::uint64_t seed = 0;
};

struct DiagonalSpec {
  std::string algebra;
  std::vector<std::pair<Matrix, Matrix>> pairs;
};

/// Field order is preserved so that write(read(text)) reproduces text written by write.
struct ProblemFile {
  int ambient_dim = 0;
  std::vector<std::pair<std::string, std::vector<Matrix>>> algebras;
  std::vector<std::pair<std::string, Matrix>> matrices;
  std::vector<std::pair<std::string, MapSpec>> maps;
  std::optional<DiagonalSpec> diagonal;
  std::optional<GeneratorSpec> generator;
  std::optional<double> gamma;
  std::optional<std::string> mode;
  std::optional<Json> tolerances;
  std::optional<Json> search;

  template <class T>
  static const T* find(const std::vector<std::pair<std::string, T>>& v, const std::string& name) {
    for (const auto& [k, x] : v)
      if (k == name) return &x;
    return nullptr;
  }
};

inline Json to_json(const ProblemFile& p) {
  Json j;
  j["version"] = kProblemVersion;
  j["ambient_dim"] = p.ambient_dim;
  if (!p.algebras.empty()) {
    Json a = Json::object();
    for (const auto& [name, basis] : p.algebras) {
      Json list = Json::array();
      for (const Matrix& m : basis) list.push_back(to_json(m));
      a[name] = std::move(list);
    }
    j["algebras"] = std::move(a);
  }
  if (!p.matrices.empty()) {
    Json a = Json::object();
    for (const auto& [name, m] : p.matrices) a[name] = to_json(m);
    j["matrices"] = std::move(a);
  }
  if (!p.maps.empty()) {
    Json a = Json::object();
    for (const auto& [name, spec] : p.maps) {
      Json imgs = Json::array();
      for (const Matrix& m : spec.images) imgs.push_back(to_json(m));
      a[name] = Json{{"domain", spec.domain}, {"codomain_dim", spec.codomain_dim}, {"images", std::move(imgs)}};
    }
    j["maps"] = std::move(a);
  }
  if (p.diagonal) {
    Json pairs = Json::array();
    for (const auto& [x, y] : p.diagonal->pairs) pairs.push_back(Json::array({to_json(x), to_json(y)}));
    j["diagonal"] = Json{{"algebra", p.diagonal->algebra}, {"pairs", std::move(pairs)}};
  }
  if (p.generator)
    j["generator"] = Json{{"block_sizes", p.generator->block_sizes}, {"t", p.generator->t}, {"seed", p.generator->seed}};
  if (p.gamma) j["gamma"] = *p.gamma;
  if (p.mode) j["mode"] = *p.mode;
  if (p.tolerances) j["tolerances"] = *p.tolerances;
  if (p.search) j["search"] = *p.search;
  return j;
}

inline ProblemFile problem_from_json(const Json& j) {
  reject_unknown(j, "$",
                 {"version", "ambient_dim", "algebras", "matrices", "maps", "diagonal", "generator", "gamma", "mode",
                  "tolerances", "search"});
  if (!j.contains("version") || j["version"] != kProblemVersion)
    parse_fail("$.version", std::string("expected \"") + kProblemVersion + "\"");
  ProblemFile p;
  if (!j.contains("ambient_dim") || !j["ambient_dim"].is_number_integer() || j["ambient_dim"].get<int>() < 1)
    parse_fail("$.ambient_dim", "expected a positive integer");
  p.ambient_dim = j["ambient_dim"].get<int>();
  const int k = p.ambient_dim;
  if (j.contains("algebras")) {
    if (!j["algebras"].is_object()) parse_fail("$.algebras", "expected an object");
    for (auto it = j["algebras"].begin(); it != j["algebras"].end(); ++it) {
      const std::string path = "$.algebras." + it.key();
      if (!it->is_array() || it->empty()) parse_fail(path, "expected a nonempty list of matrices");
      std::vector<Matrix> basis;
      for (std::size_t i = 0; i < it->size(); ++i)
        basis.push_back(matrix_from_json((*it)[i], path + "[" + std::to_string(i) + "]", k));
      p.algebras.emplace_back(it.key(), std::move(basis));
    }
  }
  if (j.contains("matrices")) {
    if (!j["matrices"].is_object()) parse_fail("$.matrices", "expected an object");
    for (auto it = j["matrices"].begin(); it != j["matrices"].end(); ++it)
      p.matrices.emplace_back(it.key(), matrix_from_json(*it, "$.matrices." + it.key(), k));
  }
  if (j.contains("maps")) {
    if (!j["maps"].is_object()) parse_fail("$.maps", "expected an object");
    for (auto it = j["maps"].begin(); it != j["maps"].end(); ++it) {
      const std::string path = "$.maps." + it.key();
      reject_unknown(*it, path, {"domain", "codomain_dim", "images"});
      MapSpec spec;
      if (!it->contains("domain") || !(*it)["domain"].is_string()) parse_fail(path + ".domain", "expected a name");
      spec.domain = (*it)["domain"].get<std::string>();
      spec.codomain_dim = k;
      if (it->contains("codomain_dim")) {
        if (!(*it)["codomain_dim"].is_number_integer() || (*it)["codomain_dim"].get<int>() < 1)
          parse_fail(path + ".codomain_dim", "expected a positive integer");
        spec.codomain_dim = (*it)["codomain_dim"].get<int>();
      }
      if (!it->contains("images") || !(*it)["images"].is_array()) parse_fail(path + ".images", "expected a list");
      const Json& imgs = (*it)["images"];
      for (std::size_t i = 0; i < imgs.size(); ++i)
        spec.images.push_back(matrix_from_json(imgs[i], path + ".images[" + std::to_string(i) + "]", spec.codomain_dim));
      p.maps.emplace_back(it.key(), std::move(spec));
    }
  }
  if (j.contains("diagonal")) {
    const Json& d = j["diagonal"];
    reject_unknown(d, "$.diagonal", {"algebra", "pairs"});
    DiagonalSpec spec;
    if (!d.contains("algebra") || !d["algebra"].is_string()) parse_fail("$.diagonal.algebra", "expected a name");
    spec.algebra = d["algebra"].get<std::string>();
    if (!d.contains("pairs") || !d["pairs"].is_array() || d["pairs"].empty())
      parse_fail("$.diagonal.pairs", "expected a nonempty list of pairs");
    for (std::size_t i = 0; i < d["pairs"].size(); ++i) {
      const std::string path = "$.diagonal.pairs[" + std::to_string(i) + "]";
      const Json& pr = d["pairs"][i];
      if (!pr.is_array() || pr.size() != 2) parse_fail(path, "expected [a, b]");
      spec.pairs.emplace_back(matrix_from_json(pr[0], path + "[0]", k), matrix_from_json(pr[1], path + "[1]", k));
    }
    p.diagonal = std::move(spec);
  }
  if (j.contains("generator")) {
    const Json& g = j["generator"];
    reject_unknown(g, "$.generator", {"block_sizes", "t", "seed"});
    GeneratorSpec spec;
    if (!g.contains("block_sizes") || !g["block_sizes"].is_array()) parse_fail("$.generator.block_sizes", "expected a list");
    for (std::size_t i = 0; i < g["block_sizes"].size(); ++i) {
      const Json& b = g["block_sizes"][i];
      if (!b.is_number_integer()) parse_fail("$.generator.block_sizes[" + std::to_string(i) + "]", "expected an integer");
      spec.block_sizes.push_back(b.get<int>());
    }
    if (!g.contains("t")) parse_fail("$.generator.t", "missing");
    spec.t = number_at(g["t"], "$.generator.t");
    if (g.contains("seed")) {
      if (!g["seed"].is_number_unsigned()) parse_fail("$.generator.seed", "expected a nonnegative integer");
      spec.seed = g["seed"].get<std::uint64_t>();
    }
    p.generator = std::move(spec);
  }
  if (j.contains("gamma")) p.gamma = number_at(j["gamma"], "$.gamma");
  if (j.contains("mode")) {
    if (!j["mode"].is_string() || (j["mode"] != "certified" && j["mode"] != "heuristic"))
      parse_fail("$.mode", "expected \"certified\" or \"heuristic\"");
    p.mode = j["mode"].get<std::string>();
  }
  if (j.contains("tolerances")) {
    tolerances_from_json(j["tolerances"], "$.tolerances");
    p.tolerances = j["tolerances"];
  }
  if (j.contains("search")) {
    search_from_json(j["search"], "$.search", {});
    p.search = j["search"];
  }
  return p;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline ProblemFile parse_problem(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    parse_fail("$", e.what());
  }
  return problem_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ProblemFile load_problem(const std::string& path) { return parse_problem(read_file(path)); }

/// Writes to a sibling temporary file and renames it into place.
inline void atomic_write(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::ParseError, "cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::ParseError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

inline Tolerances resolved_tolerances(const ProblemFile& p) {
  return p.tolerances ? tolerances_from_json(*p.tolerances, "$.tolerances") : Tolerances{};
}

inline SearchOptions resolved_search(const ProblemFile& p, SearchOptions base) {
  return p.search ? search_from_json(*p.search, "$.search", base) : base;
}

inline AlgebraPtr algebra_named(const ProblemFile& p, const std::string& name, const Tolerances& tol) {
  const auto* basis = ProblemFile::find(p.algebras, name);
  if (!basis) parse_fail("$.algebras", "no algebra named \"" + name + "\"");
  return build_algebra(p.ambient_dim, *basis, false, tol);
}

inline const Matrix& matrix_named(const ProblemFile& p, const std::string& name) {
  const auto* m = ProblemFile::find(p.matrices, name);
  if (!m) parse_fail("$.matrices", "no matrix named \"" + name + "\"");
  return *m;
}

inline LinearOperatorMap map_named(const ProblemFile& p, const std::string& name, const AlgebraPtr& domain) {
  const auto* spec = ProblemFile::find(p.maps, name);
  if (!spec) parse_fail("$.maps", "no map named \"" + name + "\"");
  return LinearOperatorMap::from_basis_images(domain->space, spec->codomain_dim, spec->images);
}

inline TensorElement diagonal_of(const ProblemFile& p, const AlgebraPtr& algebra) {
  if (!p.diagonal) parse_fail("$.diagonal", "missing");
  return make_tensor(algebra, p.diagonal->pairs);
}

// ---- reports ----

inline Json to_json(const NormInterval& iv) {
  Json j{{"lower", num(iv.lower)}, {"upper", num(iv.upper)}, {"width", num(iv.width())},
         {"converged", iv.converged}, {"methods", iv.method_tags}};
  if (iv.level_lower.size() > 1) j["level_lower"] = iv.level_lower;
  return j;
}

inline Json to_json(const DiagonalCertificate& c) {
  return Json{{"c1_residual", num(c.c1_residual)},
              {"c1_lower", num(c.c1_lower)},
              {"c2_residual", num(c.c2_residual)},
              {"tolerance", c.tolerance},
              {"c1_margin", num(c.tolerance - c.c1_residual)},
              {"c2_margin", num(c.tolerance - c.c2_residual)},
              {"c1_pass", c.c1_pass},
              {"c2_pass", c.c2_pass},
              {"h_norm", to_json(c.h_norm)},
              {"consistent", c.consistent},
              {"passed", c.passed()}};
}

inline Json to_json(const IterationSchedule& s) {
  Json recs = Json::array();
  for (const ScheduleRecord& r : s.records)
    recs.push_back(Json{{"q", r.q},
                        {"mu_q", num(r.mu_q)},
                        {"delta_q", num(r.delta_q)},
                        {"defect_measured", num(r.defect_measured)},
                        {"basis_residual", num(r.basis_residual)},
                        {"dominance_margin", num(r.delta_q - r.defect_measured)},
                        {"dominated", r.dominated},
                        {"quadratic_bound", num(r.quadratic_bound)},
                        {"step_norm_lower", num(r.step_norm_lower)},
                        {"step_norm_upper", num(r.step_norm_upper)}});
  return Json{{"mu", num(s.mu)},
              {"delta", num(s.delta)},
              {"eps", num(s.eps)},
              {"u_norm", num(s.u_norm)},
              {"defect_bound", num(s.defect_bound)},
              {"defect_bound_source", s.defect_bound_source},
              {"heuristic", s.heuristic},
              {"unital_residual", num(s.unital_residual)},
              {"iterations", s.iterations},
              {"converged", s.converged},
              {"records", std::move(recs)},
              {"step_sum_upper", num(s.step_sum_upper)},
              {"final_bound", num(s.final_bound)},
              {"truncation_tail", num(s.truncation_tail)},
              {"pi_minus_l", to_json(s.pi_minus_l)},
              {"pi_minus_l_margin", num(s.final_bound - s.pi_minus_l.lower)},
              {"final_basis_residual", num(s.final_basis_residual)},
              {"final_defect_lower", num(s.final_defect_lower)},
              {"pi_unit_residual", num(s.pi_unit_residual)},
              {"schedule_dominated", s.schedule_dominated},
              {"quadratic_ok", s.quadratic_ok}};
}

inline Json map_images(const LinearOperatorMap& t) {
  Json imgs = Json::array();
  for (const Matrix& q : t.domain().basis()) imgs.push_back(to_json(t.apply_projected(q)));
  return imgs;
}

inline Json to_json(const SimilarityResult& r) {
  return Json{{"S", to_json(r.s)},
              {"S_minus_I", num(r.s_minus_i)},
              {"sigma_min", num(r.sigma_min)},
              {"invertible", r.invertible},
              {"status", r.status},
              {"intertwining_residual", num(r.intertwining_residual)},
              {"u_norm", num(r.u_norm)},
              {"diff_cb_upper", num(r.diff_cb)},
              {"pi1_cb_upper", num(r.pi1_cb)},
              {"pi2_cb_upper", num(r.pi2_cb)},
              {"condition_12", num(r.condition_12)},
              {"condition_21", num(r.condition_21)},
              {"ordering", r.ordering},
              {"sufficient_condition", r.sufficient_condition},
              {"psi_minus_I", num(r.psi_minus_i)},
              {"psi_minus_I_margin", num(1.0 - r.psi_minus_i)},
              {"implication_ok", r.implication_ok}};
}

inline Json to_json(const ChainAudit& a) {
  return Json{{"gamma", a.gamma},
              {"u_norm", a.u_norm},
              {"bound_T_minus_id", a.bound_T_minus_id},
              {"bound_Tinv", a.bound_Tinv},
              {"bound_V_minus_id", a.bound_V_minus_id},
              {"bound_V1_inv", a.bound_V1_inv},
              {"bound_L_cb", a.bound_L_cb},
              {"bound_L_minus_id", a.bound_L_minus_id},
              {"bound_L_defect", a.bound_L_defect},
              {"bound_L_inv", a.bound_L_inv},
              {"mu", a.mu},
              {"delta", a.delta},
              {"eps", a.eps},
              {"final_check_1", a.final_check_1},
              {"final_check_1_margin", 1.0 - a.final_check_1},
              {"final_check_2", a.final_check_2},
              {"final_check_2_margin", 1.0 - a.final_check_2},
              {"feasible_1", a.feasible_1},
              {"feasible_2", a.feasible_2},
              {"feasible", a.feasible()}};
}

inline Json to_json(const AuditCheck& c) {
  return Json{{"name", c.name},         {"measured_lower", num(c.measured)}, {"measured_upper", num(c.measured_upper)},
              {"bound", num(c.bound)}, {"margin", num(c.margin)},          {"ok", c.ok}};
}

inline Json timings_json(const std::vector<std::pair<std::string, double>>& t) {
  Json j = Json::object();
  for (const auto& [k, v] : t) j[k] = v;
  return j;
}

inline Json to_json(const PipelineReport& r) {
  Json checks = Json::array();
  for (const AuditCheck& c : r.checks) checks.push_back(to_json(c));
  Json j;
  j["description"] = r.description;
  j["seed"] = r.seed;
  j["mode_requested"] = r.mode_requested;
  j["mode"] = r.mode;
  j["mode_reason"] = r.mode_reason;
  j["gamma_analytic"] = r.gamma_analytic ? num(*r.gamma_analytic) : Json(nullptr);
  j["u_M_norm_ub"] = num(r.u_m_norm);
  j["u_M_certified"] = r.u_m_certified;
  j["u_N_norm_ub"] = num(r.u_n_norm);
  j["gamma_cb"] = num(r.gamma_cb);
  j["gamma_source"] = r.gamma_source;
  j["gamma_limit"] = kChainGammaLimit;
  j["gamma_star"] = r.gamma_star;
  j["audit"] = r.audit ? to_json(*r.audit) : Json(nullptr);
  j["checks"] = std::move(checks);
  j["log"] = r.log;
  j["T_condition"] = num(r.t_condition);
  j["V1_sigma_min"] = num(r.v1_sigma_min);
  if (r.johnson) {
    j["johnson_status"] = to_string(r.johnson->status);
    j["johnson"] = to_json(r.johnson->schedule);
    j["pi_images"] = map_images(r.johnson->pi);
  }
  j["pi_multiplicativity_residual"] = num(r.pi_multiplicativity);
  j["pi_unital_residual"] = num(r.pi_unital);
  j["pi_range_residual"] = num(r.pi_range_residual);
  j["pi_range_rank"] = r.pi_range_rank;
  if (r.similarity) j["similarity"] = to_json(*r.similarity);
  j["S_minus_I"] = num(r.s_minus_i);
  j["pi_minus_L_cb_upper"] = num(r.pi_minus_l_cb);
  j["L_inv_cb_upper"] = num(r.l_inv_cb);
  j["surjectivity_product"] = num(r.surjectivity_product);
  j["surjective_by_bound"] = r.surjective_by_bound;
  j["surjective_by_solve"] = r.surjective_by_solve;
  j["conjugation_forward"] = num(r.conjugation_forward);
  j["conjugation_backward"] = num(r.conjugation_backward);
  j["conjugation_residual"] = num(r.conjugation_residual);
  j["bound_656"] = num(r.bound_656);
  j["bound_656_margin"] = num(r.bound_656 - r.s_minus_i);
  j["bound_656_ok"] = r.bound_656_ok;
  j["verdict"] = to_string(r.verdict);
  j["verdict_message"] = r.verdict_message;
  j["timings"] = timings_json(r.timings);
  return j;
}

inline Json to_json(const BatchGroup& g) {
  return Json{{"t", g.t},
              {"runs", g.runs},
              {"successes", g.successes},
              {"success_rate", g.success_rate},
              {"certified_runs", g.certified_runs},
              {"certified_successes", g.certified_successes},
              {"min_margin_656", num(g.min_margin_656)},
              {"max_ratio_656", num(g.max_ratio_656)},
              {"max_conjugation_residual", num(g.max_conjugation_residual)}};
}

inline Json to_json(const BatchConfig& c) {
  return Json{{"block_sizes", c.block_sizes},
              {"ambient_dim", c.ambient_dim},
              {"t_grid", c.t_grid},
              {"seeds", c.seeds},
              {"mode", c.pipeline.mode},
              {"threads", c.threads},
              {"johnson_max_iter", c.pipeline.johnson_max_iter},
              {"search", to_json(c.pipeline.search)},
              {"tolerances", to_json(c.pipeline.tol)}};
}

/// One line per run in (t, seed) order.
inline std::string summary_csv(const BatchSummary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "seed,gamma_analytic,u_norm_ub,S_minus_I,bound_656,verdict,t\n";
  for (const BatchEntry& e : s.entries)
    out << e.seed << ',' << e.gamma_analytic << ',' << e.u_norm_ub << ',' << e.report.s_minus_i << ','
        << e.report.bound_656 << ',' << to_string(e.report.verdict) << ',' << e.t << '\n';
  return out.str();
}

/// Standard report envelope: tool, version, command, resolved config, seed, tolerances.
inline Json envelope(const std::string& command, const Json& config, std::uint64_t seed, const Tolerances& tol,
                     const std::string& verdict, Json result) {
  return Json{{"tool", "kkpert"},
              {"version", kToolVersion},
              {"command", command},
              {"config", config},
              {"seed", seed},
              {"tolerances", to_json(tol)},
              {"verdict", verdict},
              {"result", std::move(result)}};
}

/// Copy of a report with every "timings" member removed, for reproducibility comparisons.
inline Json strip_timings(Json j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto it = j.begin(); it != j.end(); ++it) *it = strip_timings(*it);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timings(v);
  }
  return j;
}

}  // namespace kkpert::io

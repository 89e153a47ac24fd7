// kkpert command-line tool.
//
// Exit codes: 0 verdict PASS/SUCCESS, 2 verdict FAIL with a valid report, 1 usage or parse error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kkpert/io.hpp"
#include "kkpert/kkpert.hpp"

namespace {

using kkpert::io::Json;
namespace io = kkpert::io;

struct Common {
  std::string problem;
  std::string out;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const Common& c, const Json& report) {
  const std::string text = io::dump(report);
  if (c.out.empty()) std::cout << text;
  else io::atomic_write(c.out, text);
}

int exit_for(const std::string& verdict) { return verdict == "PASS" || verdict == "SUCCESS" ? 0 : 2; }

io::ProblemFile need_problem(const Common& c) {
  if (c.problem.empty()) throw UsageError("--problem is required");
  return io::load_problem(c.problem);
}

std::string default_algebra(const io::ProblemFile& p, const std::string& requested) {
  if (!requested.empty()) return requested;
  if (p.algebras.empty()) io::parse_fail("$.algebras", "no algebras in problem");
  return p.algebras.front().first;
}

/// The file's diagonal when it names `name`, otherwise the canonical one of a multi-matrix algebra.
kkpert::TensorElement diagonal_for(const io::ProblemFile& p, const std::string& name, const kkpert::AlgebraPtr& a,
                                   const kkpert::Tolerances& tol, std::string& source) {
  if (p.diagonal && p.diagonal->algebra == name) {
    source = "file";
    return kkpert::make_tensor(a, p.diagonal->pairs, tol);
  }
  source = "canonical";
  return kkpert::canonical_diagonal_element(a);
}

Json interval_verdict(const kkpert::NormInterval& iv) {
  return Json{{"measured", io::num(iv.lower)}, {"bound", io::num(iv.upper)}, {"margin", io::num(iv.width())}};
}

int run_guarded(const std::string& command, const Common& c, const std::function<Json()>& body) {
  try {
    Json report = body();
    emit(c, report);
    return exit_for(report["verdict"].get<std::string>());
  } catch (const UsageError& e) {
    std::cerr << "kkpert " << command << ": " << e.what() << "\n";
    return 1;
  } catch (const kkpert::Error& e) {
    if (e.kind() == kkpert::ErrorKind::ParseError || e.kind() == kkpert::ErrorKind::ConfigInvalid) {
      std::cerr << "kkpert " << command << ": " << e.what() << "\n";
      return 1;
    }
    Json report = io::envelope(command, Json{{"problem", c.problem}}, 0, {}, "FAIL",
                               Json{{"error", kkpert::to_string(e.kind())}, {"message", e.what()}});
    try {
      emit(c, report);
    } catch (const std::exception& w) {
      std::cerr << "kkpert " << command << ": " << w.what() << "\n";
      return 1;
    }
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kkpert " << command << ": " << e.what() << "\n";
    return 1;
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const std::uint64_t a = std::stoull(item.substr(0, dots)), b = std::stoull(item.substr(dots + 2));
        if (b < a) throw UsageError("empty seed range " + item);
        for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad seed list \"" + spec + "\"");
    }
  }
  return out;
}

std::string t_label(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", t);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kkpert: perturbations of finite-dimensional operator algebras"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kToolVersion));

  Common common;
  auto add_common = [&](CLI::App* sub, bool problem) {
    if (problem) sub->add_option("--problem", common.problem, "problem file (JSON)");
    sub->add_option("--out", common.out, "report file; stdout when omitted");
  };

  std::string algebra_name, first, second, map_name, pi1_name, pi2_name, x_name, m_name, n_name, mode;
  int level = -1;
  double eps = -1.0, gamma = -1.0, u_norm = 1.0, t_single = -1.0;
  bool canonical = false;
  std::uint64_t seed = 0;
  std::string blocks, t_list, seeds_spec;
  int ambient = -1, threads = 1;

  auto* check_algebra = app.add_subcommand("check-algebra", "build an algebra and report its structure");
  add_common(check_algebra, true);
  check_algebra->add_option("--algebra", algebra_name);

  auto* check_diag = app.add_subcommand("check-diagonal", "certify a virtual diagonal");
  add_common(check_diag, true);
  check_diag->add_option("--algebra", algebra_name);
  check_diag->add_flag("--canonical", canonical, "ignore the file's diagonal and use the canonical one");

  auto* cb_norm = app.add_subcommand("cb-norm", "norm interval of a map at a matrix level");
  add_common(cb_norm, true);
  cb_norm->add_option("--map", map_name)->required();
  cb_norm->add_option("--level", level, "matrix level; default is the codomain dimension (cb norm)");

  auto* kk = app.add_subcommand("kk-distance", "Hausdorff distance between unit balls");
  add_common(kk, true);
  kk->add_option("--first", first);
  kk->add_option("--second", second);

  auto* near = app.add_subcommand("near-inclusion", "near-inclusion constant of one space in another");
  add_common(near, true);
  near->add_option("--first", first);
  near->add_option("--second", second);
  near->add_option("--level", level);

  auto* johnson = app.add_subcommand("johnson", "correct an almost multiplicative map");
  add_common(johnson, true);
  johnson->add_option("--map", map_name)->required();
  johnson->add_option("--eps", eps);

  auto* sim = app.add_subcommand("similarity", "intertwiner of two representations");
  add_common(sim, true);
  sim->add_option("--pi1", pi1_name)->required();
  sim->add_option("--pi2", pi2_name)->required();

  auto* der = app.add_subcommand("derivation", "implement a derivation by a single operator");
  add_common(der, true);
  der->add_option("--algebra", algebra_name);
  der->add_option("--x", x_name, "matrix implementing an inner derivation");
  der->add_option("--map", map_name, "derivation given as a map on the algebra");

  auto* audit = app.add_subcommand("audit-chain", "evaluate the constants of the proof chain");
  add_common(audit, false);
  audit->add_option("--gamma", gamma)->required();
  audit->add_option("--u-norm", u_norm);

  auto* pipe = app.add_subcommand("pipeline", "homomorphism and similarity for a near pair");
  add_common(pipe, true);
  pipe->add_option("--m", m_name);
  pipe->add_option("--n", n_name);
  pipe->add_option("--blocks", blocks, "generate N from block sizes, e.g. 2,1");
  pipe->add_option("--ambient", ambient);
  pipe->add_option("--t", t_single);
  pipe->add_option("--seed", seed);
  pipe->add_option("--mode", mode)->check(CLI::IsMember({"certified", "heuristic"}));

  std::string csv_path;
  auto* batch = app.add_subcommand("batch", "pipeline over a grid of sizes and seeds");
  batch->add_option("--out", common.out, "output directory")->required();
  batch->add_option("--blocks", blocks)->required();
  batch->add_option("--ambient", ambient);
  batch->add_option("--t", t_list, "comma-separated perturbation sizes");
  batch->add_option("--seeds", seeds_spec, "e.g. 0..24 or 1,2,5");
  batch->add_option("--mode", mode)->check(CLI::IsMember({"certified", "heuristic"}));
  batch->add_option("--threads", threads);
  batch->add_option("--csv", csv_path, "summary CSV path; default <out>/summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto parse_blocks = [](const std::string& spec) {
    std::vector<int> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        out.push_back(std::stoi(item));
      } catch (const std::logic_error&) {
        throw UsageError("bad block list \"" + spec + "\"");
      }
    }
    return out;
  };

  if (*check_algebra) {
    return run_guarded("check-algebra", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const std::string name = default_algebra(p, algebra_name);
      const auto a = io::algebra_named(p, name, tol);
      Json blocks_json = Json::array();
      if (const auto& bs = a->block_structure())
        for (const auto& b : bs->blocks) blocks_json.push_back(Json{{"size", b.size}, {"multiplicity", b.multiplicity}});
      const bool unital = a->unit_residual <= tol.mem_tol;
      Json res{{"algebra", name},
               {"dim", a->dim()},
               {"ambient_dim", a->ambient_dim()},
               {"unit_residual", a->unit_residual},
               {"closure_residual", a->closure_residual},
               {"closure_margin", tol.mem_tol - a->closure_residual},
               {"adjoint_residual", a->adjoint_residual},
               {"selfadjoint", a->selfadjoint},
               {"unital", unital},
               {"blocks", blocks_json},
               {"commutant_dim", kkpert::commutant(*a).dim()}};
      return io::envelope("check-algebra", io::to_json(p), 0, tol, unital ? "PASS" : "FAIL", res);
    });
  }

  if (*check_diag) {
    return run_guarded("check-diagonal", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const std::string name =
          !algebra_name.empty() ? algebra_name : (p.diagonal ? p.diagonal->algebra : default_algebra(p, ""));
      const auto a = io::algebra_named(p, name, tol);
      std::string source = "canonical";
      const auto u = canonical ? kkpert::canonical_diagonal_element(a) : diagonal_for(p, name, a, tol, source);
      const auto so = io::resolved_search(p, kkpert::SearchOptions{});
      const auto cert = kkpert::check_diagonal(u, *a, tol, so);
      Json res{{"algebra", name}, {"source", source}, {"length", u.length()}, {"certificate", io::to_json(cert)}};
      return io::envelope("check-diagonal", io::to_json(p), so.seed, tol, cert.passed() ? "PASS" : "FAIL", res);
    });
  }

  if (*cb_norm) {
    return run_guarded("cb-norm", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const auto* spec = io::ProblemFile::find(p.maps, map_name);
      if (!spec) io::parse_fail("$.maps", "no map named \"" + map_name + "\"");
      const auto a = io::algebra_named(p, spec->domain, tol);
      const auto t = io::map_named(p, map_name, a);
      const auto so = io::resolved_search(p, kkpert::SearchOptions{});
      const int lv = level > 0 ? level : t.codomain_dim();
      const auto iv = kkpert::cb_norm_interval(t, so, lv);
      Json res{{"map", map_name}, {"level", lv}, {"interval", io::to_json(iv)}, {"summary", interval_verdict(iv)}};
      return io::envelope("cb-norm", io::to_json(p), so.seed, tol, "PASS", res);
    });
  }

  // Pair of spaces for kk-distance and near-inclusion: named algebras, or M and N of a generator.
  auto resolve_pair = [&](const io::ProblemFile& p, const kkpert::Tolerances& tol, kkpert::AlgebraPtr& e,
                          kkpert::AlgebraPtr& f, std::optional<double>& analytic, Json& desc) {
    if (!first.empty() || !second.empty()) {
      if (first.empty() || second.empty()) throw UsageError("--first and --second go together");
      e = io::algebra_named(p, first, tol);
      f = io::algebra_named(p, second, tol);
      analytic = p.gamma;
      desc = Json{{"first", first}, {"second", second}};
      return;
    }
    if (!p.generator) throw UsageError("give --first/--second or a generator in the problem");
    const auto inst = kkpert::generate_instance(p.generator->block_sizes, p.ambient_dim, p.generator->t,
                                                p.generator->seed, tol);
    e = inst.m;
    f = inst.n;
    analytic = inst.gamma_analytic;
    desc = Json{{"first", "M (generated)"}, {"second", "N (generated)"}, {"gamma_analytic", inst.gamma_analytic}};
  };

  if (*kk) {
    return run_guarded("kk-distance", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      kkpert::AlgebraPtr e, f;
      std::optional<double> analytic;
      Json desc;
      resolve_pair(p, tol, e, f, analytic, desc);
      const auto so = io::resolved_search(p, kkpert::inclusion_search());
      const auto d = kkpert::kk_distance_interval(e->space, f->space, so, tol, analytic);
      Json res{{"pair", desc},
               {"interval", io::to_json(d.interval)},
               {"first_to_second", io::to_json(d.e_to_f)},
               {"second_to_first", io::to_json(d.f_to_e)},
               {"summary", interval_verdict(d.interval)}};
      return io::envelope("kk-distance", io::to_json(p), so.seed, tol, "PASS", res);
    });
  }

  if (*near) {
    return run_guarded("near-inclusion", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      kkpert::AlgebraPtr e, f;
      std::optional<double> analytic;
      Json desc;
      resolve_pair(p, tol, e, f, analytic, desc);
      const auto so = io::resolved_search(p, kkpert::inclusion_search());
      const int lv = level > 0 ? level : 1;
      const auto iv = kkpert::near_inclusion_gamma(e->space, f->space, lv, so, tol, analytic);
      Json res{{"pair", desc}, {"level", lv}, {"interval", io::to_json(iv)}, {"summary", interval_verdict(iv)}};
      return io::envelope("near-inclusion", io::to_json(p), so.seed, tol, "PASS", res);
    });
  }

  if (*johnson) {
    return run_guarded("johnson", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const auto* spec = io::ProblemFile::find(p.maps, map_name);
      if (!spec) io::parse_fail("$.maps", "no map named \"" + map_name + "\"");
      const auto a = io::algebra_named(p, spec->domain, tol);
      const auto l = io::map_named(p, map_name, a);
      std::string source;
      const auto u = diagonal_for(p, spec->domain, a, tol, source);
      kkpert::JohnsonOptions jo;
      jo.tol = tol;
      jo.search = io::resolved_search(p, kkpert::monitor_search());
      if (eps > 0.0) jo.eps = eps;
      const auto r = kkpert::try_homomorphize(l, u, jo);
      const bool ok = r.status == kkpert::JohnsonStatus::Converged;
      Json res{{"map", map_name},
               {"diagonal", source},
               {"status", kkpert::to_string(r.status)},
               {"message", r.message},
               {"schedule", io::to_json(r.schedule)},
               {"pi_images", io::map_images(r.pi)},
               {"summary",
                Json{{"measured", io::num(r.schedule.final_basis_residual)},
                     {"bound", tol.hom_tol},
                     {"margin", io::num(tol.hom_tol - r.schedule.final_basis_residual)}}}};
      return io::envelope("johnson", io::to_json(p), jo.search.seed, tol, ok ? "PASS" : "FAIL", res);
    });
  }

  if (*sim) {
    return run_guarded("similarity", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const auto* s1 = io::ProblemFile::find(p.maps, pi1_name);
      const auto* s2 = io::ProblemFile::find(p.maps, pi2_name);
      if (!s1 || !s2) io::parse_fail("$.maps", "representations not found");
      if (s1->domain != s2->domain) throw UsageError("representations must share their source algebra");
      const auto a = io::algebra_named(p, s1->domain, tol);
      const auto r1 = kkpert::make_representation(a, io::map_named(p, pi1_name, a), tol);
      const auto r2 = kkpert::make_representation(a, io::map_named(p, pi2_name, a), tol);
      std::string source;
      const auto u = diagonal_for(p, s1->domain, a, tol, source);
      kkpert::SimilarityOptions so;
      so.tol = tol;
      so.search = io::resolved_search(p, kkpert::monitor_search());
      const auto r = kkpert::build_similarity(r1, r2, u, so);
      const bool ok = r.invertible && r.intertwining_residual <= tol.sim_tol;
      Json res{{"pi1", pi1_name},
               {"pi2", pi2_name},
               {"diagonal", source},
               {"similarity", io::to_json(r)},
               {"summary",
                Json{{"measured", io::num(r.intertwining_residual)},
                     {"bound", tol.sim_tol},
                     {"margin", io::num(tol.sim_tol - r.intertwining_residual)}}}};
      return io::envelope("similarity", io::to_json(p), so.search.seed, tol, ok ? "PASS" : "FAIL", res);
    });
  }

  if (*der) {
    return run_guarded("derivation", common, [&] {
      const auto p = need_problem(common);
      const auto tol = io::resolved_tolerances(p);
      const std::string name = default_algebra(p, algebra_name);
      const auto a = io::algebra_named(p, name, tol);
      if (x_name.empty() == map_name.empty()) throw UsageError("give exactly one of --x and --map");
      const auto d = x_name.empty() ? io::map_named(p, map_name, a)
                                    : kkpert::inner_derivation(io::matrix_named(p, x_name), *a);
      std::string source;
      const auto u = diagonal_for(p, name, a, tol, source);
      kkpert::SimilarityOptions so;
      so.tol = tol;
      so.search = io::resolved_search(p, kkpert::monitor_search());
      const auto pi = kkpert::identity_representation(a);
      const auto sol = kkpert::solve_derivation(d, u, pi, so);
      const bool ok = sol.reconstruction_residual <= tol.der_tol && sol.bound_ok;
      Json res{{"algebra", name},
               {"diagonal", source},
               {"phi", io::to_json(sol.phi)},
               {"leibniz_residual", sol.leibniz_residual},
               {"reconstruction_residual", sol.reconstruction_residual},
               {"phi_norm", sol.phi_norm},
               {"u_norm_ub", sol.u_norm},
               {"D_cb_ub", sol.d_cb},
               {"pi_cb_ub", sol.pi_cb},
               {"bound", sol.bound},
               {"bound_margin", sol.bound - sol.phi_norm},
               {"bound_ok", sol.bound_ok}};
      if (!x_name.empty()) {
        const auto cb = kkpert::commutant_bound_check(io::matrix_named(p, x_name), a, u, so);
        res["commutant_distance"] = io::to_json(cb.distance);
        res["commutant_bound"] = cb.bound;
        res["commutant_bound_margin"] = cb.bound - cb.distance.lower;
        res["commutant_bound_holds"] = cb.holds;
      }
      return io::envelope("derivation", io::to_json(p), so.search.seed, tol, ok ? "PASS" : "FAIL", res);
    });
  }

  if (*audit) {
    return run_guarded("audit-chain", common, [&] {
      const auto a = kkpert::audit_chain(gamma, u_norm);
      Json res = io::to_json(a);
      res["gamma_limit"] = kkpert::kChainGammaLimit;
      res["gamma_star"] = kkpert::chain_feasibility_threshold(u_norm);
      return io::envelope("audit-chain", Json{{"gamma", gamma}, {"u_norm", u_norm}}, 0, {},
                          a.feasible() ? "PASS" : "FAIL", res);
    });
  }

  if (*pipe) {
    return run_guarded("pipeline", common, [&] {
      kkpert::PipelineOptions po;
      Json config;
      kkpert::PipelineReport rep;
      if (!blocks.empty()) {
        if (t_single < 0.0) throw UsageError("--blocks needs --t");
        const auto bs = parse_blocks(blocks);
        int k = ambient;
        if (k < 0) {
          k = 0;
          for (int b : bs) k += b;
        }
        if (!mode.empty()) po.mode = mode;
        const auto inst = kkpert::generate_instance(bs, k, t_single, seed, po.tol);
        rep = kkpert::run_pipeline(inst, po);
        config = Json{{"blocks", bs}, {"ambient_dim", k}, {"t", t_single}, {"seed", seed}, {"mode", po.mode}};
      } else {
        const auto p = need_problem(common);
        po.tol = io::resolved_tolerances(p);
        po.search = io::resolved_search(p, kkpert::monitor_search());
        if (p.mode) po.mode = *p.mode;
        if (!mode.empty()) po.mode = mode;
        config = io::to_json(p);
        config["mode"] = po.mode;
        if (m_name.empty() && n_name.empty() && p.generator) {
          const auto inst = kkpert::generate_instance(p.generator->block_sizes, p.ambient_dim, p.generator->t,
                                                      p.generator->seed, po.tol);
          rep = kkpert::run_pipeline(inst, po);
        } else {
          if (m_name.empty() || n_name.empty()) throw UsageError("give --m and --n, or a generator");
          const auto m = io::algebra_named(p, m_name, po.tol);
          const auto n = kkpert::build_algebra(p.ambient_dim, *io::ProblemFile::find(p.algebras, n_name), true, po.tol);
          std::optional<kkpert::TensorElement> u_m;
          if (p.diagonal && p.diagonal->algebra == m_name) u_m = kkpert::make_tensor(m, p.diagonal->pairs, po.tol);
          rep = kkpert::run_pipeline(m, n, u_m ? &*u_m : nullptr, p.gamma, po);
          rep.description = "problem: M=" + m_name + " N=" + n_name;
        }
      }
      const std::string verdict = kkpert::to_string(rep.verdict);
      return io::envelope("pipeline", config, rep.seed, po.tol, verdict == "SUCCESS" ? "SUCCESS" : "FAIL",
                          io::to_json(rep));
    });
  }

  if (*batch) {
    Common dir_common;  // reports go to files inside the directory
    dir_common.out = common.out + "/summary.json";
    return run_guarded("batch", dir_common, [&] {
      kkpert::BatchConfig cfg;
      cfg.block_sizes = parse_blocks(blocks);
      cfg.ambient_dim = ambient;
      if (cfg.ambient_dim < 0) {
        cfg.ambient_dim = 0;
        for (int b : cfg.block_sizes) cfg.ambient_dim += b;
      }
      std::stringstream ss(t_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
          cfg.t_grid.push_back(std::stod(item));
        } catch (const std::logic_error&) {
          throw UsageError("bad t list \"" + t_list + "\"");
        }
      }
      cfg.seeds = parse_seeds(seeds_spec);
      if (!mode.empty()) cfg.pipeline.mode = mode;
      cfg.threads = threads;
      const auto summary = kkpert::run_batch(cfg);
      const Json config = io::to_json(cfg);
      bool certified_ok = true;
      Json files = Json::array();
      for (const auto& e : summary.entries) {
        const std::string verdict = kkpert::to_string(e.report.verdict);
        if (e.report.certified() && e.report.verdict != kkpert::Verdict::Success) certified_ok = false;
        const std::string file = "report_t" + t_label(e.t) + "_seed" + std::to_string(e.seed) + ".json";
        Json run_config = config;
        run_config["t"] = e.t;
        run_config["seed"] = e.seed;
        io::atomic_write(common.out + "/" + file,
                         io::dump(io::envelope("pipeline", run_config, e.seed, cfg.pipeline.tol,
                                               verdict == "SUCCESS" ? "SUCCESS" : "FAIL", io::to_json(e.report))));
        files.push_back(file);
      }
      io::atomic_write(csv_path.empty() ? common.out + "/summary.csv" : csv_path, io::summary_csv(summary));
      Json groups = Json::array();
      for (const auto& g : summary.groups) groups.push_back(io::to_json(g));
      Json res{{"runs", summary.entries.size()},
               {"groups", groups},
               {"failure_threshold", summary.failure_threshold ? Json(*summary.failure_threshold) : Json(nullptr)},
               {"certified_t_max", summary.certified_t_max ? Json(*summary.certified_t_max) : Json(nullptr)},
               {"reports", files}};
      return io::envelope("batch", config, 0, cfg.pipeline.tol, certified_ok ? "PASS" : "FAIL", res);
    });
  }
  return 1;
}

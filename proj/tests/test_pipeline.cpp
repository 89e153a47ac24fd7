#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "kkpert/io.hpp"
#include "kkpert/kkpert.hpp"
#include "oracles.hpp"

using namespace kkpert;
namespace io = kkpert::io;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> keys_of(const io::Json& j) {
  std::vector<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.push_back(it.key());
  return out;
}

}  // namespace

TEST(Audit, ZeroGamma) {
  const auto a = audit_chain(0.0, 1.0);
  EXPECT_EQ(a.delta, 0.0);
  EXPECT_EQ(a.eps, 0.0);
  EXPECT_EQ(a.bound_T_minus_id, 0.0);
  EXPECT_EQ(a.bound_L_minus_id, 0.0);
  EXPECT_TRUE(a.feasible());
}

TEST(Audit, ReferenceGammaAgainstDirectEvaluation) {
  const double g = 1.0 / 164.0;
  const auto a = audit_chain(g, 1.0);
  const auto o = oracle::chain(g, 1.0);
  EXPECT_NEAR(a.bound_T_minus_id, o.t_minus_id, 1e-15);
  EXPECT_NEAR(a.bound_Tinv, o.t_inv, 1e-15);
  EXPECT_NEAR(a.bound_V_minus_id, o.v_minus_id, 1e-15);
  EXPECT_NEAR(a.bound_V1_inv, o.v1_inv, 1e-15);
  EXPECT_NEAR(a.bound_L_cb, o.l_cb, 1e-15);
  EXPECT_NEAR(a.bound_L_minus_id, o.l_minus_id, 1e-15);
  EXPECT_NEAR(a.bound_L_defect, o.l_defect, 1e-15);
  EXPECT_NEAR(a.eps, o.eps, 1e-14);
  EXPECT_NEAR(a.final_check_1, o.check1, 1e-14);
  EXPECT_NEAR(a.final_check_2, o.check2, 1e-14);
  EXPECT_NEAR(a.eps, 0.954, 5e-4);
  EXPECT_NEAR(a.final_check_1, 0.979, 5e-4);
  EXPECT_NEAR(a.final_check_2, 0.978, 5e-4);
  EXPECT_TRUE(a.feasible());
}

TEST(Audit, ThresholdExceedsReferenceGamma) {
  const double star = chain_feasibility_threshold(1.0);
  // Independent bisection on the oracle formulas.
  double lo = 0.0, hi = 0.125;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const auto o = oracle::chain(mid, 1.0);
    (o.check1 < 1.0 && o.check2 < 1.0 ? lo : hi) = mid;
  }
  EXPECT_NEAR(star, lo, 1e-12);
  EXPECT_GT(star, 1.0 / 164.0);
}

TEST(Audit, RejectsOutOfRange) {
  EXPECT_THROW(audit_chain(-1e-3, 1.0), Error);
  EXPECT_THROW(audit_chain(0.2, 1.0), Error);
  EXPECT_THROW(audit_chain(1e-3, 0.0), Error);
}

TEST(Pipeline, EqualAlgebras) {
  const auto n = block_diagonal_algebra({2, 1}, 3);
  const auto u = canonical_diagonal_element(n);
  const auto r = run_pipeline(n, n, &u, 0.0);
  EXPECT_EQ(r.verdict, Verdict::Success);
  ASSERT_TRUE(r.similarity.has_value());
  EXPECT_LE(r.s_minus_i, 1e-12);
  EXPECT_LE(r.conjugation_residual, 1e-12);
  EXPECT_LE(r.similarity->intertwining_residual, 1e-12);
  EXPECT_LE(r.pi_multiplicativity, 1e-12);
}

TEST(Pipeline, ShearedDiagonalAlgebra) {
  const double t = 1e-4;
  const auto n = block_diagonal_algebra({1, 1}, 2);
  const auto inst = make_instance(n, identity(2) + t * matrix_unit(2, 0, 1));
  Matrix g = matrix_unit(2, 0, 0);
  g(0, 1) = -t;
  EXPECT_LE(inst.m->space.residual(g), 1e-14);
  const auto r = run_pipeline(inst);
  EXPECT_EQ(r.verdict, Verdict::Success) << r.verdict_message;
  EXPECT_EQ(r.mode, "certified");
  EXPECT_LE(r.conjugation_residual, 1e-8);
  EXPECT_LE(r.s_minus_i, 656.0 * inst.u_m.certificate.h_norm.upper * inst.gamma_analytic);
  for (const auto& c : r.checks) EXPECT_TRUE(c.ok) << c.name;
}

TEST(Pipeline, SeedsOnTwoBlocks) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = run_pipeline(generate_instance({2, 1}, 3, 1e-5, seed));
    EXPECT_EQ(r.verdict, Verdict::Success) << "seed " << seed << ": " << r.verdict_message;
    EXPECT_LE(r.conjugation_forward, 1e-8);
    EXPECT_LE(r.conjugation_backward, 1e-8);
  }
}

TEST(Pipeline, RejectsUnknownMode) {
  PipelineOptions opt;
  opt.mode = "fast";
  EXPECT_THROW(run_pipeline(generate_instance({1, 1}, 2, 1e-4, 0), opt), Error);
}

TEST(Batch, EmptyGrid) {
  BatchConfig c;
  c.seeds = {0, 1};
  const auto s = run_batch(c);
  EXPECT_TRUE(s.entries.empty());
  EXPECT_TRUE(s.groups.empty());
  EXPECT_FALSE(s.failure_threshold.has_value());
}

TEST(Batch, InvalidConfig) {
  BatchConfig c;
  c.block_sizes = {2, 2};
  c.ambient_dim = 3;
  try {
    run_batch(c);
    FAIL() << "expected ConfigInvalid";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::ConfigInvalid);
  }
}

TEST(Batch, SuccessRateAndCertifiedGate) {
  BatchConfig c;
  c.t_grid = {1e-5, 1e-4, 1e-3, 1e-2};
  for (std::uint64_t s = 0; s < 25; ++s) c.seeds.push_back(s);
  const auto sum = run_batch(c);
  ASSERT_EQ(sum.groups.size(), 4u);
  for (std::size_t i = 1; i < sum.groups.size(); ++i)
    EXPECT_LE(sum.groups[i].success_rate, sum.groups[i - 1].success_rate);
  for (const auto& e : sum.entries) {
    const bool inside = e.gamma_analytic < 1.0 / (656.0 * e.u_norm_ub);
    EXPECT_EQ(e.report.mode, inside ? "certified" : "heuristic") << "t " << e.t << " seed " << e.seed;
    EXPECT_TRUE(e.report.similarity.has_value());
  }
  // One worker or several give the same summary.
  c.threads = 3;
  const auto again = run_batch(c);
  EXPECT_EQ(io::summary_csv(sum), io::summary_csv(again));
}

TEST(Io, ProblemRoundTripIsStable) {
  const std::string text = io::read_file(KKPERT_DATA_DIR "/m2_maps.json");
  const auto p = io::parse_problem(text);
  const std::string once = io::dump(io::to_json(p));
  const std::string twice = io::dump(io::to_json(io::parse_problem(once)));
  EXPECT_EQ(once, twice);
  ASSERT_EQ(p.maps.size(), 3u);
  EXPECT_EQ(p.maps[0].first, "transpose");
}

TEST(Io, MatrixEncodingIsLossless) {
  CounterRng rng(71);
  const Matrix m = rng.gaussian_matrix(3, 3);
  const auto j = io::Json::parse(io::to_json(m).dump());
  EXPECT_EQ((io::matrix_from_json(j, "$") - m).norm(), 0.0);
}

TEST(Io, UnknownFieldNamesItsPath) {
  auto j = io::Json::parse(io::read_file(KKPERT_DATA_DIR "/m2_diagonal.json"));
  j["diagonal"]["weight"] = 2;
  try {
    io::problem_from_json(j);
    FAIL() << "expected ParseError";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(err.what()).find("$.diagonal.weight"), std::string::npos) << err.what();
  }
  auto top = io::Json::parse(io::read_file(KKPERT_DATA_DIR "/m2_diagonal.json"));
  top["extra"] = true;
  EXPECT_THROW(io::problem_from_json(top), Error);
}

TEST(Io, StripTimingsRemovesNestedTimings) {
  io::Json j{{"a", 1}, {"timings", 2}, {"b", {{"timings", 3}, {"c", io::Json::array({io::Json{{"timings", 4}}})}}}};
  const auto s = io::strip_timings(j);
  EXPECT_EQ(s.dump(), R"({"a":1,"b":{"c":[{}]}})");
}

TEST(Golden, CsvHeader) {
  BatchConfig c;
  c.t_grid = {1e-4};
  c.seeds = {0};
  const std::string csv = io::summary_csv(run_batch(c));
  const auto golden = read_lines(KKPERT_GOLDEN_DIR "/summary_header.csv");
  ASSERT_EQ(golden.size(), 1u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), golden[0]);
}

TEST(Golden, ReportFieldNames) {
  const auto r = run_pipeline(generate_instance({2, 1}, 3, 1e-5, 7));
  const auto env = io::envelope("pipeline", io::Json::object(), r.seed, {}, "SUCCESS", io::to_json(r));
  EXPECT_EQ(keys_of(env), read_lines(KKPERT_GOLDEN_DIR "/envelope_keys.txt"));
  EXPECT_EQ(keys_of(env["result"]), read_lines(KKPERT_GOLDEN_DIR "/pipeline_report_keys.txt"));
}

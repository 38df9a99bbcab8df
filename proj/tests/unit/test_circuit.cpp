#include <gtest/gtest.h>

#include <cmath>

#include "rcwave/circuit.hpp"
#include "rcwave/rational.hpp"
#include "rcwave/spef.hpp"
#include "rcwave/transient.hpp"
#include "test_support.hpp"

using namespace rcwave;
using rcwave::test::code_of;
using cd = std::complex<double>;

namespace {

// drv -R1- n1 -R2- n2 ... with unit caps; output at the last node.
RcNetwork chain(const std::vector<double>& r, const std::vector<double>& c) {
  RcNetwork net;
  net.node_ids.push_back("a0");
  for (std::size_t k = 0; k < c.size(); ++k) net.node_ids.push_back("n" + std::to_string(k + 1));
  net.driver_node = 0;
  net.output_node = static_cast<int>(c.size());
  net.caps_to_ground.push_back({0, 0.0});
  for (std::size_t k = 0; k < c.size(); ++k) {
    net.conductances.push_back({static_cast<int>(k), static_cast<int>(k + 1), 1.0 / r[k]});
    net.caps_to_ground.push_back({static_cast<int>(k + 1), c[k]});
  }
  return net;
}

RcNetwork ladder5_network() {
  return to_network(spef::parse_spef(rcwave::test::ladder5_text())[0], "I1:Y", "I2:A");
}

const PoleTerm* find_pole(const TransferFunction& tf, double p, double tol = 1e-6) {
  for (const auto& t : tf.terms)
    if (std::abs(t.pole - p) <= tol * std::abs(p)) return &t;
  return nullptr;
}

}  // namespace

TEST(Assemble, SingleRc) {
  const auto sys = assemble_system(chain({1.0}, {1.0}));
  ASSERT_EQ(sys.size(), 1);
  EXPECT_DOUBLE_EQ(sys.G(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sys.C(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(sys.b(0), 1.0);
  EXPECT_DOUBLE_EQ(sys.e_out(0), 1.0);
}

TEST(Assemble, ThreeNodeLadderStructure) {
  const auto sys = assemble_system(chain({1.0, 2.0, 4.0}, {1.0, 2.0, 3.0}));
  ASSERT_EQ(sys.size(), 3);
  EXPECT_TRUE(sys.G.isApprox(sys.G.transpose()));
  Eigen::Matrix3d g;
  g << 1.5, -0.5, 0.0, -0.5, 0.75, -0.25, 0.0, -0.25, 0.25;
  EXPECT_TRUE(sys.G.isApprox(g, 1e-14));
  EXPECT_TRUE(sys.C.isApprox(Eigen::Vector3d(1, 2, 3).asDiagonal().toDenseMatrix()));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sys.G).eigenvalues().minCoeff(), 0.0);
}

TEST(Assemble, Ladder5) {
  const auto sys = assemble_system(ladder5_network());
  ASSERT_EQ(sys.size(), 5);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(sys.C(i, i), 21.3035e-15, 1e-27);
    for (int j = 0; j < 5; ++j) {
      if (i != j) EXPECT_EQ(sys.C(i, j), 0.0);
      if (std::abs(i - j) > 1) EXPECT_EQ(sys.G(i, j), 0.0);
    }
  }
}

TEST(ExtractTf, SingleRc) {
  const auto tf = extract_tf(chain({1.0}, {1.0}));
  ASSERT_EQ(tf.terms.size(), 1u);
  EXPECT_NEAR(tf.terms[0].pole, -1.0, 1e-12);
  ASSERT_EQ(tf.terms[0].residues.size(), 1u);
  EXPECT_NEAR(tf.terms[0].residues[0], 1.0, 1e-12);
  EXPECT_NEAR(tf.dc_gain, 1.0, 1e-12);
}

TEST(ExtractTf, TwoNodeLadderClosedForm) {
  const auto tf = extract_tf(chain({1.0, 1.0}, {1.0, 1.0}));
  const double p1 = -(3.0 - std::sqrt(5.0)) / 2.0, p2 = -(3.0 + std::sqrt(5.0)) / 2.0;
  const PoleTerm* a = find_pole(tf, p1);
  const PoleTerm* b = find_pole(tf, p2);
  ASSERT_TRUE(a && b);
  // H = 1 / ((s - p1)(s - p2))
  EXPECT_NEAR(a->residues[0], 1.0 / (p1 - p2), 1e-12);
  EXPECT_NEAR(b->residues[0], 1.0 / (p2 - p1), 1e-12);
  double dc = 0.0;
  for (const auto& t : tf.terms) dc += -t.residues[0] / t.pole;
  EXPECT_NEAR(dc, 1.0, 1e-12);
  EXPECT_EQ(tf.terms[0].pole, a->pole);  // slowest first
}

TEST(ExtractTf, Ladder5PolesAndReconstruction) {
  const auto net = ladder5_network();
  const auto sys = assemble_system(net);
  const auto tf = extract_tf(sys);
  ASSERT_EQ(tf.terms.size(), 5u);
  for (std::size_t i = 0; i < tf.terms.size(); ++i) {
    EXPECT_LT(tf.terms[i].pole, 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_NE(tf.terms[i].pole, tf.terms[j].pole);
  }
  EXPECT_NEAR(tf.dc_gain, 1.0, 1e-9);
  // Pointwise relative accuracy holds in the passband; past it |H| collapses
  // and rounding in the residues dominates, so the full sweep is checked
  // against the peak gain.
  const double w0 = tf.min_pole_magnitude();
  for (int k = 0; k < 20; ++k) {
    const double w = w0 * std::pow(10.0, -2.0 + 3.0 * k / 19.0);
    const cd h = direct_response(sys, cd(0, w));
    EXPECT_LT(std::abs(eval_tf(tf, cd(0, w)) - h) / std::abs(h), 1e-8) << "w=" << w;
  }
  EXPECT_LT(reconstruction_error_peak(tf, sys), 1e-12);
}

TEST(ExtractTf, ResidueRoutesAgree) {
  for (const auto& net : {chain({1.0, 1.0}, {1.0, 1.0}), ladder5_network(),
                          to_network(spef::generate_spef(8, 4, {}))}) {
    const auto sys = assemble_system(net);
    const auto tf = extract_tf(sys);
    std::vector<double> poles;
    for (const auto& t : tf.terms) poles.push_back(t.pole);
    const auto fit = fit_residues(sys, poles);
    double scale = 0.0;
    for (const auto& t : tf.terms) scale = std::max(scale, std::abs(t.residues[0]));
    for (std::size_t i = 0; i < poles.size(); ++i)
      EXPECT_LT(std::abs(fit[i] - tf.terms[i].residues[0]) / scale, 1e-7) << "term " << i;
  }
}

TEST(ExtractTf, RandomLaddersArePassive) {
  for (int i = 0; i < 60; ++i) {
    const int order = 2 + (i * 7) % 49;
    const auto tf = extract_tf(to_network(spef::generate_spef(order, 500 + i, {})));
    EXPECT_EQ(tf.order(), order);
    for (const auto& t : tf.terms) EXPECT_LT(t.pole, 0.0);
    EXPECT_NEAR(tf.dc_gain, 1.0, 1e-9);
    EXPECT_NEAR(std::real(eval_tf(tf, 0.0)), 1.0, 1e-9) << "order " << order;
  }
}

TEST(ExtractTf, FloatingNodeIsSingular) {
  RcNetwork net = chain({1.0, 1.0}, {1.0, 1.0});
  net.node_ids.push_back("z");
  net.caps_to_ground.push_back({3, 1.0});
  EXPECT_EQ(code_of([&] { assemble_system(net); }), ErrorCode::SingularSystem);
}

TEST(EvalTf, SingleTerm) {
  TransferFunction tf{{{-1.0, 1, {1.0}}}, 1.0};
  EXPECT_NEAR(std::abs(eval_tf(tf, 0.0) - cd(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval_tf(tf, cd(0, 1)) - cd(0.5, -0.5)), 0.0, 1e-15);
  EXPECT_EQ(code_of([&] { eval_tf(tf, cd(-1.0, 0.0)); }), ErrorCode::PoleEvaluation);
}

TEST(EvalTf, RepeatedTerm) {
  TransferFunction tf{{{-2.0, 2, {1.0, 3.0}}}, 0.0};
  const cd s(0.5, 1.5);
  EXPECT_NEAR(std::abs(eval_tf(tf, s) - (1.0 / (s + 2.0) + 3.0 / ((s + 2.0) * (s + 2.0)))), 0.0,
              1e-14);
}

TEST(ExpandRepeated, PureDoublePole) {
  const RationalFunction h{{1.0}, poly_from_roots({-1.0, -1.0})};
  const auto tf = expand_repeated(h, 1e-6);
  ASSERT_EQ(tf.terms.size(), 1u);
  EXPECT_NEAR(tf.terms[0].pole, -1.0, 1e-9);
  EXPECT_EQ(tf.terms[0].multiplicity, 2);
  EXPECT_NEAR(tf.terms[0].residues[0], 0.0, 1e-9);
  EXPECT_NEAR(tf.terms[0].residues[1], 1.0, 1e-9);
}

TEST(ExpandRepeated, MixedMultiplicity) {
  const RationalFunction h{{3.0, 2.0}, poly_from_roots({-1.0, -1.0, -2.0})};
  const auto tf = expand_repeated(h, 1e-6);
  ASSERT_EQ(tf.terms.size(), 2u);
  const PoleTerm* a = find_pole(tf, -1.0);
  const PoleTerm* b = find_pole(tf, -2.0);
  ASSERT_TRUE(a && b);
  ASSERT_EQ(a->multiplicity, 2);
  EXPECT_NEAR(a->residues[0], 1.0, 1e-9);
  EXPECT_NEAR(a->residues[1], 1.0, 1e-9);
  ASSERT_EQ(b->multiplicity, 1);
  EXPECT_NEAR(b->residues[0], -1.0, 1e-9);
  EXPECT_NEAR(tf.dc_gain, 1.5, 1e-9);
}

TEST(ExpandRepeated, NearCoincidentPolesMerge) {
  const RationalFunction h{{1.0}, poly_from_roots({-1.0, -1.0000001})};
  const auto tf = expand_repeated(h, 1e-3);
  ASSERT_EQ(tf.terms.size(), 1u);
  EXPECT_EQ(tf.terms[0].multiplicity, 2);
  for (double w : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const cd s(0.0, w);
    const cd ref = eval_rational(h, s);
    EXPECT_LT(std::abs(eval_tf(tf, s) - ref) / std::abs(ref), 1e-6) << w;
  }
}

TEST(ExpandRepeated, ClusteringDisabled) {
  const RationalFunction h{{1.0}, poly_from_roots({-1.0, -3.0})};
  const auto tf = expand_repeated(h, 0.0);
  ASSERT_EQ(tf.terms.size(), 2u);
  EXPECT_NEAR(find_pole(tf, -1.0)->residues[0], 0.5, 1e-12);
  EXPECT_NEAR(find_pole(tf, -3.0)->residues[0], -0.5, 1e-12);
}

TEST(Truncate, NoOpAtFullSize) {
  const auto tf = extract_tf(ladder5_network());
  const auto t = truncate_dominant(tf, 5);
  ASSERT_EQ(t.terms.size(), 5u);
  for (const auto& term : tf.terms) EXPECT_NE(find_pole(t, term.pole, 0.0), nullptr);
  EXPECT_NEAR(t.dc_gain, tf.dc_gain, 1e-12);
}

TEST(Truncate, KeepsHeavierTerm) {
  TransferFunction tf{{{-2.0, 1, {0.1}}, {-1.0, 1, {10.0}}}, 0.0};
  tf.dc_gain = dc_gain_of(tf.terms);
  const auto t = truncate_dominant(tf, 1);
  ASSERT_EQ(t.terms.size(), 1u);
  EXPECT_DOUBLE_EQ(t.terms[0].residues[0], 10.0);
  EXPECT_DOUBLE_EQ(t.dc_gain, 10.0);
  EXPECT_EQ(code_of([&] { truncate_dominant(tf, 0); }), ErrorCode::InvalidArgument);
}

TEST(Truncate, Ladder5TwoTermsTrackStepResponse) {
  const auto tf = extract_tf(ladder5_network());
  const auto t2 = truncate_dominant(tf, 2);
  const double span = default_t_span(tf);
  const auto full = analytic_response(tf, Stimulus::step(), span, 256);
  const auto approx = analytic_response(t2, Stimulus::step(), span, 256);
  EXPECT_LT(rmse(full.samples, approx.samples), 0.05);
}

TEST(TransferFunctionJson, RoundTrip) {
  const auto tf = extract_tf(ladder5_network());
  EXPECT_EQ(transfer_function_from_json(to_json(tf)), tf);
  EXPECT_EQ(code_of([] { transfer_function_from_json("{\"terms\": 3}"); }),
            ErrorCode::SchemaMismatch);
}

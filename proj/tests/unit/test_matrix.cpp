#include <algorithm>
#include <cmath>
#include <vector>

#include "helpers.hpp"

namespace tlae {
namespace {

using test::error_kind_of;
using test::error_message_of;
using test::random_matrix;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Matrix m = random_matrix(3, 4, 1);
  EXPECT_EQ(matmul(Matrix::identity(3), m), m);
}

TEST(Matmul, HandExample) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{1}, {1}};
  EXPECT_EQ(matmul(a, b), (Matrix{{3}, {7}}));
}

TEST(Matmul, ZeroAnnihilates) {
  const Matrix m = random_matrix(4, 2, 2);
  EXPECT_EQ(matmul(Matrix(3, 4), m), Matrix(3, 2));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  const Matrix a(2, 3), b(2, 3);
  EXPECT_EQ(error_kind_of([&] { matmul(a, b); }), ErrorKind::dimension);
  const std::string msg = error_message_of([&] { matmul(a, b); });
  EXPECT_NE(msg.find(a.shape_string()), std::string::npos) << msg;
  EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
}

TEST(Matmul, TransposedVariantsAgree) {
  const Matrix a = random_matrix(5, 3, 3), b = random_matrix(5, 4, 4), c = random_matrix(2, 3, 5);
  EXPECT_LT(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)), 1e-14);
  EXPECT_LT(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))), 1e-14);
}

TEST(Matmul, Associative) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix a = random_matrix(3, 5, 10 * s), b = random_matrix(5, 4, 10 * s + 1),
                 c = random_matrix(4, 2, 10 * s + 2);
    const Matrix left = matmul(matmul(a, b), c), right = matmul(a, matmul(b, c));
    EXPECT_LT(max_abs_diff(left, right) / std::max(1.0, frobenius_norm(left)), 1e-10);
  }
}

TEST(Transpose, Involution) {
  const Matrix a = random_matrix(3, 7, 6);
  EXPECT_EQ(transpose(transpose(a)), a);
}

TEST(Transpose, ProductReversesOrder) {
  const Matrix a = random_matrix(3, 5, 7), b = random_matrix(5, 4, 8);
  EXPECT_LT(max_abs_diff(transpose(matmul(a, b)), matmul(transpose(b), transpose(a))), 1e-12);
}

TEST(Elementwise, Examples) {
  const Matrix v{{-1, 0, 2}};
  EXPECT_EQ(ew(EwOp::relu, v), (Matrix{{0, 0, 2}}));
  EXPECT_EQ(ew(EwOp::sigmoid, Matrix{{0}})(0, 0), 0.5);
  EXPECT_EQ(ew(EwOp::tanh, Matrix{{0}})(0, 0), 0.0);
  EXPECT_EQ(ew(EwOp::abs, v), (Matrix{{1, 0, 2}}));
  const Matrix w{{2, 3, 4}};
  EXPECT_EQ(ew(EwOp::add, v, &w), (Matrix{{1, 3, 6}}));
  EXPECT_EQ(ew(EwOp::sub, v, &w), (Matrix{{-3, -3, -2}}));
  EXPECT_EQ(ew(EwOp::mul, v, &w), (Matrix{{-2, 0, 8}}));
  EXPECT_NEAR(ew(EwOp::log, ew(EwOp::exp, w))(0, 2), 4.0, 1e-15);
}

TEST(Elementwise, LogOfNonPositiveIsDomainError) {
  EXPECT_EQ(error_kind_of([] { ew(EwOp::log, Matrix{{1, 0}}); }), ErrorKind::domain);
  EXPECT_EQ(error_kind_of([] { ew(EwOp::log, Matrix{{-2}}); }), ErrorKind::domain);
}

TEST(Elementwise, BinaryOpsNeedEqualShapes) {
  const Matrix a(2, 2), b(2, 3);
  EXPECT_EQ(error_kind_of([&] { ew(EwOp::add, a, &b); }), ErrorKind::dimension);
  EXPECT_EQ(error_kind_of([&] { ew(EwOp::mul, a); }), ErrorKind::contract);
}

TEST(Normal, DeterministicPerStream) {
  RngStream a(7, 3), b(7, 3), c(7, 4);
  const Matrix x = sample_std_normal(a, 4, 5);
  EXPECT_EQ(x, sample_std_normal(b, 4, 5));
  EXPECT_NE(x, sample_std_normal(c, 4, 5));
}

TEST(Normal, MomentsAndKolmogorovSmirnov) {
  constexpr std::size_t N = 1'000'000;
  RngStream rng(2024, 0);
  const Matrix x = sample_std_normal(rng, 1, N);
  std::vector<double> v(x.data().begin(), x.data().end());
  double mean = 0.0;
  for (double d : v) mean += d;
  mean /= N;
  double var = 0.0;
  for (double d : v) var += (d - mean) * (d - mean);
  var /= N - 1;
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(var, 1.0, 0.01);

  std::sort(v.begin(), v.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double cdf = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
    ks = std::max({ks, std::fabs(cdf - double(i) / N), std::fabs(double(i + 1) / N - cdf)});
  }
  EXPECT_LT(ks, 0.002);
}

TEST(Normal, UniformStaysInsideOpenInterval) {
  RngStream rng(0, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace tlae

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "svrhmc/data.hpp"

using namespace svrhmc;

namespace {

Dataset libsvm(const std::string& text, LibsvmOptions opts = {}) {
  std::istringstream in(text);
  return parse_libsvm(in, opts);
}

Dataset delimited(const std::string& text, DelimitedOptions opts = {}) {
  std::istringstream in(text);
  return parse_delimited(in, opts);
}

// Expects a parse_error at the given position.
template <class F>
void expect_parse_error(F&& f, std::size_t line, std::size_t column) {
  try {
    f();
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, TaskType task) {
  Engine rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution sparse(0.3), coin;
  Dataset ds;
  ds.task = task;
  ds.features = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j)
      if (task == TaskType::regression || sparse(rng)) ds.features(i, j) = normal(rng) * 10;
    ds.labels(i) = task == TaskType::classification ? (coin(rng) ? 1.0 : -1.0) : normal(rng);
  }
  return ds;
}

}  // namespace

TEST(ParseLibsvm, DecodesSparseRows) {
  const auto ds = libsvm("+1 1:0.5 3:2.0\n-1 2:1.0\n");
  Matrix expected(2, 3);
  expected << 0.5, 0, 2, 0, 1, 0;
  EXPECT_EQ(ds.features, expected);
  EXPECT_EQ(ds.labels, Vector((Vector(2) << 1, -1).finished()));
  EXPECT_EQ(ds.task, TaskType::classification);
}

TEST(ParseLibsvm, LabelOnlyLineIsZeroRow) {
  const auto ds = libsvm("+1\n-1 2:3\n");
  EXPECT_EQ(ds.features.row(0).norm(), 0.0);
  EXPECT_EQ(ds.features.cols(), 2);
}

TEST(ParseLibsvm, MapsZeroOneAndOneTwoLabels) {
  const auto a = libsvm("0 1:1\n1 1:2\n");
  EXPECT_EQ(a.labels, Vector((Vector(2) << -1, 1).finished()));
  EXPECT_EQ(a.notes.size(), 1u);
  const auto b = libsvm("2 1:1\n1 1:2\n");
  EXPECT_EQ(b.labels, Vector((Vector(2) << 1, -1).finished()));
}

TEST(ParseLibsvm, PositionedErrors) {
  expect_parse_error([] { libsvm("+1 1:0.5\nx 1:1\n"); }, 2, 1);
  expect_parse_error([] { libsvm("+1 1:0.5 2-3\n"); }, 1, 3);
  expect_parse_error([] { libsvm("+1 0:1\n"); }, 1, 2);
  expect_parse_error([] { libsvm("+1 1:abc\n"); }, 1, 2);
  expect_parse_error([] { libsvm("+1 2:1 1:1\n"); }, 1, 3);
  expect_parse_error([] { libsvm("+1 1:1\n\n-1 1:2\n"); }, 2, 0);
  expect_parse_error([] { libsvm("1 1:1\n2 1:1\n3 1:1\n"); }, 3, 1);
  expect_parse_error([] { libsvm("1 1:1\n5 1:1\n"); }, 2, 1);
  expect_parse_error([] { libsvm("+1 4:1\n", {3}); }, 1, 2);
  expect_parse_error([] { libsvm(""); }, 0, 0);
}

TEST(ParseLibsvm, EveryLineYieldsRowOrError) {
  const auto ds = libsvm("+1 1:1\n-1\n+1 2:2\n-1 1:-1 2:1\n");
  EXPECT_EQ(ds.rows(), 4u);
}

TEST(ParseLibsvm, RoundTrip) {
  const auto ds = random_dataset(40, 6, 1, TaskType::classification);
  std::ostringstream out;
  write_libsvm(out, ds);
  const auto back = libsvm(out.str(), {6});
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(ParseLibsvm, BundledDatasets) {
  const auto pima = parse_libsvm_file(std::string(SVRHMC_DATA_DIR) + "/pima.libsvm");
  EXPECT_EQ(pima.rows(), 768u);
  EXPECT_EQ(pima.cols(), 8u);
  EXPECT_EQ((pima.labels.array() > 0).count(), 268);
  const auto mushroom = parse_libsvm_file(std::string(SVRHMC_DATA_DIR) + "/mushroom.libsvm");
  EXPECT_EQ(mushroom.rows(), 5644u);
}

TEST(ParseDelimited, LastColumnIsResponse) {
  const auto ds = delimited("1,2,3\n4,5,6\n");
  Matrix expected(2, 2);
  expected << 1, 2, 4, 5;
  EXPECT_EQ(ds.features, expected);
  EXPECT_EQ(ds.labels, Vector((Vector(2) << 3, 6).finished()));
  EXPECT_EQ(ds.task, TaskType::regression);
}

TEST(ParseDelimited, ChosenResponseColumn) {
  DelimitedOptions opts;
  opts.response_column = 0;
  const auto ds = delimited("1\t2\t3\n4\t5\t6\n", opts);
  EXPECT_EQ(ds.labels, Vector((Vector(2) << 1, 4).finished()));
  EXPECT_EQ(ds.features(1, 1), 6.0);
}

TEST(ParseDelimited, DetectsWhitespaceAndTab) {
  EXPECT_EQ(delimited("1  2 3\n 4 5\t6\n").features(1, 1), 5.0);
  EXPECT_EQ(delimited("1\t2\t3\n").features.cols(), 2);
}

TEST(ParseDelimited, HeaderRowIsSkippedWithNote) {
  const auto ds = delimited("freq,angle,sound\n1,2,3\n4,5,6\n");
  EXPECT_EQ(ds.rows(), 2u);
  ASSERT_EQ(ds.notes.size(), 1u);
  EXPECT_NE(ds.notes[0].find("header"), std::string::npos);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"freq", "angle"}));
}

TEST(ParseDelimited, PositionedErrors) {
  expect_parse_error([] { delimited("1,2,3\n4,5\n"); }, 2, 0);
  expect_parse_error([] { delimited("1,2,3\n4,x,6\n"); }, 2, 2);
  expect_parse_error([] { delimited("a,b,c\nd,e,f\n"); }, 2, 1);
  expect_parse_error([] { delimited("1,2,3\n\n4,5,6\n"); }, 2, 0);
}

TEST(ParseDelimited, RoundTrip) {
  auto ds = random_dataset(30, 4, 2, TaskType::regression);
  ds.feature_names = {"a", "b", "c", "d"};
  std::ostringstream out;
  write_delimited(out, ds);
  const auto back = delimited(out.str());
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.feature_names, ds.feature_names);
}

TEST(Normalize, StandardisesColumns) {
  Dataset ds;
  ds.features = Matrix(2, 2);
  ds.features << 0, 5, 2, 5;
  ds.labels = Vector::Zero(2);
  const auto out = normalize(ds);
  EXPECT_EQ(out.features(0, 0), -1.0);
  EXPECT_EQ(out.features(1, 0), 1.0);
  EXPECT_EQ(out.features.col(1), ds.features.col(1));
  ASSERT_EQ(out.normalization->constant_columns, std::vector<std::size_t>{1});
  ASSERT_EQ(out.notes.size(), 1u);
}

TEST(Normalize, Idempotent) {
  const auto ds = random_dataset(50, 5, 3, TaskType::regression);
  const auto once = normalize(ds, {true});
  const auto twice = normalize(once, {true});
  EXPECT_LT((once.features - twice.features).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((once.labels - twice.labels).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Normalize, InterceptColumn) {
  const auto ds = with_intercept(random_dataset(5, 2, 4, TaskType::classification));
  EXPECT_EQ(ds.features.cols(), 3);
  EXPECT_EQ(ds.features.col(2), Vector::Ones(5));
}

TEST(Split, HalvesAndIsDeterministic) {
  const auto ds = random_dataset(384, 3, 5, TaskType::classification);
  const auto a = split(ds, 0.5, 99);
  const auto b = split(ds, 0.5, 99);
  EXPECT_EQ(a.train.rows(), 192u);
  EXPECT_EQ(a.test.rows(), 192u);
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_EQ(a.train.features, b.train.features);
  EXPECT_NE(split(ds, 0.5, 100).train_rows, a.train_rows);
}

TEST(Split, PartitionsAreComplementary) {
  const auto ds = random_dataset(101, 2, 6, TaskType::regression);
  const auto r = split(ds, 0.3, 7, {false, false});
  std::vector<std::size_t> all = r.train_rows;
  all.insert(all.end(), r.test_rows.begin(), r.test_rows.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(r.train.rows(), 30u);
  for (std::size_t i = 0; i < r.train_rows.size(); ++i)
    EXPECT_EQ(r.train.features.row(static_cast<Eigen::Index>(i)),
              ds.features.row(static_cast<Eigen::Index>(r.train_rows[i])));
}

TEST(Split, NormalisesWithTrainingStatisticsOnly) {
  const auto ds = random_dataset(200, 3, 8, TaskType::regression);
  const auto r = split(ds, 0.5, 9, {true, true});
  EXPECT_LT(r.train.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(std::abs(r.train.labels.mean()), 1e-12);
  EXPECT_GT(r.test.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
  const auto raw = select_rows(ds, r.test_rows);
  const auto& norm = *r.train.normalization;
  EXPECT_LT(((raw.features(0, 1) - norm.shift(1)) / norm.scale(1)) - r.test.features(0, 1), 1e-15);
}

TEST(Split, RejectsEmptyPartitions) {
  const auto ds = random_dataset(3, 2, 10, TaskType::regression);
  EXPECT_THROW(split(ds, 0.1, 1), usage_error);
  EXPECT_THROW(split(ds, 1.0, 1), usage_error);
}

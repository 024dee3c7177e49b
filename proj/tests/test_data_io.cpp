#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include <nuacdm/nuacdm.hpp>

using namespace nuacdm;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

std::string write(const Dataset& ds) {
  std::ostringstream out;
  write_libsvm(out, ds);
  return out.str();
}

void expect_parse_error(const std::string& text, std::size_t line, std::size_t column) {
  try {
    parse(text);
    FAIL() << "no error for: " << text;
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
  }
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(LibSvm, ParsesOneLine) {
  const Dataset ds = parse("1 1:0.5 3:2.0\n");
  ASSERT_EQ(ds.features.rows(), 1);
  EXPECT_EQ(ds.labels[0], 1.0);
  const auto row = ds.features.row(0);
  ASSERT_EQ(row.size(), 2u);
  EXPECT_EQ(row[0].col, 0);
  EXPECT_EQ(row[0].value, 0.5);
  EXPECT_EQ(row[1].col, 2);
  EXPECT_EQ(row[1].value, 2.0);
  EXPECT_EQ(ds.features.cols(), 3);
}

TEST(LibSvm, EmptyFeatureListIsZeroRow) {
  const Dataset ds = parse("-1\n+1 2:1\n");
  ASSERT_EQ(ds.features.rows(), 2);
  EXPECT_EQ(ds.labels[0], -1.0);
  EXPECT_TRUE(ds.features.row(0).empty());
  EXPECT_EQ(ds.labels[1], 1.0);
}

TEST(LibSvm, CommentsAndBlankLines) {
  const Dataset ds = parse("# header\n\n2 1:1 # trailing\n   \n3 2:4\n");
  ASSERT_EQ(ds.features.rows(), 2);
  EXPECT_EQ(ds.labels[1], 3.0);
}

TEST(LibSvm, ExplicitDimension) {
  std::istringstream in("1 1:1\n");
  EXPECT_EQ(parse_libsvm(in, 10).features.cols(), 10);
  std::istringstream bad("1 5:1\n");
  EXPECT_THROW(parse_libsvm(bad, 3), InvalidArgument);
}

TEST(LibSvm, ReportsErrorPositions) {
  expect_parse_error("1 1:1\nabc 1:2\n", 2, 1);
  expect_parse_error("1 1:1 2x3\n", 1, 7);
  expect_parse_error("1 1:1 q:3\n", 1, 7);
  expect_parse_error("1 1:1 0:3\n", 1, 7);
  expect_parse_error("1 2:1 2:3\n", 1, 7);
  expect_parse_error("1 3:1 2:3\n", 1, 7);
  expect_parse_error("1 1:nan\n", 1, 3);
  expect_parse_error("1 1:inf\n", 1, 3);
  expect_parse_error("1 1:1e999\n", 1, 3);
}

TEST(LibSvm, MissingFileIsIoError) {
  EXPECT_THROW(parse_libsvm(std::string("/nonexistent/dir/data.svm")), IoError);
}

TEST(LibSvm, RoundTrip) {
  Rng rng(1);
  std::vector<std::vector<SparseEntry>> rows(1000);
  Vector labels(1000);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index c = 0; c < 40; ++c) {
      if (rng.uniform() < 0.2) rows[r].push_back({c, rng.normal() * std::pow(10.0, rng.uniform(-30, 30))});
    }
    labels[static_cast<Index>(r)] = rng.normal();
  }
  const Dataset ds{SparseRowMatrix(40, rows), labels};
  std::istringstream in(write(ds));
  const Dataset back = parse_libsvm(in, 40);
  ASSERT_EQ(back.features.rows(), 1000);
  for (Index r = 0; r < 1000; ++r) {
    EXPECT_TRUE(bit_equal(back.labels[r], labels[r]));
    const auto a = ds.features.row(r);
    const auto b = back.features.row(r);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].col, b[k].col);
      EXPECT_TRUE(bit_equal(a[k].value, b[k].value));
    }
  }
}

TEST(LinearSystemGen, UniformNorms) {
  const LinearSystem sys = gen_linear_system(50, 20, 1.0, 3);
  for (Index i = 0; i < 50; ++i) EXPECT_NEAR(sys.a.row_norm(i), 10.0, 1e-12);
  EXPECT_EQ(sys.hi_rows, 50);
}

TEST(LinearSystemGen, SkewedNorms) {
  const LinearSystem sys = gen_linear_system(300, 100, 0.1, 4);
  int hi = 0, lo = 0;
  for (Index i = 0; i < 300; ++i) {
    const double nrm = sys.a.row_norm(i);
    if (std::abs(nrm - 10.0) <= 1e-12) ++hi;
    if (std::abs(nrm - 1.0) <= 1e-12) ++lo;
  }
  EXPECT_EQ(hi, 30);
  EXPECT_EQ(lo, 270);
  EXPECT_EQ(hi_row_count(0.1, 300), 30);
  EXPECT_EQ(hi_row_count(0.0, 300), 0);
  EXPECT_EQ(hi_row_count(0.15, 10), 2);
}

TEST(LinearSystemGen, RightHandSideIsExact) {
  const LinearSystem sys = gen_linear_system(300, 100, 0.1, 5);
  const Vector resid = sys.b - sys.a.multiply(sys.x_star);
  EXPECT_EQ(resid, Vector::Zero(300));
}

TEST(LinearSystemGen, PureFunctionOfSeed) {
  const LinearSystem a = gen_linear_system(30, 10, 0.2, 6);
  const LinearSystem b = gen_linear_system(30, 10, 0.2, 6);
  const LinearSystem c = gen_linear_system(30, 10, 0.2, 7);
  EXPECT_EQ(a.a.to_dense(), b.a.to_dense());
  EXPECT_EQ(a.x_star, b.x_star);
  EXPECT_NE(a.a.to_dense(), c.a.to_dense());
}

TEST(LinearSystemGen, Errors) {
  EXPECT_THROW(gen_linear_system(0, 5, 0.1, 0), InvalidArgument);
  EXPECT_THROW(gen_linear_system(5, 0, 0.1, 0), InvalidArgument);
  EXPECT_THROW(gen_linear_system(5, 5, 1.5, 0), InvalidArgument);
  EXPECT_THROW(gen_linear_system(5, 5, 0.5, 0, -1.0), InvalidArgument);
}

TEST(DatasetGen, NormsMatchProfile) {
  const Vector norms = norm_profile::log_uniform(80, 0.1, 10.0, 1);
  const Dataset ds = gen_skewed_dataset(80, 12, norms, 2);
  for (Index i = 0; i < 80; ++i) EXPECT_NEAR(ds.features.row_norm(i), norms[i], 1e-12 * norms[i]);
}

TEST(DatasetGen, ConstantProfileHasNoSpeedup) {
  const Dataset ds = gen_skewed_dataset(100, 10, norm_profile::constant(100, 2.0), 3);
  EXPECT_NEAR(speedup_factor(build_ridge_dual(ds.features, ds.labels, 1e-3).profile), 1.0, 1e-9);
}

TEST(DatasetGen, TwoLevelProfileHasSpeedup) {
  const Index n = 200;
  const Dataset ds = gen_skewed_dataset(n, 10, norm_profile::two_level(n, 0.1, 10.0, 1.0), 4);
  // lambda <= |a|^2 / n for the low-norm rows
  for (double lambda : {1.0 / n, 1e-3, 1e-5}) {
    EXPECT_GT(speedup_factor(build_ridge_dual(ds.features, ds.labels, lambda).profile), 1.3) << lambda;
  }
}

TEST(DatasetGen, Errors) {
  EXPECT_THROW(gen_skewed_dataset(3, 2, norm_profile::constant(3, 0.0), 0), InvalidArgument);
  EXPECT_THROW(gen_skewed_dataset(3, 2, norm_profile::constant(2, 1.0), 0), InvalidArgument);
}

TEST(Trace, EmptyListIsHeaderOnly) {
  std::ostringstream out;
  write_trace(out, {});
  EXPECT_EQ(out.str(), std::string(kTraceHeader) + "\n");
  std::istringstream in(out.str());
  EXPECT_TRUE(read_trace(in).empty());
}

TEST(Trace, OneRecordLayout) {
  ConvergenceTrace t;
  t.records.push_back({12, 1.5, 0.25, 0.125});
  std::ostringstream out;
  write_trace(out, {{"nu-acdm", 7, t}});
  EXPECT_EQ(out.str(), std::string(kTraceHeader) + "\nnu-acdm,7,12,1.5,0.25,0.125\n");
  ConvergenceTrace u;
  u.records.push_back({0, 0.0, 3.0, std::nullopt});
  std::ostringstream out2;
  write_trace(out2, {{"gd", 0, u}});
  EXPECT_EQ(out2.str(), std::string(kTraceHeader) + "\ngd,0,0,0,3,\n");
}

TEST(Trace, RandomRoundTrip) {
  Rng rng(8);
  std::vector<LabeledTrace> traces;
  for (int t = 0; t < 10; ++t) {
    LabeledTrace lt{t % 2 ? "acdm" : "rcdm", static_cast<std::uint64_t>(t), {}};
    for (int k = 0; k < 1000; ++k) {
      TraceRecord r;
      r.iter = k * 3;
      r.epoch = rng.uniform() * 1e3;
      r.value = rng.normal() * std::pow(10.0, rng.uniform(-300, 300));
      if (rng.uniform() < 0.8) r.dist = std::abs(rng.normal()) * std::pow(10.0, rng.uniform(-300, 10));
      lt.trace.records.push_back(r);
    }
    traces.push_back(lt);
  }
  std::stringstream io;
  write_trace(io, traces);
  const auto back = read_trace(io);
  ASSERT_EQ(back.size(), traces.size());
  for (std::size_t t = 0; t < traces.size(); ++t) {
    EXPECT_EQ(back[t].algo, traces[t].algo);
    EXPECT_EQ(back[t].seed, traces[t].seed);
    ASSERT_EQ(back[t].trace.size(), traces[t].trace.size());
    for (std::size_t k = 0; k < traces[t].trace.size(); ++k) {
      const auto& a = traces[t].trace.records[k];
      const auto& b = back[t].trace.records[k];
      EXPECT_EQ(a.iter, b.iter);
      EXPECT_TRUE(bit_equal(a.epoch, b.epoch));
      EXPECT_TRUE(bit_equal(a.value, b.value));
      ASSERT_EQ(a.dist.has_value(), b.dist.has_value());
      if (a.dist) {
        EXPECT_TRUE(bit_equal(*a.dist, *b.dist));
      }
    }
  }
}

TEST(Trace, SchemaViolations) {
  const std::string h = std::string(kTraceHeader) + "\n";
  auto bad = [](const std::string& s) {
    std::istringstream in(s);
    EXPECT_THROW(read_trace(in), ParseError) << s;
  };
  bad("");
  bad("algo,seed\n");
  bad(h + "a,1,2,3,4\n");
  bad(h + "a,x,2,3,4,5\n");
  bad(h + "a,1,-2,3,4,5\n");
  bad(h + "a,1,2,e,4,5\n");
  bad(h + "a,1,2,3,4,5,6\n");
  EXPECT_THROW(read_trace(std::string("/nonexistent/trace.csv")), IoError);
  EXPECT_THROW(write_trace({}, std::string("/nonexistent/dir/trace.csv")), IoError);
}

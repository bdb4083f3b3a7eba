#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "covtest/datagen.hpp"

using namespace covtest;
using namespace covtest::datagen;

namespace {

/// Largest |sample - population| covariance entry, in units of sqrt(S_ii S_jj / n).
double worst_standardized_gap(const GeneratorSpec& spec, Index n, std::uint64_t seed) {
  const auto sigma = population_covariance(spec);
  EXPECT_TRUE(sigma.has_value());
  const auto s = sample_covariance(generate(spec, n, seed));
  double worst = 0;
  for (Index i = 0; i < s.dim(); ++i)
    for (Index j = 0; j < s.dim(); ++j) {
      const double scale = std::sqrt((*sigma)(i, i) * (*sigma)(j, j) / static_cast<double>(n));
      worst = std::max(worst, std::abs(s(i, j) - (*sigma)(i, j)) / scale);
    }
  return worst;
}

std::vector<double> draws(const Distribution& d, Index count, std::uint64_t seed) {
  MatrixX<double> m(count, 1);
  auto engine = rng::make_engine(seed, {});
  d.fill(m, engine);
  return {m.data(), m.data() + m.size()};
}

}  // namespace

TEST(Distribution, ParsesAliasesAndRoundTrips) {
  EXPECT_EQ(Distribution::parse("N(0, 1)"), Distribution(Normal{0, 1}));
  EXPECT_EQ(Distribution::parse("gamma(0.5, sqrt(2))"), Distribution(Gamma{0.5, std::sqrt(2.0)}));
  EXPECT_EQ(Distribution::parse("Log-Normal(0,1)"), Distribution(LogNormal{0, 1}));
  EXPECT_EQ(Distribution::parse("student-t(5)"), Distribution(StudentT{5}));
  for (const char* text : {"normal(4,1)", "gamma(4,0.5)", "lognormal(0,1)", "t(5)", "gumbel(10,2)", "poisson(3)",
                           "uniform(-1,2)", "bernoulli(0.25)", "gamma(0.5,1.4142135623730951)"}) {
    const auto d = Distribution::parse(text);
    EXPECT_EQ(d.to_string(), text);
    EXPECT_EQ(Distribution::parse(d.to_string()), d);
  }
}

TEST(Distribution, RejectsBadInput) {
  for (const char* text : {"normal(0,0)", "normal(0)", "gamma(-1,1)", "cauchy(0,1)", "t()", "normal 0 1",
                           "bernoulli(1.5)", "uniform(2,1)", "gamma(1,sqrt(-1))", "poisson(x)"}) {
    EXPECT_THROW(Distribution::parse(text), InputError) << text;
  }
}

TEST(Distribution, TheoreticalMoments) {
  EXPECT_DOUBLE_EQ(Distribution(Gamma{4, 0.5}).mean(), 2.0);
  EXPECT_DOUBLE_EQ(Distribution(Gamma{4, 0.5}).variance(), 1.0);
  EXPECT_DOUBLE_EQ(Distribution(Gamma{0.5, std::sqrt(2.0)}).variance(), 1.0);
  EXPECT_DOUBLE_EQ(Distribution(StudentT{5}).variance(), 5.0 / 3.0);
  EXPECT_TRUE(std::isinf(Distribution(StudentT{2}).variance()));
  EXPECT_NEAR(Distribution(Gumbel{10, 2}).mean(), 10 + 2 * 0.5772156649, 1e-9);
  EXPECT_NEAR(Distribution(LogNormal{0, 1}).variance(), (std::exp(1.0) - 1) * std::exp(1.0), 1e-12);
  EXPECT_DOUBLE_EQ(Distribution(Normal{4, 1}).snr(), 4.0);
  EXPECT_DOUBLE_EQ(Distribution(Normal{0, 3}).snr(), 0.0);
}

TEST(Distribution, SampleMomentsMatchTheory) {
  for (const auto& d : {Distribution(Normal{2, 3}), Distribution(Gamma{4, 0.5}), Distribution(Gamma{0.5, 1.5}),
                        Distribution(StudentT{5}), Distribution(Gumbel{10, 2}), Distribution(Poisson{3}),
                        Distribution(Uniform{-1, 2}), Distribution(Bernoulli{0.3}), Distribution(LogNormal{0, 0.5})}) {
    const auto x = draws(d, 200000, 5);
    const Eigen::Map<const VectorX<double>> v(x.data(), static_cast<Index>(x.size()));
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
    EXPECT_NEAR(mean, d.mean(), 6 * std::sqrt(d.variance() / 200000.0)) << d.to_string();
    EXPECT_NEAR(var, d.variance(), 0.03 * d.variance()) << d.to_string();
  }
}

TEST(Generators, ValidationRejectsBrokenSpecs) {
  EXPECT_THROW(validate(ChenLinearMap{MatrixX<double>::Identity(3, 2), Normal{}}), InputError);
  EXPECT_NO_THROW(validate(ChenLinearMap{MatrixX<double>::Ones(2, 3), Normal{}}));
  EXPECT_THROW(validate(BlockDiagonal{0, 0.1, {}}), InputError);
  EXPECT_THROW(validate(BlockDiagonal{2, 1.0, {}}), InputError);
  EXPECT_THROW(validate(BlockDiagonal{2, -0.1, {}}), InputError);
  EXPECT_THROW(validate(MovingAverage{4, 5, Normal{}}), InputError);
  EXPECT_THROW(validate(MovingAverage{2, 0, Normal{}}), InputError);
  EXPECT_THROW(validate(SparseCai{8, 1, 2, Normal{}, false}), InputError);
  EXPECT_THROW(generate(MovingAverage{2, 3, Normal{}}, 0, 1), InputError);
}

TEST(Generators, DimensionsAndDeterminism) {
  const GeneratorSpec specs[] = {ChenLinearMap{MatrixX<double>::Ones(3, 5), Gamma{4, 0.5}},
                                 BlockDiagonal{2, 0.3, {Normal{}, LogNormal{}, StudentT{5}, Gumbel{10, 2}}},
                                 MovingAverage{3, 7, Normal{}}, SparseCai{12, 3, 4, Normal{}, true}};
  const Index dims[] = {3, 8, 7, 12};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(dimension(specs[k]), dims[k]);
    const auto a = generate(specs[k], 6, 99);
    EXPECT_EQ(a.n(), 6);
    EXPECT_EQ(a.p(), dims[k]);
    EXPECT_EQ(a.values(), generate(specs[k], 6, 99).values());
    EXPECT_NE(a.values(), generate(specs[k], 6, 100).values());
  }
}

TEST(Generators, ChenIdentityIsNearIdentity) {
  const auto s = sample_covariance(generate(ChenLinearMap{MatrixX<double>::Identity(5, 5), Normal{}}, 10000, 1));
  EXPECT_LT((s.dense() - MatrixX<double>::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Generators, ChenKeepsTheUncenteredMean) {
  const auto d = generate(ChenLinearMap{MatrixX<double>::Identity(3, 3), Gamma{4, 0.5}}, 20000, 2);
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(d.values().col(j).mean(), 2.0, 0.05);
}

TEST(Generators, BlockDiagonalWithZeroRhoIsIndependent) {
  const GeneratorSpec spec = BlockDiagonal{2, 0.0, {Normal{}, Normal{}, Normal{}, Normal{}}};
  EXPECT_EQ(population_covariance(spec)->dense(), MatrixX<double>::Identity(8, 8));
  const auto s = sample_covariance(generate(spec, 10000, 3));
  EXPECT_LT((s.dense() - MatrixX<double>::Identity(8, 8)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Generators, BlockDiagonalPopulationCovariance) {
  const GeneratorSpec spec = BlockDiagonal{2, 0.15, {Normal{}, Gamma{4, 0.5}, StudentT{5}, Gumbel{10, 2}}};
  const auto sigma = *population_covariance(spec);
  EXPECT_DOUBLE_EQ(sigma(1, 0), 0.15);
  EXPECT_DOUBLE_EQ(sigma(2, 1), 0.0);
  EXPECT_DOUBLE_EQ(sigma(5, 4), 0.15 * 5.0 / 3.0);
  EXPECT_FALSE(population_covariance(BlockDiagonal{2, 0.1, {Normal{}, Normal{}, StudentT{2}, Normal{}}}));
}

TEST(Generators, MovingAverageMoments) {
  for (int order : {2, 3}) {
    const GeneratorSpec spec = MovingAverage{order, 6, Normal{}};
    const auto sigma = *population_covariance(spec);
    const double var = order == 2 ? 5 : 6, lag1 = order == 2 ? 2 : 4, lag2 = order == 2 ? 0 : 1;
    EXPECT_EQ(sigma(2, 2), var);
    EXPECT_EQ(sigma(3, 2), lag1);
    EXPECT_EQ(sigma(4, 2), lag2);
    EXPECT_EQ(sigma(5, 2), 0);
    const auto s = sample_covariance(generate(spec, 100000, 4));
    for (Index j = 0; j + 3 < 6; ++j) {
      EXPECT_NEAR(s(j, j), var, 0.02 * var);
      EXPECT_NEAR(s(j + 1, j), lag1, 0.02 * var);
      EXPECT_NEAR(s(j + 2, j), lag2, 0.02 * var);
      EXPECT_NEAR(s(j + 3, j), 0, 0.02 * var);
    }
  }
}

TEST(Generators, SampleCovarianceWithinPopulationBound) {
  const GeneratorSpec specs[] = {
      ChenLinearMap{sigma_alternative_cs(4, 0.1, 1, 2).gamma, Gamma{4, 0.5}},
      ChenLinearMap{sigma_alternative_diag(4, 0.5, 1, 1).gamma, StudentT{5}},
      BlockDiagonal{1, 0.15, {Normal{}, Gamma{0.5, std::sqrt(2.0)}, StudentT{5}, Gumbel{10, 2}}},
      MovingAverage{3, 5, Uniform{-1, 1}},
      SparseCai{10, 7, 8, Normal{}, false},
      SparseCai{10, 7, 8, Normal{}, true},
  };
  for (const auto& spec : specs) EXPECT_LT(worst_standardized_gap(spec, 100000, 11), 15.0) << to_config(spec);
}

TEST(Sigma, AlternativeDiagonalExamples) {
  const auto m38 = sigma_alternative_diag(38, 0.125, 1, 1);
  for (Index i = 0; i < 38; ++i) EXPECT_EQ(m38.sigma(i, i), i < 4 ? 2.0 : 1.0);
  EXPECT_TRUE(m38.warnings.empty());
  const auto m8 = sigma_alternative_diag(8, 0.5, 1, 1);
  for (Index i = 0; i < 8; ++i) EXPECT_EQ(m8.sigma(i, i), i < 4 ? 2.0 : 1.0);
  EXPECT_EQ(sigma_alternative_diag(8, 0.5, 1, 0).sigma.dense(), MatrixX<double>::Identity(8, 8));
  EXPECT_EQ(sigma_alternative_diag(5, 0.1, 1, 1).warnings.size(), 1u);
  EXPECT_THROW(sigma_alternative_diag(5, 1.0, 1, 1), InputError);
}

TEST(Sigma, AlternativeCompoundSymmetryExamples) {
  const auto m = sigma_alternative_cs(5, 0.1, 1, 2);
  EXPECT_NEAR(m.sigma(0, 0), 1.1, 1e-15);
  EXPECT_NEAR(m.sigma(3, 1), 0.2, 1e-15);
  EXPECT_EQ(m.gamma.rows(), 5);
  EXPECT_EQ(m.gamma.cols(), 6);
  EXPECT_THROW(sigma_alternative_cs(5, 0.0, 1, 2), InputError);
}

TEST(Sigma, FactorsReproduceSigma) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 0.99), s(0.1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = 2 + trial % 20;
    for (const auto& m : {sigma_alternative_cs(p, u(gen), s(gen), s(gen)),
                          sigma_alternative_diag(p, u(gen), s(gen), s(gen))}) {
      EXPECT_LT((m.gamma * m.gamma.transpose() - m.sigma.dense()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Sparse, DeltaHasThirtyTwoEntries) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (Index p : {9, 50}) {
      const auto delta = sparse_delta(p, seed);
      EXPECT_EQ((delta.dense().array() != 0).count(), 32);
      EXPECT_EQ((delta.dense().array() == 0.9).count(), 32);
      EXPECT_EQ(delta.dense().diagonal().cwiseAbs().sum(), 0.0);
      EXPECT_EQ(delta.dense(), delta.dense().transpose());
    }
  }
}

TEST(Sparse, StructureHasUnitDiagonalAndSparseOffDiagonals) {
  const auto s = sparse_structure(200, 3);
  EXPECT_EQ(s.sigma_star.dense().diagonal(), VectorX<double>::Ones(200));
  const auto off = vech_star(s.sigma_star);
  const auto nonzero = (off.array() != 0).count();
  EXPECT_EQ((off.array() == 0.5).count(), nonzero);
  const double expected = 0.05 * static_cast<double>(off.size());
  EXPECT_NEAR(static_cast<double>(nonzero), expected, 4 * std::sqrt(expected));
}

TEST(Sparse, PairsArePositiveDefiniteAndDifferByDelta) {
  for (Index p : {50, 200}) {
    const auto structure = sparse_structure(p, static_cast<std::uint64_t>(p));
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto pair = sparse_cai_pair(structure, seed);
      EXPECT_NO_THROW(cholesky_factor(pair.null_sigma));
      EXPECT_NO_THROW(cholesky_factor(pair.alt_sigma));
      EXPECT_GE(eigenvalues_descending(pair.null_sigma)(p - 1), 0.05 - 1e-9);
      if (seed < 5) {
        EXPECT_LT((pair.alt_sigma.dense() - pair.null_sigma.dense() - pair.delta.dense()).cwiseAbs().maxCoeff(),
                  1e-12);
      }
    }
  }
}

TEST(Ssnr, Definition) {
  const std::vector<double> symmetric{4, 5, 6};
  EXPECT_DOUBLE_EQ(ssnr(symmetric), 5.0);
  const auto x = draws(Normal{4, 1}, 100000, 6);
  EXPECT_NEAR(ssnr(x), 4.0, 0.05);
  const auto z = draws(Normal{0, 1}, 100000, 7);
  EXPECT_NEAR(ssnr(z), 0.0, 0.02);
  EXPECT_THROW(ssnr(std::vector<double>{2, 2, 2}), InputError);
  EXPECT_THROW(ssnr(std::vector<double>{2}), InputError);
}

TEST(Config, RoundTripsEveryModel) {
  const GeneratorSpec specs[] = {ChenLinearMap{sigma_alternative_cs(3, 0.1, 1, 2).gamma, Gamma{4, 0.5}},
                                 BlockDiagonal{3, 0.15, {Normal{}, LogNormal{}, StudentT{5}, Gumbel{10, 2}}},
                                 MovingAverage{2, 9, Gamma{0.5, std::sqrt(2.0)}},
                                 SparseCai{20, 123456789012345ULL, 5, Poisson{2}, true}};
  for (const auto& spec : specs) {
    const std::string text = to_config(spec);
    EXPECT_EQ(to_config(from_config(text)), text);
    EXPECT_EQ(generate(from_config(text), 4, 1).values(), generate(spec, 4, 1).values());
  }
}

TEST(Config, StructureShortcutsAndErrors) {
  const auto spec = from_config("# comment\nmodel = chen\nstructure = alt-cs\np = 4\nrho = 0.1\n"
                                "sigma0_sq = 1\nsigma1_sq = 2\ndistribution = normal(0,1)\n");
  EXPECT_NEAR((*population_covariance(spec))(1, 0), 0.2, 1e-12);
  const auto id = from_config("model = chen\nstructure = identity\np = 3\ndistribution = t(5)\n");
  EXPECT_EQ(dimension(id), 3);
  const auto block = from_config("model = block-diagonal\nq = 2\nrho = 0\ndistribution = n(0,1)\n");
  EXPECT_EQ(dimension(block), 8);

  EXPECT_THROW(from_config("model = chen\nmodel = chen\n"), InputError);
  EXPECT_THROW(from_config("model = nope\n"), InputError);
  EXPECT_THROW(from_config("model = moving-average\norder = 2\np = 4\ndistribution = normal(0,1)\nextra = 1\n"),
               InputError);
  EXPECT_THROW(from_config("model = moving-average\norder = 2\ndistribution = normal(0,1)\n"), InputError);
  EXPECT_THROW(from_config("this line has no equals sign\n"), InputError);
  EXPECT_THROW(from_config("model = block-diagonal\nq = 2\nrho = 0\ndistributions = n(0,1); t(5)\n"), InputError);
}

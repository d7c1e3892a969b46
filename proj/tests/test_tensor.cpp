#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fedcast/serialize.hpp"
#include "fedcast/tensor.hpp"
#include "oracles.hpp"

using namespace fedcast;

namespace {

Tensor vec(std::vector<double> values) {
    Tensor t;
    t.shape = {static_cast<std::uint32_t>(values.size())};
    t.values = std::move(values);
    return t;
}

ParameterSet single(const std::string& name, std::vector<double> values) {
    ParameterSet ps;
    ps.entries.emplace(name, vec(std::move(values)));
    return ps;
}

}  // namespace

TEST(L1Norm, HandValues) {
    EXPECT_EQ(l1_norm(vec({0, 0, 0})), 0.0);
    EXPECT_EQ(l1_norm(vec({1, -1, 2})), 4.0);
    EXPECT_EQ(l1_norm(vec({-3.5})), 3.5);
}

TEST(L1Norm, ZeroOnlyForZeroTensor) {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        Tensor t = oracle::random_tensor(rng);
        bool all_zero = true;
        for (double v : t.values) all_zero &= (v == 0.0);
        EXPECT_EQ(l1_norm(t) == 0.0, all_zero);
    }
}

TEST(L1Norm, RejectsNonFinite) {
    EXPECT_THROW(l1_norm(vec({1.0, std::numeric_limits<double>::quiet_NaN()})), InvalidTensorError);
    EXPECT_THROW(l1_norm(vec({std::numeric_limits<double>::infinity()})), InvalidTensorError);
}

TEST(L1Norm, RejectsShapeValueMismatch) {
    Tensor t;
    t.shape = {2, 2};
    t.values = {1.0, 2.0, 3.0};
    EXPECT_THROW(l1_norm(t), InvalidTensorError);
}

TEST(TensorDeviation, HandValues) {
    EXPECT_DOUBLE_EQ(tensor_deviation(vec({1, 0, 2}), vec({1, -1, 2})), 0.25);
    EXPECT_EQ(tensor_deviation(vec({3, -4}), vec({3, -4})), 0.0);
    EXPECT_TRUE(std::isinf(tensor_deviation(vec({1}), vec({0}))));
    EXPECT_EQ(tensor_deviation(vec({0, 0}), vec({0, 0})), 0.0);
}

TEST(TensorDeviation, ShapeMismatchThrows) {
    EXPECT_THROW(tensor_deviation(vec({1, 2}), vec({1, 2, 3})), CongruenceError);
}

TEST(TensorDeviation, MatchesScalarLoopOracle) {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        Tensor prev = oracle::random_tensor(rng);
        Tensor curr;
        curr.shape = prev.shape;
        curr.values.resize(prev.values.size());
        for (std::size_t j = 0; j < curr.values.size(); ++j)
            curr.values[j] = prev.values[j] + rng.uniform(-0.5, 0.5);
        const double expect = oracle::scalar_loop_deviation(curr.values, prev.values);
        const double got = tensor_deviation(curr, prev);
        EXPECT_LE(std::fabs(got - expect), 1e-12 * std::max(1.0, std::fabs(expect)));
    }
}

TEST(TensorDeviation, NumeratorScaleCovariance) {
    Rng rng(23);
    for (int i = 0; i < 30; ++i) {
        Tensor prev = oracle::random_tensor(rng);
        if (l1_norm(prev) == 0.0) continue;
        Tensor d = prev, d2 = prev;
        for (std::size_t j = 0; j < prev.values.size(); ++j) {
            const double step = rng.uniform(-0.3, 0.3);
            d.values[j] = prev.values[j] + step;
            d2.values[j] = prev.values[j] + 2.0 * step;
        }
        const double dev1 = tensor_deviation(d, prev);
        const double dev2 = tensor_deviation(d2, prev);
        EXPECT_NEAR(dev2, 2.0 * dev1, 1e-12 * std::max(1.0, dev2));
    }
}

TEST(TensorDeviation, InvariantUnderCommonScale) {
    Rng rng(29);
    for (double scale : {2.0, -3.0, 0.125}) {
        Tensor prev = oracle::random_tensor(rng);
        Tensor curr = oracle::random_tensor(rng);
        curr.shape = prev.shape;
        curr.values.resize(prev.values.size());
        for (double& v : curr.values) v = rng.uniform(-1.0, 1.0);
        Tensor sp = prev, sc = curr;
        for (double& v : sp.values) v *= scale;
        for (double& v : sc.values) v *= scale;
        // scale = power of two keeps the ratio bit-exact
        if (scale == 0.125) {
            EXPECT_EQ(tensor_deviation(sc, sp), tensor_deviation(curr, prev));
        } else {
            EXPECT_NEAR(tensor_deviation(sc, sp), tensor_deviation(curr, prev), 1e-12);
        }
    }
}

TEST(DeviationProfileOp, ComposesPerTensor) {
    ParameterSet prev, curr;
    prev.entries.emplace("a", vec({1, -1, 2}));
    prev.entries.emplace("b", vec({5, 6}));
    curr.entries.emplace("a", vec({1, 0, 2}));
    curr.entries.emplace("b", vec({5, 6}));
    const DeviationProfile p = deviation_profile(curr, prev, 3, 1);
    EXPECT_EQ(p.round, 3u);
    EXPECT_EQ(p.client_id, 1u);
    EXPECT_DOUBLE_EQ(p.devs.at("a"), 0.25);
    EXPECT_DOUBLE_EQ(p.devs.at("b"), 0.0);
}

TEST(DeviationProfileOp, IdenticalSetsGiveZeros) {
    Rng rng(31);
    ParameterSet ps = oracle::random_parameter_set(rng, 5);
    const DeviationProfile p = deviation_profile(ps, ps, 1, 0);
    for (const auto& [name, dev] : p.devs) EXPECT_EQ(dev, 0.0);
}

TEST(DeviationProfileOp, NonCongruentThrows) {
    Rng rng(37);
    ParameterSet a = oracle::random_parameter_set(rng, 3);
    ParameterSet b = a;
    b.entries.erase(b.entries.begin());
    EXPECT_THROW(deviation_profile(a, b, 1, 0), CongruenceError);

    ParameterSet c = a;
    c.entries.begin()->second.shape.push_back(1);
    c.entries.begin()->second.values.resize(c.entries.begin()->second.numel());
    EXPECT_THROW(deviation_profile(a, c, 1, 0), CongruenceError);
}

TEST(WeightedAverage, HandValues) {
    const std::vector<ParameterSet> sets = {single("w", {0.0}), single("w", {4.0})};
    const std::vector<double> weights = {0.25, 0.75};
    const ParameterSet avg = weighted_average(sets, weights);
    EXPECT_DOUBLE_EQ(avg.at("w").values[0], 3.0);
}

TEST(WeightedAverage, EqualWeightsMean) {
    const std::vector<ParameterSet> sets = {single("w", {1.0}), single("w", {2.0}),
                                            single("w", {3.0})};
    const std::vector<double> weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    EXPECT_DOUBLE_EQ(weighted_average(sets, weights).at("w").values[0], 2.0);
}

TEST(WeightedAverage, ConvexityFixedPoint) {
    Rng rng(41);
    ParameterSet base = oracle::random_parameter_set(rng, 4);
    const std::vector<ParameterSet> sets = {base, base, base};
    const auto weights = oracle::random_simplex_weights(rng, 3);
    const ParameterSet avg = weighted_average(sets, weights);
    for (const auto& [name, t] : avg.entries) {
        const auto& ref = base.at(name).values;
        for (std::size_t i = 0; i < t.values.size(); ++i)
            EXPECT_NEAR(t.values[i], ref[i], 1e-12 * std::max(1.0, std::fabs(ref[i])));
    }
}

TEST(WeightedAverage, OneHotSelectsExactly) {
    Rng rng(43);
    std::vector<ParameterSet> sets;
    ParameterSet schema = oracle::random_parameter_set(rng, 4);
    sets.push_back(schema);
    for (int i = 0; i < 2; ++i) sets.push_back(oracle::random_like(rng, schema));
    for (std::size_t hot = 0; hot < sets.size(); ++hot) {
        std::vector<double> weights(sets.size(), 0.0);
        weights[hot] = 1.0;
        const ParameterSet avg = weighted_average(sets, weights);
        for (const auto& [name, t] : avg.entries)
            EXPECT_EQ(t.values, sets[hot].at(name).values);
    }
}

TEST(WeightedAverage, PermutationInvariance) {
    Rng rng(47);
    ParameterSet schema = oracle::random_parameter_set(rng, 3);
    std::vector<ParameterSet> sets = {schema, oracle::random_like(rng, schema),
                                      oracle::random_like(rng, schema)};
    // dyadic weights make the permuted reduction bit-exact
    const std::vector<double> weights = {0.5, 0.25, 0.25};
    const ParameterSet a = weighted_average(sets, weights);

    std::vector<ParameterSet> permuted = {sets[2], sets[0], sets[1]};
    const std::vector<double> pweights = {0.25, 0.5, 0.25};
    const ParameterSet b = weighted_average(permuted, pweights);
    for (const auto& [name, t] : a.entries) {
        const auto& other = b.at(name).values;
        for (std::size_t i = 0; i < t.values.size(); ++i)
            EXPECT_NEAR(t.values[i], other[i], 1e-15);
    }
}

TEST(WeightedAverage, RejectsBadWeights) {
    const std::vector<ParameterSet> sets = {single("w", {1.0}), single("w", {2.0})};
    EXPECT_THROW(weighted_average(sets, std::vector<double>{0.5, 0.6}), NormalizationError);
    EXPECT_THROW(weighted_average(sets, std::vector<double>{-0.5, 1.5}), NormalizationError);
    EXPECT_THROW(weighted_average(sets, std::vector<double>{1.0}), NormalizationError);
}

TEST(WeightedAverage, RejectsNonCongruentSets) {
    const std::vector<ParameterSet> sets = {single("w", {1.0}), single("x", {2.0})};
    EXPECT_THROW(weighted_average(sets, std::vector<double>{0.5, 0.5}), CongruenceError);
}

TEST(Serialize, RoundTripsParameterSet) {
    Rng rng(53);
    ParameterSet ps = oracle::random_parameter_set(rng, 6);
    const auto bytes = encode_parameter_set(ps);
    const ParameterSet back = decode_parameter_set(bytes.data(), bytes.size());
    ASSERT_TRUE(ps.congruent_with(back));
    for (const auto& [name, t] : ps.entries) EXPECT_EQ(t.values, back.at(name).values);
}

TEST(Serialize, FileRoundTrip) {
    Rng rng(59);
    ParameterSet ps = oracle::random_parameter_set(rng, 3);
    const std::string path = ::testing::TempDir() + "fedcast_ckpt_test.fcast";
    save_parameter_set(path, ps);
    const ParameterSet back = load_parameter_set(path);
    ASSERT_TRUE(ps.congruent_with(back));
    for (const auto& [name, t] : ps.entries) EXPECT_EQ(t.values, back.at(name).values);
}

TEST(Serialize, RejectsBadMagicAndTruncation) {
    Rng rng(61);
    ParameterSet ps = oracle::random_parameter_set(rng, 2);
    auto bytes = encode_parameter_set(ps);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_parameter_set(bad.data(), bad.size()), IoError);
    EXPECT_THROW(decode_parameter_set(bytes.data(), bytes.size() - 3), IoError);
}

TEST(Serialize, FramesAreLexicographicallyOrdered) {
    ParameterSet ps;
    ps.entries.emplace("zz", vec({1.0}));
    ps.entries.emplace("aa", vec({2.0}));
    const auto bytes = encode_parameter_set(ps);
    // first frame after the 8-byte magic must be "aa"
    EXPECT_EQ(bytes[8 + 4], 'a');
    EXPECT_EQ(bytes[8 + 5], 'a');
}

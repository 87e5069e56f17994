// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include "data.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "noise.hpp"

using namespace rtme;

namespace {

LabeledDataset sample(std::size_t n, int k, std::size_t dim = 3, std::uint64_t seed = 1) {
    MixtureParams p;
    p.n = n;
    p.k = k;
    p.dim = dim;
    return make_gaussian_mixture(p, seed);
}

void check_mask(const LabeledDataset& d) {
    for (std::size_t i = 0; i < d.size(); ++i) REQUIRE(d.clean_mask[i] == (d.noisy_labels[i] == d.clean_labels[i]));
}

}  // namespace

TEST_CASE("zero rate is the identity for every kind") {
    const LabeledDataset d = sample(2000, 5);
    for (auto kind : {NoiseKind::None, NoiseKind::Symmetric, NoiseKind::Pairflip, NoiseKind::Instance}) {
        const LabeledDataset out = inject_noise(d, {kind, 0.0, 3});
        CHECK(out.noisy_labels == out.clean_labels);
        const NoiseStats st = noise_stats(out);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j) CHECK(st.transition[i][j] == (i == j ? 1.0 : 0.0));
    }
}

TEST_CASE("symmetric noise: rate, diagonal and off-diagonal entries") {
    const LabeledDataset d = sample(100000, 10);
    const LabeledDataset out = inject_noise(d, {NoiseKind::Symmetric, 0.3, 11});
    check_mask(out);
    const NoiseStats st = noise_stats(out);
    CHECK(std::abs(st.flip_rate - 0.3) <= 0.01);
    for (std::size_t i = 0; i < 10; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < 10; ++j) {
            row += st.transition[i][j];
            if (i == j)
                CHECK(std::abs(st.transition[i][j] - 0.7) <= 0.02);
            else
                CHECK(std::abs(st.transition[i][j] - 0.3 / 9.0) <= 0.01);
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("pairflip noise moves labels only to the next class") {
    const LabeledDataset d = sample(100000, 6);
    const LabeledDataset out = inject_noise(d, {NoiseKind::Pairflip, 0.45, 12});
    check_mask(out);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int c = out.clean_labels[i], o = out.noisy_labels[i];
        REQUIRE((o == c || o == (c + 1) % 6));
    }
    const NoiseStats st = noise_stats(out);
    CHECK(std::abs(st.flip_rate - 0.45) <= 0.01);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(st.transition[i][(i + 1) % 6] - 0.45) <= 0.02);
    CHECK_THROWS_AS(inject_noise(d, {NoiseKind::Pairflip, 0.5, 1}), ConfigError);
}

TEST_CASE("instance noise: overall rate and feature dependence") {
    const LabeledDataset d = sample(50000, 4, 5);
    const LabeledDataset out = inject_noise(d, {NoiseKind::Instance, 0.3, 13});
    check_mask(out);
    CHECK(std::abs(noise_stats(out).flip_rate - 0.3) <= 0.02);

    // Same stream, features permuted: a different set of examples flips.
    LabeledDataset shuffled = d;
    std::vector<std::size_t> order(d.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    shuffled.features = d.features.gather_rows(order);
    const LabeledDataset out2 = inject_noise(shuffled, {NoiseKind::Instance, 0.3, 13});
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < d.size(); ++i) disagree += out.noisy_labels[i] != out2.noisy_labels[i];
    CHECK(disagree > 0);
}

TEST_CASE("instance noise at small rate stays small") {
    const LabeledDataset d = sample(20000, 4);
    CHECK(noise_stats(inject_noise(d, {NoiseKind::Instance, 0.01, 2})).flip_rate < 0.1);
}

TEST_CASE("injection is reproducible from the seed") {
    const LabeledDataset d = sample(5000, 4);
    for (auto kind : {NoiseKind::Symmetric, NoiseKind::Pairflip, NoiseKind::Instance}) {
        const auto a = inject_noise(d, {kind, 0.3, 21});
        const auto b = inject_noise(d, {kind, 0.3, 21});
        const auto c = inject_noise(d, {kind, 0.3, 22});
        CHECK(a.noisy_labels == b.noisy_labels);
        CHECK(a.noisy_labels != c.noisy_labels);
        CHECK(a.features == d.features);
    }
}

TEST_CASE("invalid rates and class counts") {
    const LabeledDataset d = sample(100, 4);
    CHECK_THROWS_AS(inject_noise(d, {NoiseKind::Symmetric, 1.0, 1}), ConfigError);
    CHECK_THROWS_AS(inject_noise(d, {NoiseKind::Symmetric, -0.1, 1}), ConfigError);
    LabeledDataset one = d;
    one.k = 1;
    for (int& y : one.clean_labels) y = 0;
    one.noisy_labels = one.clean_labels;
    Rng rng(1);
    CHECK_THROWS_AS(inject_symmetric(one, 0.2, rng), ConfigError);
}

TEST_CASE("noise kind names") {
    CHECK(parse_noise_kind("sym") == NoiseKind::Symmetric);
    CHECK(parse_noise_kind("pair") == NoiseKind::Pairflip);
    CHECK(parse_noise_kind("ins") == NoiseKind::Instance);
    CHECK(parse_noise_kind("none") == NoiseKind::None);
    CHECK_FALSE(parse_noise_kind("symmetric").has_value());
    for (auto k : {NoiseKind::None, NoiseKind::Symmetric, NoiseKind::Pairflip, NoiseKind::Instance})
        CHECK(parse_noise_kind(to_string(k)) == k);
}

// SPDX-License-Identifier: Apache-2.0
#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "errors.hpp"

namespace rtme {

LabeledDataset make_gaussian_mixture(const MixtureParams& p, std::uint64_t seed) {
    if (p.k < 2) throw ConfigError("mixture needs k >= 2");
    if (p.n < static_cast<std::size_t>(p.k)) throw ConfigError("mixture needs n >= k");
    if (p.dim < 1) throw ConfigError("mixture needs dim >= 1");
    if (!(p.separation > 0.0)) throw ConfigError("mixture separation must be > 0");
    if (!(p.spread > 0.0)) throw ConfigError("mixture spread must be > 0");

    const auto k = static_cast<std::size_t>(p.k);
    Matrix means(k, p.dim);
    if (p.dim == 1) {
        for (std::size_t c = 0; c < k; ++c) means(c, 0) = p.separation * static_cast<double>(c);
    } else {
        const double radius = p.separation / (2.0 * std::sin(std::numbers::pi / static_cast<double>(k)));
        for (std::size_t c = 0; c < k; ++c) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
            means(c, 0) = radius * std::cos(angle);
            means(c, 1) = radius * std::sin(angle);
        }
    }

    Rng rng(seed);
    std::vector<int> labels(p.n);
    for (std::size_t i = 0; i < p.n; ++i) labels[i] = static_cast<int>(i % k);
    rng.shuffle(labels);

    Matrix x(p.n, p.dim);
    for (std::size_t i = 0; i < p.n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        for (std::size_t j = 0; j < p.dim; ++j) x(i, j) = means(c, j) + p.spread * rng.normal();
    }
    return LabeledDataset::clean(std::move(x), std::move(labels), p.k);
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
    if (offset + 4 > buf.size())
        throw FormatError(path.string() + ": truncated header at byte offset " + std::to_string(offset));
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex32(std::uint32_t v) {
    char s[11];
    std::snprintf(s, sizeof s, "0x%08X", v);
    return s;
}

void expect_magic(std::uint32_t found, std::uint32_t expected, const std::filesystem::path& path) {
    if (found != expected)
        throw FormatError(path.string() + ": bad magic at byte offset 0: expected " + hex32(expected) + ", found " +
                          hex32(found));
}

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                        std::size_t limit) {
    const auto img = read_all(images_path);
    const auto lab = read_all(labels_path);

    expect_magic(be32(img, 0, images_path), 0x00000803u, images_path);
    const std::size_t n_img = be32(img, 4, images_path);
    const std::size_t rows = be32(img, 8, images_path);
    const std::size_t cols = be32(img, 12, images_path);
    expect_magic(be32(lab, 0, labels_path), 0x00000801u, labels_path);
    const std::size_t n_lab = be32(lab, 4, labels_path);

    if (n_img != n_lab)
        throw FormatError("image count " + std::to_string(n_img) + " != label count " + std::to_string(n_lab));
    const std::size_t dim = rows * cols;
    if (img.size() < 16 + n_img * dim)
        throw FormatError(images_path.string() + ": truncated pixel data at byte offset " + std::to_string(img.size()) +
                          ", expected " + std::to_string(16 + n_img * dim) + " bytes");
    if (lab.size() < 8 + n_lab)
        throw FormatError(labels_path.string() + ": truncated label data at byte offset " + std::to_string(lab.size()) +
                          ", expected " + std::to_string(8 + n_lab) + " bytes");

    const std::size_t n = limit ? std::min(limit, n_img) : n_img;
    Matrix x(n, dim);
    std::vector<int> y(n);
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) x(i, j) = static_cast<double>(img[16 + i * dim + j]) / 255.0;
        y[i] = lab[8 + i];
        max_label = std::max(max_label, y[i]);
    }
    return LabeledDataset::clean(std::move(x), std::move(y), std::max(max_label + 1, 2));
}

FeatureScaler FeatureScaler::fit(const Matrix& f) {
    FeatureScaler s;
    const std::size_t n = f.rows(), d = f.cols();
    s.mean.assign(d, 0.0);
    s.stddev.assign(d, 0.0);
    if (n == 0) return s;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += f(i, j);
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double c = f(i, j) - s.mean[j];
            s.stddev[j] += c * c;
        }
    for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(n));
    return s;
}

void FeatureScaler::apply(Matrix& f) const {
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < f.cols(); ++j)
            f(i, j) = stddev[j] > 1e-12 ? (f(i, j) - mean[j]) / stddev[j] : 0.0;
}

void standardize(SplitDataset& split) {
    const FeatureScaler s = FeatureScaler::fit(split.train.features);
    s.apply(split.train.features);
    s.apply(split.val.features);
    s.apply(split.test.features);
}

SplitDataset split_train_val(const LabeledDataset& pool, double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(pool.size())));
    const std::span<const std::size_t> all(order);
    SplitDataset s;
    s.val = pool.subset(all.first(n_val));
    s.train = pool.subset(all.subspan(n_val));
    s.test.k = pool.k;
    s.test.features = Matrix(0, pool.dim());
    return s;
}

std::string dataset_to_csv(const LabeledDataset& data) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t j = 0; j < data.dim(); ++j) os << 'x' << j << ',';
    os << "clean_label,noisy_label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) os << data.features(i, j) << ',';
        os << data.clean_labels[i] << ',' << data.noisy_labels[i] << '\n';
    }
    return os.str();
}

}  // namespace rtme

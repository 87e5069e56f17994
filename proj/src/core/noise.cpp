// SPDX-License-Identifier: Apache-2.0
#include "noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace rtme {

LabeledDataset LabeledDataset::clean(Matrix features, std::vector<int> labels, int k) {
    LabeledDataset d;
    d.features = std::move(features);
    d.clean_labels = labels;
    d.noisy_labels = std::move(labels);
    d.k = k;
    d.refresh_mask();
    d.validate();
    return d;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    LabeledDataset d;
    d.features = features.gather_rows(indices);
    d.k = k;
    for (std::size_t i : indices) {
        d.clean_labels.push_back(clean_labels[i]);
        d.noisy_labels.push_back(noisy_labels[i]);
        d.clean_mask.push_back(clean_mask[i]);
    }
    return d;
}

void LabeledDataset::refresh_mask() {
    clean_mask.assign(clean_labels.size(), true);
    for (std::size_t i = 0; i < clean_labels.size(); ++i) clean_mask[i] = noisy_labels[i] == clean_labels[i];
}

void LabeledDataset::validate() const {
    const std::size_t n = clean_labels.size();
    if (noisy_labels.size() != n || clean_mask.size() != n || features.rows() != n)
        throw InputError("dataset arrays disagree in length");
    if (k < 1) throw InputError("dataset needs at least one class");
    for (std::size_t i = 0; i < n; ++i) {
        if (clean_labels[i] < 0 || clean_labels[i] >= k || noisy_labels[i] < 0 || noisy_labels[i] >= k)
            throw InputError("label out of range at row " + std::to_string(i));
        if (clean_mask[i] != (clean_labels[i] == noisy_labels[i]))
            throw InputError("clean mask inconsistent at row " + std::to_string(i));
    }
}

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::None: return "none";
        case NoiseKind::Symmetric: return "sym";
        case NoiseKind::Pairflip: return "pair";
        case NoiseKind::Instance: return "ins";
    }
    return "?";
}

std::optional<NoiseKind> parse_noise_kind(std::string_view name) {
    if (name == "none") return NoiseKind::None;
    if (name == "sym") return NoiseKind::Symmetric;
    if (name == "pair") return NoiseKind::Pairflip;
    if (name == "ins") return NoiseKind::Instance;
    return std::nullopt;
}

namespace {

void check_tau(double tau) {
    if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("noise rate must lie in [0, 1), got " + std::to_string(tau));
}

double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double v = rng.normal(mean, sd);
        if (v >= lo && v <= hi) return v;
    }
    // Only reachable when the interval carries negligible mass.
    return std::clamp(mean, lo, hi);
}

}  // namespace

LabeledDataset inject_symmetric(const LabeledDataset& data, double tau, Rng& rng) {
    check_tau(tau);
    if (data.k < 2) throw ConfigError("symmetric noise needs k >= 2");
    LabeledDataset out = data;
    out.noisy_labels = data.clean_labels;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (rng.uniform() >= tau) continue;
        const int y = data.clean_labels[i];
        int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(data.k - 1)));
        if (j >= y) ++j;
        out.noisy_labels[i] = j;
    }
    out.refresh_mask();
    return out;
}

LabeledDataset inject_pairflip(const LabeledDataset& data, double tau, Rng& rng) {
    check_tau(tau);
    if (tau >= 0.5) throw ConfigError("pairflip noise needs tau < 0.5, got " + std::to_string(tau));
    if (data.k < 2) throw ConfigError("pairflip noise needs k >= 2");
    LabeledDataset out = data;
    out.noisy_labels = data.clean_labels;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (rng.uniform() < tau) out.noisy_labels[i] = (data.clean_labels[i] + 1) % data.k;
    out.refresh_mask();
    return out;
}

LabeledDataset inject_instance(const LabeledDataset& data, double tau, Rng& rng) {
    check_tau(tau);
    if (data.k < 2) throw ConfigError("instance noise needs k >= 2");
    LabeledDataset out = data;
    out.noisy_labels = data.clean_labels;
    if (tau == 0.0) {
        out.refresh_mask();
        return out;
    }
    const std::size_t n = data.size(), d = data.dim();
    const auto k = static_cast<std::size_t>(data.k);

    // Score on standardized features regardless of the caller's scaling.
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean[c] += data.features(i, c);
    for (double& m : mean) m /= static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) sd[c] += std::pow(data.features(i, c) - mean[c], 2);
    for (double& s : sd) s = std::sqrt(s / static_cast<double>(std::max<std::size_t>(n, 1)));

    Matrix proj(d, k);
    for (double& w : proj.data()) w = rng.normal();

    std::vector<double> score(k), prob(k);
    for (std::size_t i = 0; i < n; ++i) {
        const double q = truncated_normal(rng, tau, 0.1, 0.0, 1.0);
        const auto y = static_cast<std::size_t>(data.clean_labels[i]);
        std::fill(score.begin(), score.end(), 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            const double x = sd[c] > 0.0 ? (data.features(i, c) - mean[c]) / sd[c] : 0.0;
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) score[j] += x * proj(c, j);
        }
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j)
            if (j != y) mx = std::max(mx, score[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            prob[j] = j == y ? 0.0 : std::exp(score[j] - mx);
            s += prob[j];
        }
        for (std::size_t j = 0; j < k; ++j) prob[j] = j == y ? 1.0 - q : q * prob[j] / s;

        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = y;
        for (std::size_t j = 0; j < k; ++j) {
            acc += prob[j];
            if (u < acc) {
                pick = j;
                break;
            }
        }
        out.noisy_labels[i] = static_cast<int>(pick);
    }
    out.refresh_mask();
    return out;
}

LabeledDataset inject_noise(const LabeledDataset& data, const NoiseSpec& spec) {
    Rng rng(spec.seed);
    switch (spec.kind) {
        case NoiseKind::None: {
            LabeledDataset out = data;
            out.noisy_labels = data.clean_labels;
            out.refresh_mask();
            return out;
        }
        case NoiseKind::Symmetric: return inject_symmetric(data, spec.tau, rng);
        case NoiseKind::Pairflip: return inject_pairflip(data, spec.tau, rng);
        case NoiseKind::Instance: return inject_instance(data, spec.tau, rng);
    }
    throw InternalError("unknown noise kind");
}

NoiseStats noise_stats(const LabeledDataset& data) {
    const auto k = static_cast<std::size_t>(data.k);
    NoiseStats s;
    s.counts.assign(k, std::vector<std::size_t>(k, 0));
    s.transition.assign(k, std::vector<double>(k, 0.0));
    s.per_class_flip_rate.assign(k, 0.0);
    std::size_t flips = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        s.counts[static_cast<std::size_t>(data.clean_labels[i])][static_cast<std::size_t>(data.noisy_labels[i])]++;
        if (data.clean_labels[i] != data.noisy_labels[i]) ++flips;
    }
    for (std::size_t r = 0; r < k; ++r) {
        std::size_t total = 0;
        for (std::size_t c = 0; c < k; ++c) total += s.counts[r][c];
        if (total == 0) {
            // No examples of this class: report the identity row.
            s.transition[r][r] = 1.0;
            continue;
        }
        for (std::size_t c = 0; c < k; ++c)
            s.transition[r][c] = static_cast<double>(s.counts[r][c]) / static_cast<double>(total);
        s.per_class_flip_rate[r] = 1.0 - static_cast<double>(s.counts[r][r]) / static_cast<double>(total);
    }
    s.flip_rate = data.size() ? static_cast<double>(flips) / static_cast<double>(data.size()) : 0.0;
    return s;
}

}  // namespace rtme

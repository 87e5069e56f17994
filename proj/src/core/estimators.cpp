// SPDX-License-Identifier: Apache-2.0
#include "estimators.hpp"

#include <cmath>

#include "errors.hpp"

namespace rtme {

namespace {

void check_loss(double loss) {
    if (!(loss >= 0.0)) throw InputError("loss must be >= 0 and not NaN, got " + std::to_string(loss));
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0)) throw InputError("truncation point must be > 0, got " + std::to_string(sigma));
}

}  // namespace

void EstimatorSpec::validate() const {
    if (kind == EstimatorKind::LogSum && !(epsilon >= 1.0 && std::isfinite(epsilon)))
        throw ConfigError("log-sum epsilon must lie in [1, inf), got " + std::to_string(epsilon));
    if (kind == EstimatorKind::WelschPlus && !(alpha > 0.0 && std::isfinite(alpha)))
        throw ConfigError("welsch+ alpha must be > 0, got " + std::to_string(alpha));
}

double EstimatorSpec::parameter() const {
    if (kind == EstimatorKind::LogSum) return epsilon;
    if (kind == EstimatorKind::WelschPlus) return alpha;
    return 1.0;
}

EstimatorSpec EstimatorSpec::with_parameter(double p) const {
    EstimatorSpec s = *this;
    if (kind == EstimatorKind::LogSum) s.epsilon = p;
    if (kind == EstimatorKind::WelschPlus) s.alpha = p;
    return s;
}

std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::CE: return "ce";
        case EstimatorKind::Catoni: return "catoni";
        case EstimatorKind::LogSum: return "logsum";
        case EstimatorKind::WelschPlus: return "welsch+";
    }
    return "?";
}

std::optional<EstimatorKind> parse_estimator_kind(std::string_view name) {
    if (name == "ce") return EstimatorKind::CE;
    if (name == "catoni") return EstimatorKind::Catoni;
    if (name == "logsum") return EstimatorKind::LogSum;
    if (name == "welsch+") return EstimatorKind::WelschPlus;
    return std::nullopt;
}

double phi(const EstimatorSpec& spec, double loss) {
    check_loss(loss);
    switch (spec.kind) {
        case EstimatorKind::CE: return loss;
        case EstimatorKind::Catoni: return std::log1p(loss + 0.5 * loss * loss);
        case EstimatorKind::LogSum: return std::log1p(loss / spec.epsilon);
        case EstimatorKind::WelschPlus: return -std::expm1(-loss / (spec.alpha * spec.alpha));
    }
    throw InternalError("unknown estimator kind");
}

double weight(const EstimatorSpec& spec, double loss) {
    check_loss(loss);
    switch (spec.kind) {
        case EstimatorKind::CE: return 1.0;
        case EstimatorKind::Catoni: return (1.0 + loss) / (1.0 + loss + 0.5 * loss * loss);
        case EstimatorKind::LogSum: return spec.epsilon / (spec.epsilon + loss);
        case EstimatorKind::WelschPlus: {
            const double a2 = spec.alpha * spec.alpha;
            return std::exp(-loss / a2) / a2;
        }
    }
    throw InternalError("unknown estimator kind");
}

double phi_truncated(const EstimatorSpec& spec, double loss, double sigma) {
    check_loss(loss);
    check_sigma(sigma);
    return loss <= sigma ? phi(spec, loss) : phi(spec, sigma);
}

double weight_truncated(const EstimatorSpec& spec, double loss, double sigma) {
    check_loss(loss);
    check_sigma(sigma);
    return loss <= sigma ? weight(spec, loss) : 0.0;
}

std::string_view to_string(EpochMode mode) { return mode == EpochMode::Original ? "original" : "truncated"; }

EpochMode epoch_mode(long epoch, long period) {
    if (period < 1 || epoch < 0) throw InputError("epoch_mode needs period >= 1 and epoch >= 0");
    return epoch % period == 0 ? EpochMode::Original : EpochMode::Truncated;
}

std::vector<double> batch_weights(const EstimatorSpec& spec, EpochMode mode, std::span<const double> losses,
                                  double sigma) {
    std::vector<double> w;
    w.reserve(losses.size());
    for (double l : losses)
        w.push_back(mode == EpochMode::Original ? weight(spec, l) : weight_truncated(spec, l, sigma));
    return w;
}

}  // namespace rtme

// SPDX-License-Identifier: Apache-2.0
//
// Robust M-estimators applied to a per-example cross-entropy loss L >= 0.
//
//   kind        phi(L)              weight(L) = dphi/dL
//   CE          L                   1
//   Catoni      log(1 + L + L^2/2)  (1 + L) / (1 + L + L^2/2)
//   LogSum      log(1 + L/eps)      eps / (eps + L)
//   WelschPlus  1 - exp(-L/a^2)     exp(-L/a^2) / a^2
//
// The truncated variants clamp L at sigma: phi is flat above sigma and the
// weight is exactly zero there. L == sigma belongs to the lower branch.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtme {

enum class EstimatorKind { CE, Catoni, LogSum, WelschPlus };

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::CE;
    double epsilon = 1.0;  // LogSum, >= 1
    double alpha = 1.0;    // WelschPlus, > 0

    /// Throws ConfigError when the intrinsic parameter is out of range.
    void validate() const;

    /// The adaptable parameter (epsilon or alpha); 1 for CE / Catoni.
    double parameter() const;
    EstimatorSpec with_parameter(double p) const;
    bool has_parameter() const { return kind == EstimatorKind::LogSum || kind == EstimatorKind::WelschPlus; }
};

std::string_view to_string(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator_kind(std::string_view name);

double phi(const EstimatorSpec& spec, double loss);
double weight(const EstimatorSpec& spec, double loss);
double phi_truncated(const EstimatorSpec& spec, double loss, double sigma);
double weight_truncated(const EstimatorSpec& spec, double loss, double sigma);

enum class EpochMode { Original, Truncated };

std::string_view to_string(EpochMode mode);

/// Original iff epoch % period == 0.
EpochMode epoch_mode(long epoch, long period);

/// Per-example gradient weights for one mini-batch under the given mode.
std::vector<double> batch_weights(const EstimatorSpec& spec, EpochMode mode, std::span<const double> losses,
                                  double sigma);

}  // namespace rtme

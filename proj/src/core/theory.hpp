// SPDX-License-Identifier: Apache-2.0
//
// Exact risk enumeration over finite hypothesis classes.
//
// A FiniteTask is a discrete instance space with marginals p(x), a clean
// label y(x), and for every instance an alphabet of probability vectors a
// classifier may output there. A hypothesis picks one alphabet entry per
// instance, so the class holds prod_x |alphabet(x)| classifiers. The loss is
// psi(f(x), i) = phi_truncated(spec, -log f(x)_i, sigma).
//
// For symmetric noise at rate eta the noisy risk expands to
//   R^eta(f) = (1 - eta k/(k-1)) R(f) + eta/(k-1) E[sum_i psi(f(x), i)],
// and with c1 <= sum_i psi <= c2 and Delta(f) = R(f*) - R(f) <= 0,
//   R^eta(f*) - R^eta(f) <= ((c2 - c1 - k Delta) eta + (k-1) Delta) / (k-1),
// which is <= 0 once eta < (1-k) Delta / (c2 - c1 - k Delta).
#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "rng.hpp"

namespace rtme {

struct FiniteTask {
    int k = 0;
    std::vector<double> marginals;  // p(x), sums to 1
    std::vector<int> labels;        // y(x)
    std::vector<std::vector<std::vector<double>>> alphabet;  // alphabet[x][a] is a probability vector

    std::size_t num_instances() const { return marginals.size(); }
    std::size_t num_hypotheses() const;
    /// Alphabet index per instance; instance 0 is the most significant digit.
    std::vector<std::size_t> decode(std::size_t hypothesis) const;
    void validate() const;

    /// k = 3, four instances, five prediction vectors each (625 hypotheses).
    static FiniteTask bundled();
    static FiniteTask random(Rng& rng, int k, std::size_t instances, std::size_t alphabet_size);
};

struct PsiSpec {
    EstimatorSpec estimator{EstimatorKind::Catoni};
    double sigma = 2.0;  // +inf disables truncation
};

double psi(const PsiSpec& spec, const std::vector<double>& probs, int cls);

double clean_risk(const FiniteTask& task, std::size_t hypothesis, const PsiSpec& spec);
double noisy_risk_direct(const FiniteTask& task, std::size_t hypothesis, const PsiSpec& spec, double eta);
double noisy_risk_identity(const FiniteTask& task, std::size_t hypothesis, const PsiSpec& spec, double eta);
/// Simple non-uniform noise: rate eta_x, spread evenly over the other classes.
double noisy_risk_direct(const FiniteTask& task, std::size_t hypothesis, const PsiSpec& spec,
                         const std::vector<double>& eta_per_instance);

enum class Verdict { Pass, Fail, Informational };

std::string to_string(Verdict v);

struct RiskReport {
    std::string check;  // "lemma1" or "corollary1"
    std::vector<double> clean_risks;
    std::vector<double> noisy_risks;
    std::vector<std::size_t> clean_argmin;
    std::vector<std::size_t> noisy_argmin;
    std::size_t f_star = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<double> delta;        // R(f*) - R(f), <= 0
    std::vector<double> delta_prose;  // R(f) - R(f*), >= 0
    double eta = 0.0;                 // lemma1; max eta_x for corollary1
    std::vector<double> eta_per_instance;
    double bound = std::numeric_limits<double>::infinity();  // min over non-minimizers
    double bound_prose = -std::numeric_limits<double>::infinity();
    std::string convention;
    double worst_margin = -std::numeric_limits<double>::infinity();
    bool literal_preconditions_hold = false;  // corollary1, per-instance reading
    bool preconditions_hold = false;
    bool clean_in_noisy = false;
    Verdict verdict = Verdict::Informational;
};

/// Symmetric noise at rate eta; throws InputError for an empty class or
/// eta outside [0, (k-1)/k).
RiskReport lemma1_check(const FiniteTask& task, const PsiSpec& spec, double eta);

/// Per-instance rates. The verdict uses the averaged sufficient condition
///   sum_x p(x) (c2 - c1 - k D_f(x)) eta_x + (k-1) Delta(f) < 0  for every non-minimizer f,
/// with D_f(x) = psi(f*(x), y) - psi(f(x), y); uniform rates reduce it to the
/// lemma1 bound. The pointwise per-instance reading is reported alongside.
RiskReport corollary1_check(const FiniteTask& task, const PsiSpec& spec, const std::vector<double>& eta_per_instance);

/// Serialized report (stable key order).
std::string risk_report_json(const RiskReport& report, bool include_per_hypothesis = true);

}  // namespace rtme

// SPDX-License-Identifier: Apache-2.0
#include "theory.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "errors.hpp"

namespace rtme {

std::size_t FiniteTask::num_hypotheses() const {
    std::size_t n = 1;
    for (const auto& a : alphabet) n *= a.size();
    return alphabet.empty() ? 0 : n;
}

std::vector<std::size_t> FiniteTask::decode(std::size_t h) const {
    std::vector<std::size_t> pick(alphabet.size());
    for (std::size_t x = alphabet.size(); x-- > 0;) {
        pick[x] = h % alphabet[x].size();
        h /= alphabet[x].size();
    }
    return pick;
}

void FiniteTask::validate() const {
    if (k < 2) throw InputError("finite task needs k >= 2");
    const std::size_t n = marginals.size();
    if (n == 0 || labels.size() != n || alphabet.size() != n)
        throw InputError("finite task arrays disagree in length or are empty");
    double total = 0.0;
    for (double p : marginals) {
        if (!(p >= 0.0)) throw InputError("negative marginal");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("marginals must sum to 1");
    for (std::size_t x = 0; x < n; ++x) {
        if (labels[x] < 0 || labels[x] >= k) throw InputError("clean label out of range");
        if (alphabet[x].empty()) throw InputError("empty hypothesis set at instance " + std::to_string(x));
        for (const auto& v : alphabet[x]) {
            if (v.size() != static_cast<std::size_t>(k)) throw InputError("prediction vector has wrong length");
            double s = 0.0;
            for (double q : v) {
                if (!(q > 0.0 && q < 1.0)) throw InputError("prediction entries must lie strictly inside (0, 1)");
                s += q;
            }
            if (std::abs(s - 1.0) > 1e-9) throw InputError("prediction vector must sum to 1");
        }
    }
}

FiniteTask FiniteTask::bundled() {
    const std::vector<std::vector<double>> vocab{
        {0.80, 0.15, 0.05},
        {0.15, 0.80, 0.05},
        {0.05, 0.15, 0.80},
        {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
        {0.60, 0.30, 0.10},
    };
    FiniteTask t;
    t.k = 3;
    t.marginals = {0.4, 0.3, 0.2, 0.1};
    t.labels = {0, 1, 2, 0};
    t.alphabet.assign(4, vocab);
    return t;
}

FiniteTask FiniteTask::random(Rng& rng, int k, std::size_t instances, std::size_t alphabet_size) {
    FiniteTask t;
    t.k = k;
    double total = 0.0;
    for (std::size_t x = 0; x < instances; ++x) {
        t.marginals.push_back(0.05 + rng.uniform());
        total += t.marginals.back();
        t.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
        std::vector<std::vector<double>> vecs;
        for (std::size_t a = 0; a < alphabet_size; ++a) {
            std::vector<double> v(static_cast<std::size_t>(k));
            double s = 0.0;
            for (double& q : v) {
                q = 0.02 + rng.uniform();
                s += q;
            }
            for (double& q : v) q /= s;
            vecs.push_back(std::move(v));
        }
        t.alphabet.push_back(std::move(vecs));
    }
    for (double& p : t.marginals) p /= total;
    return t;
}

double psi(const PsiSpec& spec, const std::vector<double>& probs, int cls) {
    const double loss = -std::log(probs[static_cast<std::size_t>(cls)]);
    return phi_truncated(spec.estimator, std::max(loss, 0.0), spec.sigma);
}

namespace {

void check_eta(double eta, int k) {
    const double cap = static_cast<double>(k - 1) / static_cast<double>(k);
    if (!(eta >= 0.0 && eta < cap))
        throw InputError("noise rate must lie in [0, (k-1)/k), got " + std::to_string(eta));
}

// psi(f(x), i) for every class, one row per instance.
std::vector<std::vector<double>> psi_table(const FiniteTask& task, std::size_t h, const PsiSpec& spec) {
    const auto pick = task.decode(h);
    std::vector<std::vector<double>> t(task.num_instances());
    for (std::size_t x = 0; x < task.num_instances(); ++x)
        for (int i = 0; i < task.k; ++i) t[x].push_back(psi(spec, task.alphabet[x][pick[x]], i));
    return t;
}

double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s;
}

std::vector<std::size_t> argmin_set(const std::vector<double>& risks) {
    const double mn = *std::min_element(risks.begin(), risks.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(mn));
    std::vector<std::size_t> out;
    for (std::size_t h = 0; h < risks.size(); ++h)
        if (risks[h] <= mn + tol) out.push_back(h);
    return out;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

// Risks, c1/c2, f* and Delta shared by both checks.
RiskReport enumerate(const FiniteTask& task, const PsiSpec& spec) {
    task.validate();
    const std::size_t H = task.num_hypotheses();
    if (H == 0) throw InputError("hypothesis set is empty");
    RiskReport r;
    r.clean_risks.resize(H);
    for (std::size_t h = 0; h < H; ++h) r.clean_risks[h] = clean_risk(task, h, spec);

    // c1 / c2 range over every (instance, prediction) a hypothesis can produce.
    r.c1 = std::numeric_limits<double>::infinity();
    r.c2 = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < task.num_instances(); ++x)
        for (const auto& v : task.alphabet[x]) {
            double s = 0.0;
            for (int i = 0; i < task.k; ++i) s += psi(spec, v, i);
            r.c1 = std::min(r.c1, s);
            r.c2 = std::max(r.c2, s);
        }

    r.clean_argmin = argmin_set(r.clean_risks);
    r.f_star = r.clean_argmin.front();
    r.delta.resize(H);
    r.delta_prose.resize(H);
    for (std::size_t h = 0; h < H; ++h) {
        r.delta[h] = r.clean_risks[r.f_star] - r.clean_risks[h];
        r.delta_prose[h] = -r.delta[h];
    }
    return r;
}

bool is_minimizer(const RiskReport& r, std::size_t h) {
    return std::binary_search(r.clean_argmin.begin(), r.clean_argmin.end(), h);
}

// Lemma bound over non-minimizers; returns false when some denominator
// c2 - c1 - k Delta is not positive.
bool compute_bounds(RiskReport& r, const FiniteTask& task) {
    const double k = static_cast<double>(task.k);
    r.bound = std::numeric_limits<double>::infinity();
    r.bound_prose = std::numeric_limits<double>::infinity();
    bool denominators_positive = true;
    for (std::size_t h = 0; h < r.clean_risks.size(); ++h) {
        if (is_minimizer(r, h)) continue;
        const double denom = r.c2 - r.c1 - k * r.delta[h];
        if (!(denom > 0.0)) {
            denominators_positive = false;
            continue;
        }
        r.bound = std::min(r.bound, (1.0 - k) * r.delta[h] / denom);
        const double denom_prose = r.c2 - r.c1 - k * r.delta_prose[h];
        if (denom_prose != 0.0) r.bound_prose = std::min(r.bound_prose, (1.0 - k) * r.delta_prose[h] / denom_prose);
    }
    const bool proof_positive = r.bound > 0.0;
    const bool prose_positive = r.bound_prose > 0.0;
    r.convention = std::string("proof (delta = R(f*) - R(f) <= 0): bound ") +
                   (proof_positive ? "positive" : "non-positive") + "; prose (delta = R(f) - R(f*) >= 0): bound " +
                   (prose_positive ? "positive" : "non-positive") + "; verdict uses the proof convention";
    return denominators_positive;
}

void set_verdict(RiskReport& r) {
    r.noisy_argmin = argmin_set(r.noisy_risks);
    r.clean_in_noisy = is_subset(r.clean_argmin, r.noisy_argmin);
    r.verdict = !r.preconditions_hold ? Verdict::Informational : (r.clean_in_noisy ? Verdict::Pass : Verdict::Fail);
}

}  // namespace

double clean_risk(const FiniteTask& task, std::size_t h, const PsiSpec& spec) {
    const auto pick = task.decode(h);
    double r = 0.0;
    for (std::size_t x = 0; x < task.num_instances(); ++x)
        r += task.marginals[x] * psi(spec, task.alphabet[x][pick[x]], task.labels[x]);
    return r;
}

double noisy_risk_direct(const FiniteTask& task, std::size_t h, const PsiSpec& spec, double eta) {
    check_eta(eta, task.k);
    return noisy_risk_direct(task, h, spec, std::vector<double>(task.num_instances(), eta));
}

double noisy_risk_direct(const FiniteTask& task, std::size_t h, const PsiSpec& spec,
                         const std::vector<double>& eta_per_instance) {
    if (eta_per_instance.size() != task.num_instances()) throw InputError("one noise rate per instance required");
    const auto t = psi_table(task, h, spec);
    const double km1 = static_cast<double>(task.k - 1);
    double r = 0.0;
    for (std::size_t x = 0; x < task.num_instances(); ++x) {
        const double eta = eta_per_instance[x];
        check_eta(eta, task.k);
        const int y = task.labels[x];
        double others = 0.0;
        for (int i = 0; i < task.k; ++i)
            if (i != y) others += t[x][static_cast<std::size_t>(i)];
        r += task.marginals[x] * ((1.0 - eta) * t[x][static_cast<std::size_t>(y)] + eta / km1 * others);
    }
    return r;
}

double noisy_risk_identity(const FiniteTask& task, std::size_t h, const PsiSpec& spec, double eta) {
    check_eta(eta, task.k);
    const auto t = psi_table(task, h, spec);
    const double k = static_cast<double>(task.k);
    double expected_sum = 0.0;
    for (std::size_t x = 0; x < task.num_instances(); ++x) expected_sum += task.marginals[x] * sum_of(t[x]);
    return (1.0 - eta * k / (k - 1.0)) * clean_risk(task, h, spec) + eta / (k - 1.0) * expected_sum;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "PASS";
        case Verdict::Fail: return "FAIL";
        case Verdict::Informational: return "informational";
    }
    return "?";
}

RiskReport lemma1_check(const FiniteTask& task, const PsiSpec& spec, double eta) {
    check_eta(eta, task.k);
    RiskReport r = enumerate(task, spec);
    r.check = "lemma1";
    r.eta = eta;
    r.eta_per_instance.assign(task.num_instances(), eta);
    r.noisy_risks.resize(r.clean_risks.size());
    for (std::size_t h = 0; h < r.clean_risks.size(); ++h) r.noisy_risks[h] = noisy_risk_direct(task, h, spec, eta);

    // Margin form of the same condition, for reporting parity with corollary1.
    const double k = static_cast<double>(task.k);
    for (std::size_t h = 0; h < r.clean_risks.size(); ++h) {
        if (is_minimizer(r, h)) continue;
        const double m = (r.c2 - r.c1 - k * r.delta[h]) * eta + (k - 1.0) * r.delta[h];
        r.worst_margin = std::max(r.worst_margin, m);
    }
    r.preconditions_hold = compute_bounds(r, task) && eta < r.bound;
    r.literal_preconditions_hold = r.preconditions_hold;
    set_verdict(r);
    return r;
}

RiskReport corollary1_check(const FiniteTask& task, const PsiSpec& spec, const std::vector<double>& eta_per_instance) {
    if (eta_per_instance.size() != task.num_instances()) throw InputError("one noise rate per instance required");
    for (double e : eta_per_instance) check_eta(e, task.k);
    RiskReport r = enumerate(task, spec);
    r.check = "corollary1";
    r.eta_per_instance = eta_per_instance;
    r.eta = *std::max_element(eta_per_instance.begin(), eta_per_instance.end());
    const std::size_t H = r.clean_risks.size();
    r.noisy_risks.resize(H);
    for (std::size_t h = 0; h < H; ++h) r.noisy_risks[h] = noisy_risk_direct(task, h, spec, eta_per_instance);

    const double k = static_cast<double>(task.k);
    const auto star = psi_table(task, r.f_star, spec);
    bool literal = true;
    for (std::size_t h = 0; h < H; ++h) {
        if (is_minimizer(r, h)) continue;
        const auto t = psi_table(task, h, spec);
        double m = (k - 1.0) * r.delta[h];
        for (std::size_t x = 0; x < task.num_instances(); ++x) {
            const auto y = static_cast<std::size_t>(task.labels[x]);
            const double d = star[x][y] - t[x][y];
            const double denom = r.c2 - r.c1 - k * d;
            m += task.marginals[x] * denom * eta_per_instance[x];
            if (!(denom > 0.0) || !(eta_per_instance[x] < (1.0 - k) * d / denom)) literal = false;
        }
        r.worst_margin = std::max(r.worst_margin, m);
    }
    const bool denominators_positive = compute_bounds(r, task);
    r.literal_preconditions_hold = literal && denominators_positive;
    r.preconditions_hold = r.worst_margin < 0.0;
    set_verdict(r);
    return r;
}

std::string risk_report_json(const RiskReport& r, bool include_per_hypothesis) {
    auto finite_or_null = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json j;
    j["check"] = r.check;
    j["verdict"] = to_string(r.verdict);
    j["preconditions_hold"] = r.preconditions_hold;
    j["literal_preconditions_hold"] = r.literal_preconditions_hold;
    j["clean_argmin_in_noisy_argmin"] = r.clean_in_noisy;
    j["eta"] = r.eta;
    j["eta_per_instance"] = r.eta_per_instance;
    j["c1"] = r.c1;
    j["c2"] = r.c2;
    j["bound"] = finite_or_null(r.bound);
    j["bound_prose_convention"] = finite_or_null(r.bound_prose);
    j["convention"] = r.convention;
    j["worst_margin"] = finite_or_null(r.worst_margin);
    j["f_star"] = r.f_star;
    j["clean_argmin"] = r.clean_argmin;
    j["noisy_argmin"] = r.noisy_argmin;
    j["num_hypotheses"] = r.clean_risks.size();
    if (include_per_hypothesis) {
        j["clean_risks"] = r.clean_risks;
        j["noisy_risks"] = r.noisy_risks;
        j["delta"] = r.delta;
    }
    return j.dump(2);
}

}  // namespace rtme

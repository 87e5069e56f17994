// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one line per criterion:
//   criterion 7: FAIL  sym-30%: CE 0.9851 catoni 0.9858 ...  (41.2 s)
// Usage: rtme_acceptance [--only N]... ; exit status 1 if any selected criterion fails.
// Criterion 8 looks for MNIST IDX files in $RTME_MNIST_DIR (default data/mnist).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "netcore.hpp"
#include "noise.hpp"
#include "theory.hpp"
#include "threshold.hpp"
#include "trainer.hpp"

using namespace rtme;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

std::string num(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

// ---------------------------------------------------------------- 1
double objective(const MlpModel& m, const Matrix& x, const std::vector<int>& y, const std::vector<double>& w) {
    const auto losses = softmax_ce_per_example(mlp_logits(m, x), y);
    double s = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) s += w[i] * losses[i];
    return s / static_cast<double>(losses.size());
}

Outcome gradient_oracle() {
    Rng rng(2024);
    double worst = 0.0;
    std::size_t checked = 0;
    const EstimatorKind kinds[] = {EstimatorKind::CE, EstimatorKind::Catoni, EstimatorKind::LogSum,
                                   EstimatorKind::WelschPlus};
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = 1 + rng.below(5), h = 2 + rng.below(7), k = 2 + rng.below(4), b = 1 + rng.below(9);
        const Activation act = rng.below(2) ? Activation::ReLU : Activation::Softsign;
        MlpModel m = MlpModel::he_uniform({d, h, k}, rng, act);
        for (auto& bias : m.biases)
            for (double& v : bias) v = 0.1 * rng.normal();
        Matrix x(b, d);
        for (double& v : x.data()) v = rng.normal();
        std::vector<int> y(b);
        for (int& v : y) v = static_cast<int>(rng.below(k));

        EstimatorSpec spec{kinds[rng.below(4)]};
        if (spec.kind == EstimatorKind::LogSum) spec.epsilon = 1.0 + 2.0 * rng.uniform();
        if (spec.kind == EstimatorKind::WelschPlus) spec.alpha = 0.5 + 2.5 * rng.uniform();
        const EpochMode mode = rng.below(2) ? EpochMode::Truncated : EpochMode::Original;
        const auto fwd = mlp_forward(m, x);
        const auto losses = softmax_ce_per_example(fwd.logits, y);
        const double sigma = 0.2 + 2.0 * rng.uniform();
        const auto w = batch_weights(spec, mode, losses, sigma);
        const GradientSet g = mlp_backward(m, fwd.cache, y, w);

        const double step = 1e-6;
        for (std::size_t l = 0; l < m.num_layers(); ++l) {
            auto check = [&](double& param, double analytic) {
                const double keep = param;
                param = keep + step;
                const double up = objective(m, x, y, w);
                param = keep - step;
                const double down = objective(m, x, y, w);
                param = keep;
                const double numeric = (up - down) / (2.0 * step);
                const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
                worst = std::max(worst, std::abs(analytic - numeric) / scale);
                ++checked;
            };
            auto& wd = m.weights[l].data();
            const auto& gd = g.weights[l].data();
            for (std::size_t i = 0; i < wd.size(); ++i) check(wd[i], gd[i]);
            for (std::size_t i = 0; i < m.biases[l].size(); ++i) check(m.biases[l][i], g.biases[l][i]);
        }
    }
    return {worst <= 1e-4, false, std::to_string(checked) + " parameters, max relative error " + std::to_string(worst)};
}

// ---------------------------------------------------------------- 2
Outcome estimator_formulas() {
    struct Case {
        EstimatorSpec spec;
        std::function<double(double)> phi, weight;
    };
    const double eps = 1.7, alpha = 1.3;
    const std::vector<Case> cases = {
        {{EstimatorKind::CE}, [](double l) { return l; }, [](double) { return 1.0; }},
        {{EstimatorKind::Catoni}, [](double l) { return std::log(1.0 + l + l * l / 2.0); },
         [](double l) { return (1.0 + l) / (1.0 + l + l * l / 2.0); }},
        {{EstimatorKind::LogSum, eps}, [eps](double l) { return std::log(1.0 + l / eps); },
         [eps](double l) { return eps / (eps + l); }},
        {{EstimatorKind::WelschPlus, 1.0, alpha}, [alpha](double l) { return 1.0 - std::exp(-l / (alpha * alpha)); },
         [alpha](double l) { return std::exp(-l / (alpha * alpha)) / (alpha * alpha); }},
    };
    double worst = 0.0;
    bool truncation_ok = true, monotone = true;
    for (const auto& c : cases) {
        double prev_w = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 1000; ++i) {
            const double l = 20.0 * i / 999.0;
            const double p = phi(c.spec, l), w = weight(c.spec, l);
            worst = std::max({worst, std::abs(p - c.phi(l)) / std::max(1.0, std::abs(c.phi(l))),
                              std::abs(w - c.weight(l)) / std::max(1.0, std::abs(c.weight(l)))});
            if (c.spec.kind != EstimatorKind::CE && !(w <= prev_w)) monotone = false;
            prev_w = w;
            const double sigma = 7.3;
            if (l > sigma && weight_truncated(c.spec, l, sigma) != 0.0) truncation_ok = false;
            if (l > sigma && phi_truncated(c.spec, l, sigma) != phi(c.spec, sigma)) truncation_ok = false;
            if (l <= sigma && weight_truncated(c.spec, l, sigma) != w) truncation_ok = false;
        }
        for (double sigma : {0.5, 1.0, 3.25}) {
            if (weight_truncated(c.spec, sigma, sigma) != weight(c.spec, sigma)) truncation_ok = false;
            if (weight_truncated(c.spec, std::nextafter(sigma, 1e9), sigma) != 0.0) truncation_ok = false;
        }
    }
    const bool pass = worst <= 1e-12 && truncation_ok && monotone;
    return {pass, false,
            "max formula error " + std::to_string(worst) + ", truncation " + (truncation_ok ? "ok" : "broken") +
                ", monotone " + (monotone ? "yes" : "no")};
}

// ---------------------------------------------------------------- 3
Outcome three_sigma() {
    const double expected = 2.0 + 3.0 * std::sqrt(2.0 / 3.0);
    const double got = three_sigma_threshold({{1, 2, 3, 10, 20}, 0});
    const bool worked = std::abs(got - expected) <= 1e-12;
    Rng rng(7);
    bool perm = true, scale = true;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> v(2 + rng.below(60));
        for (double& x : v) x = std::abs(rng.normal()) * (1.0 + 4.0 * rng.uniform());
        const double s0 = three_sigma_threshold({v, 0}, 0.0);
        auto shuffled = v;
        rng.shuffle(shuffled);
        if (std::abs(three_sigma_threshold({shuffled, 0}, 0.0) - s0) > 1e-12 * std::max(1.0, s0)) perm = false;
        const double c = 0.1 + 10.0 * rng.uniform();
        auto scaled = v;
        for (double& x : scaled) x *= c;
        if (std::abs(three_sigma_threshold({scaled, 0}, 0.0) - c * s0) > 1e-12 * std::max(1.0, c * s0)) scale = false;
    }
    return {worked && perm && scale, false,
            "worked example " + std::to_string(got) + ", permutation " + (perm ? "ok" : "broken") + ", scale " +
                (scale ? "ok" : "broken")};
}

// ---------------------------------------------------------------- 4
Outcome schedule_law() {
    bool ok = true;
    std::string detail;
    for (long r : {2L, 3L, 5L, 10L}) {
        long count = 0;
        for (long t = 0; t < 1000; ++t) count += epoch_mode(t, r) == EpochMode::Original;
        const long expected = (1000 + r - 1) / r;
        ok = ok && count == expected;
        detail += "R=" + std::to_string(r) + ":" + std::to_string(count) + "/" + std::to_string(expected) + " ";
    }
    return {ok, false, detail};
}

// ---------------------------------------------------------------- 5
Outcome noise_statistics() {
    MixtureParams p;
    p.n = 100000;
    p.k = 10;
    p.dim = 5;
    const LabeledDataset clean = make_gaussian_mixture(p, 11);
    const double sym = noise_stats(inject_noise(clean, {NoiseKind::Symmetric, 0.3, 1})).flip_rate;
    const LabeledDataset pair = inject_noise(clean, {NoiseKind::Pairflip, 0.3, 2});
    bool support = true;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const int c = pair.clean_labels[i], o = pair.noisy_labels[i];
        if (o != c && o != (c + 1) % p.k) support = false;
    }
    const double ins = noise_stats(inject_noise(clean, {NoiseKind::Instance, 0.3, 3})).flip_rate;
    const bool pass = std::abs(sym - 0.3) <= 0.01 && support && std::abs(ins - 0.3) <= 0.02;
    return {pass, false,
            "symmetric " + num(sym) + ", pairflip support " + (support ? "ok" : "broken") + ", instance " + num(ins)};
}

// ---------------------------------------------------------------- 6
Outcome lemma_check() {
    const FiniteTask task = FiniteTask::bundled();
    const PsiSpec psi{EstimatorSpec{EstimatorKind::Catoni}, 2.0};
    const double bound = lemma1_check(task, psi, 0.0).bound;
    bool contained = std::isfinite(bound) && bound > 0.0;
    int grid = 0;
    for (int j = 0; j < 25 && contained; ++j) {
        const double eta = bound * j / 25.0;
        const RiskReport r = lemma1_check(task, psi, eta);
        contained = r.clean_in_noisy && r.verdict == Verdict::Pass;
        ++grid;
    }
    Rng rng(99);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int k = 2 + static_cast<int>(rng.below(4));
        const FiniteTask rt = FiniteTask::random(rng, k, 2 + rng.below(3), 2 + rng.below(3));
        const double eta = rng.uniform() * (k - 1.0) / k * 0.99;
        for (std::size_t h = 0; h < rt.num_hypotheses(); ++h)
            worst = std::max(worst, std::abs(noisy_risk_direct(rt, h, psi, eta) - noisy_risk_identity(rt, h, psi, eta)));
    }
    return {contained && worst <= 1e-12, false,
            "bound " + num(bound, 6) + ", " + std::to_string(grid) + " grid points contained, identity gap " +
                std::to_string(worst)};
}

// ---------------------------------------------------------------- 7, 9, 10, 11
const std::vector<std::uint64_t> kSeeds{0, 1, 2, 3, 4};

RunConfig mixture_config(NoiseKind kind, double tau) {
    RunConfig cfg;
    cfg.noise.kind = kind;
    cfg.noise.tau = tau;
    return cfg;
}

std::vector<SplitDataset> splits_for(const RunConfig& cfg) {
    std::vector<SplitDataset> out;
    for (auto s : kSeeds) out.push_back(build_split(cfg, s));
    return out;
}

std::vector<RunRecord> run_seeds(RunConfig cfg, const std::vector<SplitDataset>& splits) {
    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < kSeeds.size(); ++i) out.push_back(run_method(cfg, splits[i], kSeeds[i]).record);
    return out;
}

double mean_best(const std::vector<RunRecord>& recs) {
    std::vector<double> v;
    for (const auto& r : recs) v.push_back(r.test_acc_at_best);
    return mean_of(v);
}

Outcome desk_robustness() {
    struct Setting {
        const char* name;
        NoiseKind kind;
        double tau, margin;
    };
    const Setting settings[] = {{"sym-30%", NoiseKind::Symmetric, 0.3, 0.03},
                                {"sym-50%", NoiseKind::Symmetric, 0.5, 0.05},
                                {"pair-45%", NoiseKind::Pairflip, 0.45, 0.03}};
    bool pass = true;
    std::string detail;
    for (const auto& s : settings) {
        RunConfig cfg = mixture_config(s.kind, s.tau);
        const auto splits = splits_for(cfg);
        cfg.method = TrainMethod::Ce;
        const double ce = mean_best(run_seeds(cfg, splits));
        detail += std::string(s.name) + ": CE " + num(ce);
        cfg.method = TrainMethod::Rtme;
        for (EstimatorKind k : {EstimatorKind::Catoni, EstimatorKind::LogSum, EstimatorKind::WelschPlus}) {
            cfg.train.estimator = EstimatorSpec{k};
            const double acc = mean_best(run_seeds(cfg, splits));
            pass = pass && acc >= ce + s.margin;
            detail += " " + std::string(to_string(k)) + " " + num(acc);
        }
        detail += "; ";
    }
    return {pass, false, detail};
}

Outcome stability_ablation() {
    RunConfig cfg = mixture_config(NoiseKind::Symmetric, 0.3);
    const auto splits = splits_for(cfg);
    auto drop = [&](TrainMethod m) {
        RunConfig c = cfg;
        c.method = m;
        const double base = mean_best(run_seeds(c, splits));
        c.train.sigma_perturb = -0.2;
        return base - mean_best(run_seeds(c, splits));
    };
    const double rt = drop(TrainMethod::Rtme), tr = drop(TrainMethod::Truncated);
    const bool pass = rt <= 0.5 * tr || tr < 0.01;
    return {pass, false, "RTME drop " + num(rt) + ", truncated-only drop " + num(tr)};
}

Outcome r_sweep() {
    RunConfig cfg = mixture_config(NoiseKind::Symmetric, 0.3);
    const auto splits = splits_for(cfg);
    cfg.train.period = 2;
    const double r2 = mean_best(run_seeds(cfg, splits));
    cfg.train.period = 50;
    const double r50 = mean_best(run_seeds(cfg, splits));
    return {r2 >= r50 - 0.005, false, "acc(R=2) " + num(r2) + ", acc(R=50) " + num(r50)};
}

Outcome memorization() {
    RunConfig cfg = mixture_config(NoiseKind::Symmetric, 0.3);
    const auto splits = splits_for(cfg);
    const auto at = static_cast<std::size_t>(cfg.train.epochs / 4);
    auto fit = [&](TrainMethod m) {
        RunConfig c = cfg;
        c.method = m;
        std::vector<double> v;
        for (const auto& r : run_seeds(c, splits)) v.push_back(r.rows.at(at).noisy_fit);
        return mean_of(v);
    };
    const double rt = fit(TrainMethod::Rtme), ce = fit(TrainMethod::Ce);
    return {rt < ce, false, "noisy fit at epoch " + std::to_string(at) + ": RTME " + num(rt) + ", CE " + num(ce)};
}

// ---------------------------------------------------------------- 8
Outcome mnist_subset() {
    const char* env = std::getenv("RTME_MNIST_DIR");
    const std::filesystem::path dir = env ? env : "data/mnist";
    const auto ti = dir / "train-images-idx3-ubyte", tl = dir / "train-labels-idx1-ubyte";
    const auto si = dir / "t10k-images-idx3-ubyte", sl = dir / "t10k-labels-idx1-ubyte";
    for (const auto& p : {ti, tl, si, sl})
        if (!std::filesystem::exists(p)) return {true, true, "no IDX files under " + dir.string()};
    RunConfig cfg;
    cfg.dataset.kind = DatasetKind::Idx;
    cfg.dataset.train_images = ti;
    cfg.dataset.train_labels = tl;
    cfg.dataset.test_images = si;
    cfg.dataset.test_labels = sl;
    cfg.dataset.subset = 6000;
    cfg.noise = {NoiseKind::Symmetric, 0.5, 0};
    cfg.train.hidden = {256};
    std::vector<double> ce, rt;
    for (std::uint64_t s : {0, 1, 2}) {
        const SplitDataset split = build_split(cfg, s);
        cfg.method = TrainMethod::Ce;
        ce.push_back(run_method(cfg, split, s).record.test_acc_at_best);
        cfg.method = TrainMethod::Rtme;
        rt.push_back(run_method(cfg, split, s).record.test_acc_at_best);
    }
    const double gap = mean_of(rt) - mean_of(ce);
    return {gap >= 0.02, false, "CE " + num(mean_of(ce)) + ", RT-Catoni " + num(mean_of(rt)) + ", gap " + num(gap)};
}

// ---------------------------------------------------------------- 12
std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "rtme_acceptance_determinism";
    std::filesystem::remove_all(root);
    RunConfig cfg = mixture_config(NoiseKind::Symmetric, 0.3);
    cfg.train.epochs = 12;
    cfg.dataset.mixture.n = 600;
    cfg.dataset.n_test = 400;
    cfg.sweep.seeds = {3, 4};
    cfg.sweep.periods = {2, 5};
    cfg.sweep.sigma_perturb = {-0.2, 0.0};
    cfg.sweep.workers = 2;
    cfg.train.adapt.mode = AdaptMode::GaussianFit;
    cfg.train.estimator = EstimatorSpec{EstimatorKind::LogSum};
    using Cmd = std::function<CommandResult(const RunConfig&)>;
    const std::vector<std::pair<std::string, Cmd>> cmds = {
        {"train", cmd_train},
        {"sweep-r", cmd_sweep_r},
        {"perturb-sigma", cmd_perturb_sigma},
        {"hist", [](const RunConfig& c) { return cmd_hist(c); }},
        {"lemma-check", cmd_lemma_check},
        {"noise-stats", cmd_noise_stats},
    };
    std::size_t compared = 0;
    std::string mismatched;
    for (const auto& [name, cmd] : cmds) {
        std::vector<CommandResult> runs;
        for (int rep = 0; rep < 2; ++rep) {
            RunConfig c = cfg;
            c.out_dir = root / (name + "_" + std::to_string(rep));
            runs.push_back(cmd(c));
        }
        for (std::size_t i = 0; i < runs[0].artifacts.size(); ++i) {
            const auto& a = runs[0].artifacts[i];
            const auto& b = runs[1].artifacts[i];
            if (a.extension() != ".csv" && a.extension() != ".json") continue;
            ++compared;
            if (slurp(a) != slurp(b) || slurp(a).empty()) mismatched += a.filename().string() + " ";
        }
    }
    std::filesystem::remove_all(root);
    return {mismatched.empty() && compared > 0, false,
            std::to_string(compared) + " artifacts compared" + (mismatched.empty() ? "" : ", differ: " + mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria = {
        {1, {"gradient oracle", gradient_oracle}},
        {2, {"estimator formulas", estimator_formulas}},
        {3, {"three-sigma threshold", three_sigma}},
        {4, {"schedule law", schedule_law}},
        {5, {"noise statistics", noise_statistics}},
        {6, {"lemma enumeration", lemma_check}},
        {7, {"desk-scale robustness", desk_robustness}},
        {8, {"MNIST subset", mnist_subset}},
        {9, {"stability ablation", stability_ablation}},
        {10, {"R sweep", r_sweep}},
        {11, {"memorization", memorization}},
        {12, {"determinism", determinism}},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
            return 2;
        }
    }
    int failures = 0;
    for (const auto& [id, entry] : criteria) {
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = entry.second();
        } catch (const std::exception& e) {
            o = {false, false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* verdict = o.skipped ? "SKIP" : (o.pass ? "PASS" : "FAIL");
        std::printf("criterion %d (%s): %s  %s  (%.1f s)\n", id, entry.first, verdict, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures ? 1 : 0;
}

// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "artifacts.hpp"
#include "errors.hpp"
#include "json.hpp"

namespace rtme {

using ojson = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

std::filesystem::path artifact(const RunConfig& cfg, const std::string& stem, const std::string& ext) {
    return cfg.out_dir / (stem + "_" + cfg.hash() + ext);
}

ojson config_echo(const RunConfig& cfg) {
    ojson echo = ojson::object();
    std::istringstream in(cfg.canonical());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        echo[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return echo;
}

ojson summary_head(const RunConfig& cfg, const std::string& command) {
    ojson j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config_hash"] = cfg.hash();
    j["config"] = config_echo(cfg);
    return j;
}

ojson number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

void finish(CommandResult& res, const RunConfig& cfg, const std::string& command, ojson summary) {
    const auto path = artifact(cfg, command + "_summary", ".json");
    ojson files = ojson::array();
    for (const auto& a : res.artifacts) files.push_back(a.filename().string());
    files.push_back(path.filename().string());
    summary["artifacts"] = files;
    res.summary_json = summary.dump(2) + "\n";
    write_file_atomic(path, res.summary_json);
    res.artifacts.push_back(path);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string metrics_csv(const RunConfig& cfg, const RunRecord& rec) {
    CsvWriter w("rtme-metrics", kSchemaVersion, cfg.hash());
    w.header({"epoch", "mode", "sigma", "parameter", "lr", "selected_fraction", "train_acc", "clean_fit",
              "noisy_fit", "noisy_partition_empty", "val_acc", "test_acc"});
    for (const auto& r : rec.rows) {
        w.cell(r.epoch).cell(to_string(r.mode)).cell(r.sigma).cell(r.parameter).cell(r.lr);
        w.cell(r.selected_fraction).cell(r.train_acc).cell(r.clean_fit).cell(r.noisy_fit);
        w.cell(r.noisy_partition_empty ? 1L : 0L).cell(r.val_acc).cell(r.test_acc);
        w.end_row();
    }
    return w.str();
}

/// Per-seed datasets for a sweep, built in parallel.
std::vector<SplitDataset> build_splits(const RunConfig& cfg) {
    std::vector<SplitDataset> splits(cfg.sweep.seeds.size());
    run_parallel(splits.size(), cfg.sweep.workers,
                 [&](std::size_t i) { splits[i] = build_split(cfg, cfg.sweep.seeds[i]); });
    return splits;
}

}  // namespace

LabeledDataset build_noisy_pool(const RunConfig& cfg, std::uint64_t seed) {
    const Rng root(seed);
    LabeledDataset pool;
    if (cfg.dataset.kind == DatasetKind::Mixture) {
        pool = make_gaussian_mixture(cfg.dataset.mixture, root.split("pool").next_u64());
    } else {
        pool = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels, cfg.dataset.subset);
    }
    NoiseSpec noise = cfg.noise;
    if (!cfg.noise_seed_set) noise.seed = root.split("noise").next_u64();
    return inject_noise(pool, noise);
}

SplitDataset build_split(const RunConfig& cfg, std::uint64_t seed) {
    const Rng root(seed);
    const LabeledDataset noisy = build_noisy_pool(cfg, seed);
    SplitDataset split = split_train_val(noisy, cfg.val_fraction, root.split("split").next_u64());
    if (cfg.dataset.kind == DatasetKind::Mixture) {
        MixtureParams test_params = cfg.dataset.mixture;
        test_params.n = cfg.dataset.n_test;
        split.test = make_gaussian_mixture(test_params, root.split("test").next_u64());
    } else {
        split.test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels, cfg.dataset.test_subset);
        if (split.test.dim() != noisy.dim())
            throw InputError("test images have " + std::to_string(split.test.dim()) + " pixels, training images " +
                             std::to_string(noisy.dim()));
        split.test.k = std::max(split.test.k, noisy.k);
        split.train.k = split.val.k = split.test.k;
    }
    standardize(split);
    return split;
}

TrainResult run_method(const RunConfig& cfg, const SplitDataset& split, std::uint64_t seed,
                       const EpochObserver& observer) {
    TrainConfig t = cfg.train;
    t.seed = seed;
    switch (cfg.method) {
        case TrainMethod::Rtme: return train_rtme(t, split, observer);
        case TrainMethod::Ce: return train_ce_baseline(t, split, observer);
        case TrainMethod::Truncated: return train_truncated_only(t, split, observer);
        case TrainMethod::Original:
            t.period = 1;
            t.original_only_ablation = true;
            return train_rtme(t, split, observer);
        case TrainMethod::SmallLoss: {
            const double tau = cfg.selection_tau >= 0.0 ? cfg.selection_tau : cfg.noise.tau;
            return train_smallloss_baseline(t, tau, cfg.selection_tk, split, observer);
        }
    }
    throw InternalError("unhandled training method");
}

void run_parallel(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t slots = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (slots == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < slots; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

CommandResult cmd_train(const RunConfig& cfg) {
    cfg.validate();
    const SplitDataset split = build_split(cfg, cfg.train.seed);
    const TrainResult run = run_method(cfg, split, cfg.train.seed);
    const RunRecord& rec = run.record;

    CommandResult res;
    const auto csv_path = artifact(cfg, "train_metrics", ".csv");
    write_file_atomic(csv_path, metrics_csv(cfg, rec));
    res.artifacts.push_back(csv_path);

    ojson s = summary_head(cfg, "train");
    s["method"] = to_string(cfg.method);
    s["seed"] = cfg.train.seed;
    s["epochs"] = rec.rows.size();
    s["best_epoch"] = rec.best_epoch;
    s["best_val_acc"] = number(rec.best_val_acc);
    s["test_acc_at_best"] = number(rec.test_acc_at_best);
    s["final_test_acc"] = rec.rows.empty() ? ojson(nullptr) : number(rec.rows.back().test_acc);
    s["train_size"] = split.train.size();
    s["val_size"] = split.val.size();
    s["test_size"] = split.test.size();
    finish(res, cfg, "train", std::move(s));
    return res;
}

CommandResult cmd_sweep_r(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.sweep.periods.empty()) throw ConfigError("sweep.R must list at least one period");
    for (long r : cfg.sweep.periods)
        if (r < 2) throw ConfigError("sweep.R entries must be >= 2, got " + std::to_string(r));

    const auto& seeds = cfg.sweep.seeds;
    const auto& periods = cfg.sweep.periods;
    const std::vector<SplitDataset> splits = build_splits(cfg);
    std::vector<RunRecord> records(periods.size() * seeds.size());
    run_parallel(records.size(), cfg.sweep.workers, [&](std::size_t job) {
        RunConfig c = cfg;
        c.method = TrainMethod::Rtme;
        c.train.period = periods[job / seeds.size()];
        const std::size_t s = job % seeds.size();
        records[job] = run_method(c, splits[s], seeds[s]).record;
    });

    CommandResult res;
    CsvWriter runs("rtme-sweep-r", kSchemaVersion, cfg.hash());
    runs.header({"R", "seed", "best_epoch", "best_val_acc", "test_acc_at_best"});
    CsvWriter agg("rtme-sweep-r-aggregate", kSchemaVersion, cfg.hash());
    agg.header({"R", "runs", "mean_test_acc", "std_test_acc"});
    ojson per_r = ojson::array();
    for (std::size_t p = 0; p < periods.size(); ++p) {
        std::vector<double> accs;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const RunRecord& r = records[p * seeds.size() + s];
            runs.cell(periods[p]).cell(std::to_string(seeds[s])).cell(r.best_epoch).cell(r.best_val_acc);
            runs.cell(r.test_acc_at_best).end_row();
            accs.push_back(r.test_acc_at_best);
        }
        agg.cell(periods[p]).cell(static_cast<unsigned long>(accs.size())).cell(mean(accs)).cell(stddev(accs));
        agg.end_row();
        per_r.push_back(ojson{{"R", periods[p]}, {"mean_test_acc", mean(accs)}, {"std_test_acc", stddev(accs)}});
    }
    const auto runs_path = artifact(cfg, "sweep_r_runs", ".csv");
    const auto agg_path = artifact(cfg, "sweep_r_aggregate", ".csv");
    write_file_atomic(runs_path, runs.str());
    write_file_atomic(agg_path, agg.str());
    res.artifacts = {runs_path, agg_path};

    ojson s = summary_head(cfg, "sweep_r");
    s["seeds"] = seeds;
    s["results"] = per_r;
    finish(res, cfg, "sweep_r", std::move(s));
    return res;
}

CommandResult cmd_perturb_sigma(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.sweep.sigma_perturb.empty()) throw ConfigError("sweep.sigma_perturb must list at least one value");
    for (double d : cfg.sweep.sigma_perturb)
        if (!(d > -1.0)) throw ConfigError("sweep.sigma_perturb entries must be > -1, got " + format_number(d));

    // Runs at zero perturbation anchor the stability gap even when 0 is not listed.
    std::vector<double> deltas = cfg.sweep.sigma_perturb;
    const bool zero_listed = std::find(deltas.begin(), deltas.end(), 0.0) != deltas.end();
    if (!zero_listed) deltas.push_back(0.0);
    const std::vector<std::string> variants{"rtme", "truncated"};
    const auto& seeds = cfg.sweep.seeds;

    const std::vector<SplitDataset> splits = build_splits(cfg);
    const std::size_t per_variant = deltas.size() * seeds.size();
    std::vector<double> acc(variants.size() * per_variant);
    run_parallel(acc.size(), cfg.sweep.workers, [&](std::size_t job) {
        const std::size_t v = job / per_variant, d = (job % per_variant) / seeds.size(), s = job % seeds.size();
        RunConfig c = cfg;
        c.method = v == 0 ? TrainMethod::Rtme : TrainMethod::Truncated;
        c.train.sigma_perturb = deltas[d];
        acc[job] = run_method(c, splits[s], seeds[s]).record.test_acc_at_best;
    });
    auto at = [&](std::size_t v, std::size_t d, std::size_t s) { return acc[v * per_variant + d * seeds.size() + s]; };
    const std::size_t zero = static_cast<std::size_t>(std::find(deltas.begin(), deltas.end(), 0.0) - deltas.begin());

    CommandResult res;
    CsvWriter runs("rtme-perturb-sigma", kSchemaVersion, cfg.hash());
    runs.header({"variant", "delta_sigma", "seed", "test_acc_at_best", "gap"});
    std::vector<std::string> cols{"variant", "statistic"};
    for (double d : cfg.sweep.sigma_perturb) cols.push_back("delta=" + format_number(d));
    CsvWriter wide("rtme-perturb-sigma-gap", kSchemaVersion, cfg.hash());
    wide.header(cols);
    ojson results = ojson::array();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<double> mean_acc, mean_gap;
        for (std::size_t d = 0; d < cfg.sweep.sigma_perturb.size(); ++d) {
            std::vector<double> a, g;
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                a.push_back(at(v, d, s));
                g.push_back(at(v, zero, s) - at(v, d, s));
                runs.cell(variants[v]).cell(deltas[d]).cell(std::to_string(seeds[s])).cell(a.back()).cell(g.back());
                runs.end_row();
            }
            mean_acc.push_back(mean(a));
            mean_gap.push_back(mean(g));
            results.push_back(ojson{{"variant", variants[v]},
                                    {"delta_sigma", deltas[d]},
                                    {"mean_test_acc", mean(a)},
                                    {"mean_gap", mean(g)}});
        }
        wide.cell(variants[v]).cell("mean_test_acc");
        for (double x : mean_acc) wide.cell(x);
        wide.end_row();
        wide.cell(variants[v]).cell("mean_gap");
        for (double x : mean_gap) wide.cell(x);
        wide.end_row();
    }
    const auto runs_path = artifact(cfg, "perturb_sigma_runs", ".csv");
    const auto gap_path = artifact(cfg, "perturb_sigma_gap", ".csv");
    write_file_atomic(runs_path, runs.str());
    write_file_atomic(gap_path, wide.str());
    res.artifacts = {runs_path, gap_path};

    ojson s = summary_head(cfg, "perturb_sigma");
    s["seeds"] = seeds;
    s["results"] = results;
    finish(res, cfg, "perturb_sigma", std::move(s));
    return res;
}

LossHistogram loss_histogram(const std::vector<double>& losses, const std::vector<bool>& clean_mask,
                             std::size_t bins) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    if (losses.size() != clean_mask.size()) throw InternalError("loss and mask sizes differ");
    double hi = 0.0;
    for (double l : losses) {
        if (!std::isfinite(l) || l < 0.0) throw NumericError("non-finite or negative loss in histogram");
        hi = std::max(hi, l);
    }
    if (hi == 0.0) hi = 1.0;
    LossHistogram h;
    h.clean.assign(bins, 0);
    h.mislabeled.assign(bins, 0);
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(hi * static_cast<double>(b) / static_cast<double>(bins));
    for (std::size_t i = 0; i < losses.size(); ++i) {
        auto b = static_cast<std::size_t>(losses[i] / hi * static_cast<double>(bins));
        b = std::min(b, bins - 1);
        (clean_mask[i] ? h.clean : h.mislabeled)[b]++;
    }
    return h;
}

CommandResult cmd_hist(const RunConfig& cfg, std::optional<long> epoch) {
    cfg.validate();
    const long target = epoch ? *epoch : (cfg.hist_epoch >= 0 ? cfg.hist_epoch : cfg.train.epochs / 2);
    if (target < 0 || target > cfg.train.epochs)
        throw ConfigError("hist epoch " + std::to_string(target) + " is outside [0, " +
                          std::to_string(cfg.train.epochs) + "]");

    const SplitDataset split = build_split(cfg, cfg.train.seed);
    std::optional<MlpModel> captured;
    run_method(cfg, split, cfg.train.seed, [&](long completed, const MlpModel& m) {
        if (completed != target) return true;
        captured = m;
        return false;
    });
    if (!captured) throw InternalError("training ended before epoch " + std::to_string(target));

    const auto losses = per_example_losses(*captured, split.train);
    LossHistogram h = loss_histogram(losses, split.train.clean_mask, cfg.hist_bins);
    h.epoch = target;

    CsvWriter w("rtme-loss-histogram epoch=" + std::to_string(target), kSchemaVersion, cfg.hash());
    w.header({"bin", "loss_lo", "loss_hi", "clean", "mislabeled", "total", "clean_proportion"});
    for (std::size_t b = 0; b < cfg.hist_bins; ++b) {
        const std::size_t total = h.clean[b] + h.mislabeled[b];
        w.cell(static_cast<unsigned long>(b)).cell(h.edges[b]).cell(h.edges[b + 1]);
        w.cell(static_cast<unsigned long>(h.clean[b])).cell(static_cast<unsigned long>(h.mislabeled[b]));
        w.cell(static_cast<unsigned long>(total));
        if (total == 0)
            w.cell(std::string_view(""));
        else
            w.cell(static_cast<double>(h.clean[b]) / static_cast<double>(total));
        w.end_row();
    }
    CommandResult res;
    const auto path = artifact(cfg, "hist", ".csv");
    write_file_atomic(path, w.str());
    res.artifacts.push_back(path);

    ojson s = summary_head(cfg, "hist");
    s["epoch"] = target;
    s["examples"] = losses.size();
    s["clean"] = std::accumulate(h.clean.begin(), h.clean.end(), std::size_t{0});
    s["mislabeled"] = std::accumulate(h.mislabeled.begin(), h.mislabeled.end(), std::size_t{0});
    finish(res, cfg, "hist", std::move(s));
    return res;
}

CommandResult cmd_lemma_check(const RunConfig& cfg) {
    const FiniteTask task = FiniteTask::bundled();
    RiskReport report;
    if (cfg.lemma.check == "lemma1") {
        report = lemma1_check(task, cfg.lemma.psi, cfg.lemma.eta);
    } else {
        std::vector<double> rates = cfg.lemma.eta_per_instance;
        if (rates.empty()) rates.assign(task.num_instances(), cfg.lemma.eta);
        if (rates.size() != task.num_instances())
            throw ConfigError("lemma.eta_per_instance needs " + std::to_string(task.num_instances()) +
                              " rates, got " + std::to_string(rates.size()));
        report = corollary1_check(task, cfg.lemma.psi, rates);
    }

    CommandResult res;
    res.exit_code = report.verdict == Verdict::Fail ? 1 : 0;
    const auto path = artifact(cfg, "lemma_report", ".json");
    write_file_atomic(path, risk_report_json(report) + "\n");
    res.artifacts.push_back(path);

    ojson s = summary_head(cfg, "lemma_check");
    s["check"] = report.check;
    s["verdict"] = to_string(report.verdict);
    s["preconditions_hold"] = report.preconditions_hold;
    s["clean_argmin_in_noisy_argmin"] = report.clean_in_noisy;
    s["bound"] = number(report.bound);
    s["eta"] = report.eta;
    s["exit_code"] = res.exit_code;
    finish(res, cfg, "lemma_check", std::move(s));
    return res;
}

CommandResult cmd_noise_stats(const RunConfig& cfg) {
    cfg.validate();
    const LabeledDataset noisy = build_noisy_pool(cfg, cfg.train.seed);
    const NoiseStats st = noise_stats(noisy);

    CsvWriter w("rtme-transition", kSchemaVersion, cfg.hash());
    std::vector<std::string> cols{"clean_class", "count"};
    for (int j = 0; j < noisy.k; ++j) cols.push_back("p_observed_" + std::to_string(j));
    cols.push_back("flip_rate");
    w.header(cols);
    for (int i = 0; i < noisy.k; ++i) {
        const auto& counts = st.counts[static_cast<std::size_t>(i)];
        w.cell(i).cell(static_cast<unsigned long>(std::accumulate(counts.begin(), counts.end(), std::size_t{0})));
        for (double p : st.transition[static_cast<std::size_t>(i)]) w.cell(p);
        w.cell(st.per_class_flip_rate[static_cast<std::size_t>(i)]);
        w.end_row();
    }
    CommandResult res;
    const auto path = artifact(cfg, "noise_transition", ".csv");
    write_file_atomic(path, w.str());
    res.artifacts.push_back(path);

    ojson s = summary_head(cfg, "noise_stats");
    s["examples"] = noisy.size();
    s["flip_rate"] = st.flip_rate;
    s["per_class_flip_rate"] = st.per_class_flip_rate;
    finish(res, cfg, "noise_stats", std::move(s));
    return res;
}

}  // namespace rtme

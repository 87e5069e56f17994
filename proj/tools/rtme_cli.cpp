// SPDX-License-Identifier: Apache-2.0
//
// rtme command-line front end. Links only the C interface.
//
//   rtme train --config run.cfg [--out dir] [--seed N]
//   rtme hist  --config run.cfg --epoch 50
//
// Exit codes: 0 success, 1 failed lemma check, 2 config/input error,
// 3 numeric failure, 4 internal error. Errors print as JSON on stderr.
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rtme/rtme.h"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    long epoch = -1;
};

void add_common(CLI::App* sub, Options& opt) {
    sub->add_option("--config", opt.config, "Config file (sectioned key = value)")->required();
    sub->add_option("--out", opt.out, "Output directory (overrides output.dir)");
    sub->add_option("--seed", opt.seed, "Run seed (overrides train.seed and sweep.seeds)");
}

void print_error_json(const char* kind, const std::string& message, int status) {
    std::string escaped;
    for (char c : message) {
        if (c == '"' || c == '\\') {
            escaped += '\\';
            escaped += c;
        } else if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            escaped += buf;
        } else {
            escaped += c;
        }
    }
    std::fprintf(stderr, "{\"error\":{\"kind\":\"%s\",\"message\":\"%s\",\"status\":%d}}\n", kind, escaped.c_str(),
                 status);
}

int report(rtme_status st) {
    if (st != RTME_OK) std::fprintf(stderr, "%s\n", rtme_last_error_json());
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularly truncated M-estimators for learning with noisy labels"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* train = app.add_subcommand("train", "Train one model and write per-epoch metrics");
    CLI::App* sweep_r = app.add_subcommand("sweep-r", "Compare periods R over the seed list");
    CLI::App* perturb = app.add_subcommand("perturb-sigma", "Threshold perturbation study, RTME vs truncated-only");
    CLI::App* hist = app.add_subcommand("hist", "Loss histogram split by clean and mislabeled examples");
    CLI::App* lemma = app.add_subcommand("lemma-check", "Exact risk enumeration on the bundled finite task");
    CLI::App* noise = app.add_subcommand("noise-stats", "Empirical noise transition matrix");
    for (CLI::App* sub : {train, sweep_r, perturb, hist, lemma, noise}) add_common(sub, opt);
    hist->add_option("--epoch", opt.epoch, "Completed epochs before the snapshot (default hist.epoch)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error_json("usage", e.what(), RTME_ERR_INPUT);
        return RTME_ERR_INPUT;
    }

    rtme_config* cfg = nullptr;
    if (rtme_config_load(opt.config.c_str(), &cfg) != RTME_OK) return report(RTME_ERR_INPUT);
    rtme_status st = RTME_OK;
    if (opt.seed) st = rtme_config_set_seed(cfg, *opt.seed);
    if (st == RTME_OK && !opt.out.empty()) st = rtme_config_set_out_dir(cfg, opt.out.c_str());

    const char* summary = nullptr;
    if (st == RTME_OK) {
        if (train->parsed())
            st = rtme_cmd_train(cfg, &summary);
        else if (sweep_r->parsed())
            st = rtme_cmd_sweep_r(cfg, &summary);
        else if (perturb->parsed())
            st = rtme_cmd_perturb_sigma(cfg, &summary);
        else if (hist->parsed())
            st = rtme_cmd_hist(cfg, opt.epoch, &summary);
        else if (lemma->parsed())
            st = rtme_cmd_lemma_check(cfg, &summary);
        else
            st = rtme_cmd_noise_stats(cfg, &summary);
    }
    rtme_config_free(cfg);
    if (summary) std::fputs(summary, stdout);
    return report(st);
}

// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <string>

#include "config.hpp"
#include "doctest.h"
#include "errors.hpp"

using namespace rtme;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        parse_run_config(text, "t.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("sections, qualified keys and comments") {
    const RunConfig c = parse_run_config(
        "# run\n"
        "[train]\n"
        "epochs = 12   # short\n"
        "lr_decay_epochs = 4, 8\n"
        "estimator = welsch+\n"
        "alpha = 2\n"
        "hidden = 16,8\n"
        "\n"
        "[noise]\n"
        "kind = pair\n"
        "tau = 0.45\n"
        "sweep.R = 2, 5, 10\n");
    CHECK(c.train.epochs == 12);
    CHECK(c.train.lr.decay_epochs == std::vector<long>{4, 8});
    CHECK(c.train.estimator.kind == EstimatorKind::WelschPlus);
    CHECK(c.train.estimator.alpha == 2.0);
    CHECK(c.train.hidden == std::vector<std::size_t>{16, 8});
    CHECK(c.noise.kind == NoiseKind::Pairflip);
    CHECK(c.noise.tau == 0.45);
    CHECK(c.sweep.periods == std::vector<long>{2, 5, 10});
    CHECK_FALSE(c.noise_seed_set);
}

TEST_CASE("defaults describe the desk-scale run") {
    const RunConfig c = parse_run_config("");
    CHECK(c.dataset.kind == DatasetKind::Mixture);
    CHECK(c.dataset.mixture.n == 2000);
    CHECK(c.dataset.mixture.k == 4);
    CHECK(c.train.epochs == 100);
    CHECK(c.train.batch_size == 128);
    CHECK(c.train.period == 2);
    CHECK(c.val_fraction == 0.1);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK(error_of("[train]\nepoch = 3\n").find("'train.epoch'") != std::string::npos);
    CHECK(error_of("bogus = 1\n").find("outside any section") != std::string::npos);
    CHECK(error_of("[train]\nepochs = 3\nepochs = 4\n").find("duplicate") != std::string::npos);
    CHECK(error_of("[train]\nepochs = three\n").find("train.epochs") != std::string::npos);
    CHECK(error_of("[train]\nestimator = huber\n").find("huber") != std::string::npos);
    CHECK(error_of("[noise]\nkind = weird\n").find("noise.kind") != std::string::npos);
    CHECK(error_of("[train\n").find("t.cfg:1") != std::string::npos);
    CHECK(error_of("[train]\njust words\n").find("t.cfg:2") != std::string::npos);
}

TEST_CASE("validation catches out-of-range settings") {
    CHECK_THROWS_AS(parse_run_config("[noise]\nkind = pair\ntau = 0.5\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[train]\nR = 1\n").validate(), ConfigError);
    CHECK_NOTHROW(parse_run_config("[train]\nR = 1\nmethod = original\n").validate());
    CHECK_THROWS_AS(parse_run_config("[train]\nval_fraction = 0\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[dataset]\nkind = idx\n").validate(), ConfigError);
}

TEST_CASE("canonical form and hash") {
    const RunConfig a = parse_run_config("[train]\nepochs = 12\n");
    const RunConfig b = parse_run_config("train.epochs = 12\n# same thing\n");
    const RunConfig c = parse_run_config("[train]\nepochs = 13\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash().size() == 16);
    CHECK(a.canonical().find("train.epochs=12\n") != std::string::npos);
    // every listed key parses back to the same configuration
    std::string round;
    std::istringstream in(a.canonical());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (value.empty() || value == "auto") continue;
        round += key + " = " + value + "\n";
    }
    CHECK(parse_run_config(round).hash() == a.hash());
}

TEST_CASE("files: relative idx paths resolve against the config, missing files fail") {
    const fs::path dir = fs::temp_directory_path() / "rtme_config_tests";
    fs::create_directories(dir);
    for (const char* f : {"a.idx", "b.idx", "c.idx", "d.idx"}) std::ofstream(dir / f) << "x";
    std::ofstream(dir / "ok.cfg") << "[dataset]\nkind = idx\ntrain_images = a.idx\ntrain_labels = b.idx\n"
                                     "test_images = c.idx\ntest_labels = d.idx\n";
    const RunConfig c = load_run_config(dir / "ok.cfg");
    CHECK(c.dataset.train_images == dir / "a.idx");
    CHECK_NOTHROW(c.validate());

    std::ofstream(dir / "bad.cfg") << "[dataset]\nkind = idx\ntrain_images = missing.idx\n";
    try {
        load_run_config(dir / "bad.cfg");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find((dir / "missing.idx").string()) != std::string::npos);
    }
    CHECK_THROWS_AS(load_run_config(dir / "nope.cfg"), ConfigError);
}

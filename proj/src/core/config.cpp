// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "artifacts.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace rtme {

std::string_view to_string(TrainMethod m) {
    switch (m) {
        case TrainMethod::Rtme: return "rtme";
        case TrainMethod::Ce: return "ce";
        case TrainMethod::SmallLoss: return "smallloss";
        case TrainMethod::Truncated: return "truncated";
        case TrainMethod::Original: return "original";
    }
    return "?";
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(v);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return d;
}

long to_long(const std::string& key, const std::string& v) {
    long out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
    const long n = to_long(key, v);
    if (n < 0) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    return out;
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F conv) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(conv(key, item));
    return out;
}

EstimatorKind to_estimator(const std::string& key, const std::string& v) {
    const auto k = parse_estimator_kind(v);
    if (!k) throw ConfigError(key + ": unknown estimator '" + v + "' (expected ce, catoni, logsum, welsch+)");
    return *k;
}

std::string fmt(double v) { return format_number(v); }

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ',';
        if constexpr (std::is_floating_point_v<T>)
            os << format_number(v[i]);
        else
            os << v[i];
    }
    return os.str();
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"dataset.kind",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "mixture")
                 c.dataset.kind = DatasetKind::Mixture;
             else if (v == "idx")
                 c.dataset.kind = DatasetKind::Idx;
             else
                 throw ConfigError(k + ": expected mixture or idx, got '" + v + "'");
         }},
        {"dataset.n", [](RunConfig& c, auto& k, auto& v) { c.dataset.mixture.n = to_count(k, v); }},
        {"dataset.k", [](RunConfig& c, auto& k, auto& v) { c.dataset.mixture.k = static_cast<int>(to_long(k, v)); }},
        {"dataset.dim", [](RunConfig& c, auto& k, auto& v) { c.dataset.mixture.dim = to_count(k, v); }},
        {"dataset.separation", [](RunConfig& c, auto& k, auto& v) { c.dataset.mixture.separation = to_double(k, v); }},
        {"dataset.spread", [](RunConfig& c, auto& k, auto& v) { c.dataset.mixture.spread = to_double(k, v); }},
        {"dataset.n_test", [](RunConfig& c, auto& k, auto& v) { c.dataset.n_test = to_count(k, v); }},
        {"dataset.train_images", [](RunConfig& c, auto&, auto& v) { c.dataset.train_images = v; }},
        {"dataset.train_labels", [](RunConfig& c, auto&, auto& v) { c.dataset.train_labels = v; }},
        {"dataset.test_images", [](RunConfig& c, auto&, auto& v) { c.dataset.test_images = v; }},
        {"dataset.test_labels", [](RunConfig& c, auto&, auto& v) { c.dataset.test_labels = v; }},
        {"dataset.subset", [](RunConfig& c, auto& k, auto& v) { c.dataset.subset = to_count(k, v); }},
        {"dataset.test_subset", [](RunConfig& c, auto& k, auto& v) { c.dataset.test_subset = to_count(k, v); }},

        {"noise.kind",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             const auto n = parse_noise_kind(v);
             if (!n) throw ConfigError(k + ": expected none, sym, pair or ins, got '" + v + "'");
             c.noise.kind = *n;
         }},
        {"noise.tau", [](RunConfig& c, auto& k, auto& v) { c.noise.tau = to_double(k, v); }},
        {"noise.seed",
         [](RunConfig& c, auto& k, auto& v) {
             c.noise.seed = to_u64(k, v);
             c.noise_seed_set = true;
         }},

        {"train.method",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "rtme")
                 c.method = TrainMethod::Rtme;
             else if (v == "ce")
                 c.method = TrainMethod::Ce;
             else if (v == "smallloss")
                 c.method = TrainMethod::SmallLoss;
             else if (v == "truncated")
                 c.method = TrainMethod::Truncated;
             else if (v == "original")
                 c.method = TrainMethod::Original;
             else
                 throw ConfigError(k + ": expected rtme, ce, smallloss, truncated or original, got '" + v + "'");
         }},
        {"train.estimator", [](RunConfig& c, auto& k, auto& v) { c.train.estimator.kind = to_estimator(k, v); }},
        {"train.epsilon", [](RunConfig& c, auto& k, auto& v) { c.train.estimator.epsilon = to_double(k, v); }},
        {"train.alpha", [](RunConfig& c, auto& k, auto& v) { c.train.estimator.alpha = to_double(k, v); }},
        {"train.R", [](RunConfig& c, auto& k, auto& v) { c.train.period = to_long(k, v); }},
        {"train.epochs", [](RunConfig& c, auto& k, auto& v) { c.train.epochs = to_long(k, v); }},
        {"train.batch_size", [](RunConfig& c, auto& k, auto& v) { c.train.batch_size = to_count(k, v); }},
        {"train.lr", [](RunConfig& c, auto& k, auto& v) { c.train.lr.initial = to_double(k, v); }},
        {"train.lr_decay_epochs",
         [](RunConfig& c, auto& k, auto& v) { c.train.lr.decay_epochs = to_list<long>(k, v, to_long); }},
        {"train.lr_decay_factor", [](RunConfig& c, auto& k, auto& v) { c.train.lr.factor = to_double(k, v); }},
        {"train.momentum", [](RunConfig& c, auto& k, auto& v) { c.train.momentum = to_double(k, v); }},
        {"train.weight_decay", [](RunConfig& c, auto& k, auto& v) { c.train.weight_decay = to_double(k, v); }},
        {"train.hidden", [](RunConfig& c, auto& k, auto& v) { c.train.hidden = to_list<std::size_t>(k, v, to_count); }},
        {"train.activation",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "relu")
                 c.train.activation = Activation::ReLU;
             else if (v == "softsign")
                 c.train.activation = Activation::Softsign;
             else
                 throw ConfigError(k + ": expected relu or softsign, got '" + v + "'");
         }},
        {"train.output_init",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "zero")
                 c.train.zero_output_init = true;
             else if (v == "he_uniform")
                 c.train.zero_output_init = false;
             else
                 throw ConfigError(k + ": expected zero or he_uniform, got '" + v + "'");
         }},
        {"train.seed", [](RunConfig& c, auto& k, auto& v) { c.train.seed = to_u64(k, v); }},
        {"train.val_fraction", [](RunConfig& c, auto& k, auto& v) { c.val_fraction = to_double(k, v); }},
        {"train.selection_tau", [](RunConfig& c, auto& k, auto& v) { c.selection_tau = to_double(k, v); }},
        {"train.T_k", [](RunConfig& c, auto& k, auto& v) { c.selection_tk = to_long(k, v); }},

        {"adapt.mode",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "fixed")
                 c.train.adapt.mode = AdaptMode::Fixed;
             else if (v == "gaussian")
                 c.train.adapt.mode = AdaptMode::GaussianFit;
             else
                 throw ConfigError(k + ": expected fixed or gaussian, got '" + v + "'");
         }},
        {"adapt.grid", [](RunConfig& c, auto& k, auto& v) { c.train.adapt.candidate_grid = to_list<double>(k, v, to_double); }},
        {"adapt.bins", [](RunConfig& c, auto& k, auto& v) { c.train.adapt.bin_count = to_count(k, v); }},

        {"sigma.clamp_min", [](RunConfig& c, auto& k, auto& v) { c.train.sigma_min = to_double(k, v); }},
        {"sigma.perturb", [](RunConfig& c, auto& k, auto& v) { c.train.sigma_perturb = to_double(k, v); }},

        {"sweep.seeds", [](RunConfig& c, auto& k, auto& v) { c.sweep.seeds = to_list<std::uint64_t>(k, v, to_u64); }},
        {"sweep.R", [](RunConfig& c, auto& k, auto& v) { c.sweep.periods = to_list<long>(k, v, to_long); }},
        {"sweep.sigma_perturb",
         [](RunConfig& c, auto& k, auto& v) { c.sweep.sigma_perturb = to_list<double>(k, v, to_double); }},
        {"sweep.workers", [](RunConfig& c, auto& k, auto& v) { c.sweep.workers = to_count(k, v); }},

        {"hist.epoch", [](RunConfig& c, auto& k, auto& v) { c.hist_epoch = to_long(k, v); }},
        {"hist.bins", [](RunConfig& c, auto& k, auto& v) { c.hist_bins = to_count(k, v); }},

        {"lemma.task",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v != "bundled") throw ConfigError(k + ": only the bundled task is available, got '" + v + "'");
             c.lemma.task = v;
         }},
        {"lemma.check",
         [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v != "lemma1" && v != "corollary1")
                 throw ConfigError(k + ": expected lemma1 or corollary1, got '" + v + "'");
             c.lemma.check = v;
         }},
        {"lemma.estimator", [](RunConfig& c, auto& k, auto& v) { c.lemma.psi.estimator.kind = to_estimator(k, v); }},
        {"lemma.epsilon", [](RunConfig& c, auto& k, auto& v) { c.lemma.psi.estimator.epsilon = to_double(k, v); }},
        {"lemma.alpha", [](RunConfig& c, auto& k, auto& v) { c.lemma.psi.estimator.alpha = to_double(k, v); }},
        {"lemma.sigma", [](RunConfig& c, auto& k, auto& v) { c.lemma.psi.sigma = to_double(k, v); }},
        {"lemma.eta", [](RunConfig& c, auto& k, auto& v) { c.lemma.eta = to_double(k, v); }},
        {"lemma.eta_per_instance",
         [](RunConfig& c, auto& k, auto& v) { c.lemma.eta_per_instance = to_list<double>(k, v, to_double); }},

        {"output.dir", [](RunConfig& c, auto&, auto& v) { c.out_dir = v; }},
    };
    return table;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (key.find('.') == std::string::npos) {
            if (section.empty()) throw ConfigError(where + ": key '" + key + "' outside any section");
            key = section + "." + key;
        }
        if (kv.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        kv[key] = value;
    }
    return kv;
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
    RunConfig cfg;
    const auto kv = parse_key_values(text, source);
    const auto& table = setters();
    for (const auto& [key, value] : kv) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "' in " + source);
        it->second(cfg, key, value);
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_run_config(ss.str(), path.string());
    const auto base = path.parent_path();
    for (auto* p : {&cfg.dataset.train_images, &cfg.dataset.train_labels, &cfg.dataset.test_images,
                    &cfg.dataset.test_labels})
        if (!p->empty() && p->is_relative()) *p = base / *p;
    for (const auto* p : {&cfg.dataset.train_images, &cfg.dataset.train_labels, &cfg.dataset.test_images,
                          &cfg.dataset.test_labels})
        if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("dataset file not found: " + p->string());
    return cfg;
}

void RunConfig::validate() const {
    if (dataset.kind == DatasetKind::Idx) {
        for (const auto* p : {&dataset.train_images, &dataset.train_labels, &dataset.test_images, &dataset.test_labels}) {
            if (p->empty()) throw ConfigError("dataset.kind = idx needs train/test image and label paths");
            if (!std::filesystem::exists(*p)) throw ConfigError("dataset file not found: " + p->string());
        }
    }
    if (!(noise.tau >= 0.0 && noise.tau < 1.0)) throw ConfigError("noise.tau must lie in [0, 1)");
    if (noise.kind == NoiseKind::Pairflip && noise.tau >= 0.5) throw ConfigError("noise.tau must be < 0.5 for pair");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("train.val_fraction must lie in (0, 1)");
    if (dataset.kind == DatasetKind::Mixture && dataset.n_test < static_cast<std::size_t>(std::max(dataset.mixture.k, 1)))
        throw ConfigError("dataset.n_test must be at least dataset.k");
    if (hist_bins < 1) throw ConfigError("hist.bins must be >= 1");
    if (sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
    TrainConfig t = train;
    t.original_only_ablation = method != TrainMethod::Rtme;
    t.validate();
}

std::string RunConfig::canonical() const {
    std::map<std::string, std::string> kv;
    kv["dataset.kind"] = dataset.kind == DatasetKind::Mixture ? "mixture" : "idx";
    kv["dataset.n"] = std::to_string(dataset.mixture.n);
    kv["dataset.k"] = std::to_string(dataset.mixture.k);
    kv["dataset.dim"] = std::to_string(dataset.mixture.dim);
    kv["dataset.separation"] = fmt(dataset.mixture.separation);
    kv["dataset.spread"] = fmt(dataset.mixture.spread);
    kv["dataset.n_test"] = std::to_string(dataset.n_test);
    kv["dataset.train_images"] = dataset.train_images.string();
    kv["dataset.train_labels"] = dataset.train_labels.string();
    kv["dataset.test_images"] = dataset.test_images.string();
    kv["dataset.test_labels"] = dataset.test_labels.string();
    kv["dataset.subset"] = std::to_string(dataset.subset);
    kv["dataset.test_subset"] = std::to_string(dataset.test_subset);
    kv["noise.kind"] = std::string(to_string(noise.kind));
    kv["noise.tau"] = fmt(noise.tau);
    kv["noise.seed"] = noise_seed_set ? std::to_string(noise.seed) : "auto";
    kv["train.method"] = std::string(to_string(method));
    kv["train.estimator"] = std::string(to_string(train.estimator.kind));
    kv["train.epsilon"] = fmt(train.estimator.epsilon);
    kv["train.alpha"] = fmt(train.estimator.alpha);
    kv["train.R"] = std::to_string(train.period);
    kv["train.epochs"] = std::to_string(train.epochs);
    kv["train.batch_size"] = std::to_string(train.batch_size);
    kv["train.lr"] = fmt(train.lr.initial);
    kv["train.lr_decay_epochs"] = join(train.lr.decay_epochs);
    kv["train.lr_decay_factor"] = fmt(train.lr.factor);
    kv["train.momentum"] = fmt(train.momentum);
    kv["train.weight_decay"] = fmt(train.weight_decay);
    kv["train.hidden"] = join(train.hidden);
    kv["train.activation"] = train.activation == Activation::ReLU ? "relu" : "softsign";
    kv["train.output_init"] = train.zero_output_init ? "zero" : "he_uniform";
    kv["train.seed"] = std::to_string(train.seed);
    kv["train.val_fraction"] = fmt(val_fraction);
    kv["train.selection_tau"] = fmt(selection_tau);
    kv["train.T_k"] = std::to_string(selection_tk);
    kv["adapt.mode"] = train.adapt.mode == AdaptMode::Fixed ? "fixed" : "gaussian";
    kv["adapt.grid"] = join(train.adapt.candidate_grid);
    kv["adapt.bins"] = std::to_string(train.adapt.bin_count);
    kv["sigma.clamp_min"] = fmt(train.sigma_min);
    kv["sigma.perturb"] = fmt(train.sigma_perturb);
    kv["sweep.seeds"] = join(sweep.seeds);
    kv["sweep.R"] = join(sweep.periods);
    kv["sweep.sigma_perturb"] = join(sweep.sigma_perturb);
    kv["hist.epoch"] = std::to_string(hist_epoch);
    kv["hist.bins"] = std::to_string(hist_bins);
    kv["lemma.task"] = lemma.task;
    kv["lemma.check"] = lemma.check;
    kv["lemma.estimator"] = std::string(to_string(lemma.psi.estimator.kind));
    kv["lemma.epsilon"] = fmt(lemma.psi.estimator.epsilon);
    kv["lemma.alpha"] = fmt(lemma.psi.estimator.alpha);
    kv["lemma.sigma"] = fmt(lemma.psi.sigma);
    kv["lemma.eta"] = fmt(lemma.eta);
    kv["lemma.eta_per_instance"] = join(lemma.eta_per_instance);
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

}  // namespace rtme

// SPDX-License-Identifier: Apache-2.0
#include "rtme/rtme.h"

#include <exception>
#include <string>

#include "commands.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "json.hpp"
#include "threshold.hpp"

struct rtme_config {
    rtme::RunConfig cfg;
};

namespace {

thread_local std::string last_message;
thread_local std::string last_json;
thread_local std::string last_summary;

const char* kind_name(rtme::ErrorKind k) {
    switch (k) {
        case rtme::ErrorKind::Config: return "config";
        case rtme::ErrorKind::Input: return "input";
        case rtme::ErrorKind::Format: return "format";
        case rtme::ErrorKind::Numeric: return "numeric";
        case rtme::ErrorKind::Internal: return "internal";
    }
    return "internal";
}

rtme_status status_of(rtme::ErrorKind k) {
    switch (k) {
        case rtme::ErrorKind::Config:
        case rtme::ErrorKind::Input:
        case rtme::ErrorKind::Format: return RTME_ERR_INPUT;
        case rtme::ErrorKind::Numeric: return RTME_ERR_NUMERIC;
        case rtme::ErrorKind::Internal: return RTME_ERR_INTERNAL;
    }
    return RTME_ERR_INTERNAL;
}

rtme_status fail(rtme_status status, const char* kind, const std::string& message) {
    last_message = message;
    nlohmann::ordered_json j;
    j["error"] = {{"kind", kind}, {"message", message}, {"status", static_cast<int>(status)}};
    last_json = j.dump();
    return status;
}

template <class F>
rtme_status guarded(F&& f) {
    try {
        return f();
    } catch (const rtme::Error& e) {
        return fail(status_of(e.kind()), kind_name(e.kind()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(RTME_ERR_INTERNAL, "internal", "out of memory");
    } catch (const std::exception& e) {
        return fail(RTME_ERR_INTERNAL, "internal", e.what());
    }
}

rtme_status null_arg(const char* name) { return fail(RTME_ERR_INPUT, "argument", std::string(name) + " is null"); }

rtme::EstimatorSpec make_spec(rtme_estimator kind, double param) {
    rtme::EstimatorSpec s;
    switch (kind) {
        case RTME_ESTIMATOR_CE: s.kind = rtme::EstimatorKind::CE; break;
        case RTME_ESTIMATOR_CATONI: s.kind = rtme::EstimatorKind::Catoni; break;
        case RTME_ESTIMATOR_LOGSUM: s.kind = rtme::EstimatorKind::LogSum; break;
        case RTME_ESTIMATOR_WELSCH_PLUS: s.kind = rtme::EstimatorKind::WelschPlus; break;
        default: throw rtme::ConfigError("unknown estimator id " + std::to_string(static_cast<int>(kind)));
    }
    if (s.has_parameter()) s = s.with_parameter(param);
    s.validate();
    return s;
}

template <class Cmd>
rtme_status run_command(const rtme_config* config, const char** summary_json, Cmd&& cmd) {
    if (!config) return null_arg("config");
    return guarded([&] {
        rtme::CommandResult r = cmd(config->cfg);
        last_summary = std::move(r.summary_json);
        if (summary_json) *summary_json = last_summary.c_str();
        if (r.exit_code == 1)
            return fail(RTME_CHECK_FAILED, "check", "preconditions held and the argmin containment failed");
        return RTME_OK;
    });
}

}  // namespace

extern "C" {

const char* rtme_version(void) { return "1.0.0"; }
const char* rtme_last_error_message(void) { return last_message.c_str(); }
const char* rtme_last_error_json(void) { return last_json.c_str(); }

void rtme_clear_error(void) {
    last_message.clear();
    last_json.clear();
}

rtme_status rtme_config_load(const char* path, rtme_config** out) {
    if (!path) return null_arg("path");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        auto* c = new rtme_config{rtme::load_run_config(path)};
        *out = c;
        return RTME_OK;
    });
}

rtme_status rtme_config_parse(const char* text, rtme_config** out) {
    if (!text) return null_arg("text");
    if (!out) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        *out = new rtme_config{rtme::parse_run_config(text)};
        return RTME_OK;
    });
}

void rtme_config_free(rtme_config* config) { delete config; }

rtme_status rtme_config_set_seed(rtme_config* config, uint64_t seed) {
    if (!config) return null_arg("config");
    config->cfg.train.seed = seed;
    config->cfg.sweep.seeds = {seed};
    return RTME_OK;
}

rtme_status rtme_config_set_out_dir(rtme_config* config, const char* dir) {
    if (!config) return null_arg("config");
    if (!dir || !*dir) return fail(RTME_ERR_INPUT, "argument", "output directory is empty");
    config->cfg.out_dir = dir;
    return RTME_OK;
}

rtme_status rtme_config_hash(const rtme_config* config, char* buf, size_t len) {
    if (!config) return null_arg("config");
    if (!buf) return null_arg("buf");
    if (len < 17) return fail(RTME_ERR_INPUT, "argument", "hash buffer needs 17 bytes");
    return guarded([&] {
        const std::string h = config->cfg.hash();
        h.copy(buf, h.size());
        buf[h.size()] = '\0';
        return RTME_OK;
    });
}

rtme_status rtme_cmd_train(const rtme_config* config, const char** summary_json) {
    return run_command(config, summary_json, [](const rtme::RunConfig& c) { return rtme::cmd_train(c); });
}

rtme_status rtme_cmd_sweep_r(const rtme_config* config, const char** summary_json) {
    return run_command(config, summary_json, [](const rtme::RunConfig& c) { return rtme::cmd_sweep_r(c); });
}

rtme_status rtme_cmd_perturb_sigma(const rtme_config* config, const char** summary_json) {
    return run_command(config, summary_json, [](const rtme::RunConfig& c) { return rtme::cmd_perturb_sigma(c); });
}

rtme_status rtme_cmd_hist(const rtme_config* config, long epoch, const char** summary_json) {
    return run_command(config, summary_json, [epoch](const rtme::RunConfig& c) {
        return rtme::cmd_hist(c, epoch < 0 ? std::nullopt : std::optional<long>(epoch));
    });
}

rtme_status rtme_cmd_lemma_check(const rtme_config* config, const char** summary_json) {
    return run_command(config, summary_json, [](const rtme::RunConfig& c) { return rtme::cmd_lemma_check(c); });
}

rtme_status rtme_cmd_noise_stats(const rtme_config* config, const char** summary_json) {
    return run_command(config, summary_json, [](const rtme::RunConfig& c) { return rtme::cmd_noise_stats(c); });
}

rtme_status rtme_phi(rtme_estimator kind, double param, double loss, double* out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = rtme::phi(make_spec(kind, param), loss);
        return RTME_OK;
    });
}

rtme_status rtme_weight(rtme_estimator kind, double param, double loss, double* out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = rtme::weight(make_spec(kind, param), loss);
        return RTME_OK;
    });
}

rtme_status rtme_phi_truncated(rtme_estimator kind, double param, double loss, double sigma, double* out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = rtme::phi_truncated(make_spec(kind, param), loss, sigma);
        return RTME_OK;
    });
}

rtme_status rtme_weight_truncated(rtme_estimator kind, double param, double loss, double sigma, double* out) {
    if (!out) return null_arg("out");
    return guarded([&] {
        *out = rtme::weight_truncated(make_spec(kind, param), loss, sigma);
        return RTME_OK;
    });
}

rtme_status rtme_three_sigma_threshold(const double* losses, size_t n, double sigma_min, double* out) {
    if (!out) return null_arg("out");
    if (!losses && n > 0) return null_arg("losses");
    return guarded([&] {
        rtme::LossSnapshot snap;
        snap.losses.assign(losses, losses + n);
        *out = rtme::three_sigma_threshold(snap, sigma_min);
        return RTME_OK;
    });
}

rtme_status rtme_epoch_mode(long epoch, long period, int* truncated) {
    if (!truncated) return null_arg("truncated");
    return guarded([&] {
        *truncated = rtme::epoch_mode(epoch, period) == rtme::EpochMode::Truncated ? 1 : 0;
        return RTME_OK;
    });
}

}  // extern "C"

/* SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the rtme library: regularly truncated M-estimators for
 * training under label noise.
 *
 * Every function returns an rtme_status. On failure the thread-local last
 * error is set and can be read with rtme_last_error_message() or, as a JSON
 * object {"error": {"kind", "message", "status"}}, with rtme_last_error_json().
 * Returned strings stay valid until the next call on the same thread.
 */
#ifndef RTME_H
#define RTME_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RTME_API __declspec(dllexport)
#else
#define RTME_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rtme_status {
    RTME_OK = 0,
    RTME_CHECK_FAILED = 1, /* lemma check: preconditions held and the conclusion failed */
    RTME_ERR_INPUT = 2,    /* bad config, bad argument, unreadable or malformed input */
    RTME_ERR_NUMERIC = 3,  /* non-finite values during training */
    RTME_ERR_INTERNAL = 4
} rtme_status;

typedef enum rtme_estimator {
    RTME_ESTIMATOR_CE = 0,
    RTME_ESTIMATOR_CATONI = 1,
    RTME_ESTIMATOR_LOGSUM = 2,
    RTME_ESTIMATOR_WELSCH_PLUS = 3
} rtme_estimator;

typedef struct rtme_config rtme_config;

RTME_API const char* rtme_version(void);
RTME_API const char* rtme_last_error_message(void);
RTME_API const char* rtme_last_error_json(void);
RTME_API void rtme_clear_error(void);

/* Configuration handles. */
RTME_API rtme_status rtme_config_load(const char* path, rtme_config** out);
RTME_API rtme_status rtme_config_parse(const char* text, rtme_config** out);
RTME_API void rtme_config_free(rtme_config* config);
/* Sets the run seed; for sweeps it replaces the seed list with this one seed. */
RTME_API rtme_status rtme_config_set_seed(rtme_config* config, uint64_t seed);
RTME_API rtme_status rtme_config_set_out_dir(rtme_config* config, const char* dir);
/* Writes the 16-hex-digit config hash plus a terminating NUL; needs len >= 17. */
RTME_API rtme_status rtme_config_hash(const rtme_config* config, char* buf, size_t len);

/* Commands. On success *summary_json (if non-NULL) points at the JSON summary,
 * valid until the next command on this thread. */
RTME_API rtme_status rtme_cmd_train(const rtme_config* config, const char** summary_json);
RTME_API rtme_status rtme_cmd_sweep_r(const rtme_config* config, const char** summary_json);
RTME_API rtme_status rtme_cmd_perturb_sigma(const rtme_config* config, const char** summary_json);
/* epoch < 0 uses the configured histogram epoch. */
RTME_API rtme_status rtme_cmd_hist(const rtme_config* config, long epoch, const char** summary_json);
RTME_API rtme_status rtme_cmd_lemma_check(const rtme_config* config, const char** summary_json);
RTME_API rtme_status rtme_cmd_noise_stats(const rtme_config* config, const char** summary_json);

/* Estimator functions. `param` is epsilon for LogSum and alpha for Welsch+,
 * ignored otherwise. */
RTME_API rtme_status rtme_phi(rtme_estimator kind, double param, double loss, double* out);
RTME_API rtme_status rtme_weight(rtme_estimator kind, double param, double loss, double* out);
RTME_API rtme_status rtme_phi_truncated(rtme_estimator kind, double param, double loss, double sigma, double* out);
RTME_API rtme_status rtme_weight_truncated(rtme_estimator kind, double param, double loss, double sigma,
                                           double* out);

/* Threshold from a loss snapshot: mean + 3 std of the losses at or below the
 * median, clamped below at sigma_min. */
RTME_API rtme_status rtme_three_sigma_threshold(const double* losses, size_t n, double sigma_min, double* out);

/* *truncated is 0 for an Original epoch, 1 for a Truncated epoch. */
RTME_API rtme_status rtme_epoch_mode(long epoch, long period, int* truncated);

#ifdef __cplusplus
}
#endif

#endif /* RTME_H */

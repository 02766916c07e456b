#ifndef FAKTLAB_H
#define FAKTLAB_H

/* C interface of the faktlab experiment library.
 *
 * Every call returns a faktlab_status. On failure the message of the most
 * recent error on the calling thread is available from faktlab_last_error().
 * Strings returned through char** out-parameters are owned by the caller and
 * released with faktlab_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FAKTLAB_API __declspec(dllexport)
#else
#define FAKTLAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum faktlab_status {
  FAKTLAB_OK = 0,
  FAKTLAB_E_INVALID_ARGUMENT = 1,
  FAKTLAB_E_CONFIG = 2,
  FAKTLAB_E_IO = 3,
  FAKTLAB_E_STATE = 4,
  FAKTLAB_E_STAGE = 5,
  FAKTLAB_E_INTERNAL = 6
} faktlab_status;

typedef struct faktlab_config faktlab_config;
typedef struct faktlab_model faktlab_model;

FAKTLAB_API const char* faktlab_version(void);
FAKTLAB_API const char* faktlab_last_error(void);
FAKTLAB_API const char* faktlab_status_name(faktlab_status status);
FAKTLAB_API void faktlab_string_free(char* s);

/* Configuration */
FAKTLAB_API faktlab_status faktlab_config_default(faktlab_config** out);
FAKTLAB_API faktlab_status faktlab_config_load(const char* path, faktlab_config** out);
FAKTLAB_API faktlab_status faktlab_config_from_json(const char* json, faktlab_config** out);
FAKTLAB_API faktlab_status faktlab_config_to_json(const faktlab_config* config, char** json);
FAKTLAB_API faktlab_status faktlab_config_set_seed(faktlab_config* config, uint64_t seed);
FAKTLAB_API faktlab_status faktlab_config_get_seed(const faktlab_config* config, uint64_t* seed);
FAKTLAB_API void faktlab_config_free(faktlab_config* config);

/* Stages. Each reads and writes files inside out_dir. */
FAKTLAB_API faktlab_status faktlab_world_gen(const faktlab_config* config, const char* out_dir);
FAKTLAB_API faktlab_status faktlab_pretrain(const faktlab_config* config, const char* out_dir);
FAKTLAB_API faktlab_status faktlab_prefs_build(const faktlab_config* config, const char* out_dir);
FAKTLAB_API faktlab_status faktlab_apeft_build(const faktlab_config* config, const char* out_dir);
FAKTLAB_API faktlab_status faktlab_randqa_build(const faktlab_config* config, const char* out_dir);
/* loss: dpo, ipo, kto, cpo, rso. arm: general, rand, atom. */
FAKTLAB_API faktlab_status faktlab_tune(const faktlab_config* config, const char* out_dir,
                                        const char* loss, const char* arm);
/* model: "vanilla" or a tuned run name such as "dpo_atom". report_json may be NULL. */
FAKTLAB_API faktlab_status faktlab_eval(const faktlab_config* config, const char* out_dir,
                                        const char* model, char** report_json);
/* summary may be NULL. */
FAKTLAB_API faktlab_status faktlab_token_shift(const faktlab_config* config, const char* out_dir,
                                               char** summary);
FAKTLAB_API faktlab_status faktlab_sweep_quantity(const faktlab_config* config,
                                                  const char* out_dir);
FAKTLAB_API faktlab_status faktlab_sweep_quality(const faktlab_config* config, const char* out_dir);
/* Tables, report.md and manifest.json from the evaluations present. */
FAKTLAB_API faktlab_status faktlab_report(const faktlab_config* config, const char* out_dir);
/* All stages in order. */
FAKTLAB_API faktlab_status faktlab_run(const faktlab_config* config, const char* out_dir);
/* Re-runs a manifest into an empty out_dir. *identical is 1 when every
 * artifact digest matches; mismatches (may be NULL) receives a JSON array of
 * differing paths. */
FAKTLAB_API faktlab_status faktlab_replay(const char* manifest_path, const char* out_dir,
                                          int* identical, char** mismatches);

/* Models */
FAKTLAB_API faktlab_status faktlab_model_load(const char* checkpoint_path, faktlab_model** out);
FAKTLAB_API faktlab_status faktlab_model_param_count(const faktlab_model* model, size_t* count);
/* SHA-256 of the serialized checkpoint, hex encoded. */
FAKTLAB_API faktlab_status faktlab_model_digest(const faktlab_model* model, char** hex);
/* Greedy continuation of a space-separated prompt. */
FAKTLAB_API faktlab_status faktlab_model_generate(const faktlab_model* model, const char* prompt,
                                                  size_t max_len, char** text);
FAKTLAB_API void faktlab_model_free(faktlab_model* model);

#ifdef __cplusplus
}
#endif

#endif /* FAKTLAB_H */

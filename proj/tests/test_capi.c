/* Exercises the shared library through faktlab.h alone, compiled as C. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "faktlab/faktlab.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      fprintf(stderr, "%s:%d: expected %s (last error: %s)\n", __FILE__, \
              __LINE__, #cond, faktlab_last_error());                   \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

static const char* kTiny =
    "{\"schema\": \"faktlab.config/1\", \"seed\": 5,"
    " \"world\": {\"num_entities\": 12, \"sentences_per_entity\": 8},"
    " \"model\": {\"embed_dim\": 16},"
    " \"pretrain\": {\"epochs\": 2},"
    " \"queries\": {\"ood_open\": 2, \"ood_fp\": 2, \"ood_kqa\": 2},"
    " \"prefs\": {\"preference_entities\": 4}}";

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : "capi_work";
  faktlab_config* cfg = NULL;
  faktlab_model* model = NULL;
  char* text = NULL;
  char path[4096];
  uint64_t seed = 0;
  size_t count = 0;

  EXPECT(strcmp(faktlab_status_name(FAKTLAB_E_CONFIG), "config error") == 0);
  EXPECT(faktlab_config_default(NULL) == FAKTLAB_E_INVALID_ARGUMENT);
  EXPECT(strstr(faktlab_last_error(), "null") != NULL);

  EXPECT(faktlab_config_from_json("{ nope", &cfg) == FAKTLAB_E_CONFIG);
  EXPECT(faktlab_config_from_json("{\"schema\": \"faktlab.config/1\", \"colour\": 1}", &cfg) ==
         FAKTLAB_E_CONFIG);
  EXPECT(strstr(faktlab_last_error(), "colour") != NULL);
  EXPECT(cfg == NULL);

  EXPECT(faktlab_config_from_json(kTiny, &cfg) == FAKTLAB_OK);
  EXPECT(faktlab_config_get_seed(cfg, &seed) == FAKTLAB_OK && seed == 5);
  EXPECT(faktlab_config_set_seed(cfg, 6) == FAKTLAB_OK);
  EXPECT(faktlab_config_to_json(cfg, &text) == FAKTLAB_OK);
  EXPECT(text && strstr(text, "\"seed\": 6") != NULL);
  faktlab_string_free(text);
  text = NULL;

  EXPECT(faktlab_tune(cfg, dir, "ppo", "general") == FAKTLAB_E_CONFIG);
  EXPECT(faktlab_pretrain(cfg, "/nonexistent/faktlab") == FAKTLAB_E_STAGE);
  EXPECT(strstr(faktlab_last_error(), "pretrain") != NULL);

  EXPECT(faktlab_world_gen(cfg, dir) == FAKTLAB_OK);
  EXPECT(faktlab_pretrain(cfg, dir) == FAKTLAB_OK);
  snprintf(path, sizeof path, "%s/base.ckpt", dir);
  EXPECT(faktlab_model_load(path, &model) == FAKTLAB_OK);
  EXPECT(faktlab_model_param_count(model, &count) == FAKTLAB_OK && count > 0);
  EXPECT(faktlab_model_digest(model, &text) == FAKTLAB_OK && text && strlen(text) == 64);
  faktlab_string_free(text);
  text = NULL;
  EXPECT(faktlab_model_generate(model, "tell me about", 8, &text) == FAKTLAB_E_INVALID_ARGUMENT);
  EXPECT(faktlab_eval(cfg, dir, "vanilla", &text) == FAKTLAB_OK);
  EXPECT(text && strstr(text, "avg") != NULL);
  faktlab_string_free(text);

  snprintf(path, sizeof path, "%s/missing.ckpt", dir);
  EXPECT(faktlab_model_load(path, NULL) == FAKTLAB_E_INVALID_ARGUMENT);

  faktlab_model_free(model);
  faktlab_config_free(cfg);
  faktlab_config_free(NULL);
  if (failures) fprintf(stderr, "%d failures\n", failures);
  return failures ? EXIT_FAILURE : EXIT_SUCCESS;
}

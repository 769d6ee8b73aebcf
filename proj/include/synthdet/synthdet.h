/*
 * synthdet - synthetic object-detection dataset toolkit.
 *
 * C API over the C++ core. All functions return a synthdet_status;
 * anything else moves through opaque handles. On failure the thread-local
 * message from synthdet_last_error() describes what went wrong.
 */
#ifndef SYNTHDET_H_
#define SYNTHDET_H_

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum synthdet_status {
  SYNTHDET_OK = 0,
  SYNTHDET_ERR_INVALID_ARGUMENT = 1,
  SYNTHDET_ERR_IO = 2,
  SYNTHDET_ERR_PARSE = 3,
  SYNTHDET_ERR_CONFIG = 4, /* config validation failed; message has the field path */
  SYNTHDET_ERR_RUNTIME = 5
} synthdet_status;

const char* synthdet_version(void);
const char* synthdet_status_name(synthdet_status status);

/* Message for the most recent failure on this thread ("" if none). */
const char* synthdet_last_error(void);

/* Parsed and validated configuration document. */
typedef struct synthdet_config synthdet_config;

/* Result of a run: JSON plus a human-readable rendering. */
typedef struct synthdet_report synthdet_report;

synthdet_status synthdet_config_load(const char* path, synthdet_config** out);

/* Applies "dotted.path" = <json value> (bare words become strings), then
 * revalidates the whole document. */
synthdet_status synthdet_config_override(synthdet_config* config,
                                         const char* dotted_key,
                                         const char* json_value);
synthdet_status synthdet_config_set_seed(synthdet_config* config,
                                         uint64_t seed);
synthdet_status synthdet_config_set_output_dir(synthdet_config* config,
                                               const char* dir);
void synthdet_config_free(synthdet_config* config);

/* Dataset generation per the config's generation section. jobs <= 0 means 1;
 * output bytes do not depend on jobs. */
synthdet_status synthdet_generate(const synthdet_config* config, int jobs,
                                  synthdet_report** out);

/* Detection evaluation: ground truth annotations file vs detections file. */
synthdet_status synthdet_evaluate(const char* gt_path,
                                  const char* detections_path,
                                  synthdet_report** out);

/* Freeze-schedule transfer experiment (config's experiment section). */
synthdet_status synthdet_experiment_freeze(const synthdet_config* config,
                                           int jobs, synthdet_report** out);

/* Feature-distance experiment: runs the transfer protocol with the frozen
 * and fully-finetuned schedules and reports both distance histograms. */
synthdet_status synthdet_experiment_distance(const synthdet_config* config,
                                             int jobs, synthdet_report** out);

/* Pipeline ablation matrix (16 toggle combinations). */
synthdet_status synthdet_ablate(const synthdet_config* config, int jobs,
                                synthdet_report** out);

/* Resolved-config and pose-grid summary (grid size, per-scale pixel
 * coverage of each object). */
synthdet_status synthdet_inspect(const synthdet_config* config,
                                 synthdet_report** out);

const char* synthdet_report_text(const synthdet_report* report);
const char* synthdet_report_json(const synthdet_report* report);
synthdet_status synthdet_report_write_json(const synthdet_report* report,
                                           const char* path);
void synthdet_report_free(synthdet_report* report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SYNTHDET_H_ */

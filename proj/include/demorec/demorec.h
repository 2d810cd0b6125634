#ifndef DEMOREC_DEMOREC_H
#define DEMOREC_DEMOREC_H

/* C interface to the DemoRec graph-condensation recommender.
 *
 * All functions return a demorec_status; on failure the thread-local
 * message from demorec_last_error() describes what went wrong. Strings
 * returned through char** out-parameters are heap copies owned by the
 * caller and must be released with demorec_string_free().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum demorec_status {
  DEMOREC_OK = 0,
  DEMOREC_INVALID_ARGUMENT = 1,
  DEMOREC_SHAPE_MISMATCH = 2,
  DEMOREC_PARSE_ERROR = 3,
  DEMOREC_IO_ERROR = 4,
  DEMOREC_NOT_FINITE = 5,
  DEMOREC_EMPTY_GRAPH = 6,
  DEMOREC_INTERNAL_ERROR = 7
} demorec_status;

/* Library semantic version, static storage (do not free). */
const char* demorec_version(void);

/* Message from the most recent failing call on this thread ("" if none). */
const char* demorec_last_error(void);

void demorec_string_free(char* s);

/* Opaque deduplicated user-item interaction log. */
typedef struct demorec_log demorec_log;

/* Loads whitespace-separated "user item [weight [timestamp]]" lines. */
demorec_status demorec_log_load(const char* path, demorec_log** out);

/* Synthetic bipartite block-model log (in-block edge probability p_in,
 * off-block p_out, matched user/item blocks). */
demorec_status demorec_log_synthetic(int64_t users, int64_t items,
                                     int64_t blocks, double p_in, double p_out,
                                     uint64_t seed, demorec_log** out);

/* Iteratively removes nodes with fewer than k interactions. */
demorec_status demorec_log_kcore(const demorec_log* log, int64_t k,
                                 demorec_log** out);

/* {"users":..,"items":..,"edges":..,"density_pct":..} for the log. */
demorec_status demorec_log_stats_json(const demorec_log* log, char** out_json);

void demorec_log_free(demorec_log* log);

/* Runs one experiment subcommand: condense | recommend | pipeline |
 * baseline | ablate-bsl | sweep | bench. config_text holds flat key=value
 * lines ('#' comments allowed); artifacts are written under the configured
 * out directory. out_summary (optional) receives a one-line outcome. */
demorec_status demorec_run(const char* subcommand, const char* config_text,
                           char** out_summary);

#ifdef __cplusplus
}
#endif

#endif /* DEMOREC_DEMOREC_H */

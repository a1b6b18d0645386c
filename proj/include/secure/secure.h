/* C interface to the secure library.
 *
 * Every function returns a status code. On failure a message is available
 * from secure_last_error() on the calling thread until the next call.
 * Strings returned through out-parameters are owned by the caller and must
 * be released with secure_string_free. Structured values are JSON text.
 */
#ifndef SECURE_SECURE_H
#define SECURE_SECURE_H

#if defined(SECURE_BUILDING_LIBRARY)
#define SECURE_API __attribute__((visibility("default")))
#else
#define SECURE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum secure_status {
  SECURE_OK = 0,
  SECURE_ERR_ARGUMENT = 1,     /* null pointer or malformed JSON */
  SECURE_ERR_PARSE = 2,        /* text outside the controlled grammar */
  SECURE_ERR_CONFIG = 3,
  SECURE_ERR_PROTOCOL = 4,     /* session message out of turn */
  SECURE_ERR_VALIDATION = 5,   /* session message with invalid content */
  SECURE_ERR_INCONSISTENT = 6,
  SECURE_ERR_CAPACITY = 7,
  SECURE_ERR_DIVERGENCE = 8,
  SECURE_ERR_INTERNAL = 9
} secure_status;

typedef struct secure_session secure_session;

SECURE_API const char* secure_version(void);
SECURE_API const char* secure_last_error(void);
SECURE_API const char* secure_status_name(secure_status status);
SECURE_API void secure_string_free(char* s);

/* {"logical_form", "rendered", "symbols"} for a referential expression. */
SECURE_API secure_status secure_parse_refexp(const char* text, char** out_json);
/* {"direct", "relation", "indirect", "rendered"} for a task instruction. */
SECURE_API secure_status secure_parse_instruction(const char* text, char** out_json);
/* Canonical English for a referential expression given as English or as a logical form. */
SECURE_API secure_status secure_render_refexp(const char* text, char** out_text);

/* Runs an experiment; config and result formats are in docs/formats.md.
 * The result carries the summary, curves_csv and transcripts_jsonl. */
SECURE_API secure_status secure_experiment_run(const char* config_json, char** out_json);
/* SARSA training: {"theta", "episode_rewards", "training_csv"}. */
SECURE_API secure_status secure_policy_train(const char* config_json, char** out_json);

SECURE_API secure_status secure_session_create(const char* config_json, secure_session** out);
SECURE_API void secure_session_destroy(secure_session* s);
SECURE_API secure_status secure_session_get_state(secure_session* s, char** out_json);
/* Routes one protocol message (docs/protocol.md). The HTTP-style status is
 * stored in *http_status and the response body in *out_json; both are set
 * for rejected messages too, which return SECURE_ERR_PROTOCOL or
 * SECURE_ERR_VALIDATION. Sessions serialise concurrent calls. */
SECURE_API secure_status secure_session_request(secure_session* s, const char* method, const char* path,
                                                const char* body, int* http_status, char** out_json);

#ifdef __cplusplus
}
#endif

#endif

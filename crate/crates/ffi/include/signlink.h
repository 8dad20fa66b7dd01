#ifndef SIGNLINK_H
#define SIGNLINK_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_ARGUMENT = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_MALFORMED = 4,
  SL_STATUS_MODEL = 5,
  SL_STATUS_INVALID_ARGUMENT = 6,
  SL_STATUS_TIMESTAMP_REGRESSION = 7,
  SL_STATUS_PANIC = 8,
} SlStatus;

// Opaque engine handle.
typedef struct SlEngine SlEngine;

// Opaque session handle.
typedef struct SlSession SlSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a model and an optional sentence table. `sentences_path` may be null
// to use the bundled table. `window` and `stride` of 0 select the defaults.
// The landmark count is taken from the model.
//
// # Safety
// Path arguments must be null or NUL-terminated strings. `out` must be a
// valid pointer to write the handle to.
enum SlStatus sl_engine_load(const char *model_path,
                             const char *sentences_path,
                             uint32_t window,
                             uint32_t stride,
                             struct SlEngine **out);

// Releases an engine. Sessions created from it stay valid.
//
// # Safety
// `engine` must be null or a handle from [`sl_engine_load`] not yet freed.
void sl_engine_free(struct SlEngine *engine);

// Number of coordinates per landmark frame expected by the engine's model.
//
// # Safety
// `engine` must be a live handle; returns 0 when null.
uint32_t sl_engine_input_dim(const struct SlEngine *engine);

// Opens a session on `engine`.
//
// # Safety
// `engine` must be a live handle and `out` a valid pointer.
enum SlStatus sl_session_new(const struct SlEngine *engine, uint64_t id, struct SlSession **out);

// # Safety
// `session` must be null or a handle from [`sl_session_new`] not yet freed.
void sl_session_free(struct SlSession *session);

// Feeds one inbound JSON record. The replies are written to `out` as
// newline-terminated JSON lines, possibly empty. Protocol errors are replies,
// not failures.
//
// # Safety
// `session` must be a live handle, `line` a NUL-terminated string and `out`
// a valid pointer.
enum SlStatus sl_session_push(struct SlSession *session, const char *line, char **out);

// Replays a recorded stream file through a fresh session at full speed and
// writes the outbound log to `out`.
//
// # Safety
// `engine` must be a live handle, `path` a NUL-terminated string and `out`
// a valid pointer.
enum SlStatus sl_replay_file(const struct SlEngine *engine, const char *path, char **out);

// # Safety
// `s` must be null or a string returned by this library not yet freed.
void sl_string_free(char *s);

// Description of the last failure on this thread, or null. Valid until the
// next call into the library on the same thread.
const char *sl_last_error(void);

// Wire protocol version spoken by sessions.
uint32_t sl_protocol_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGNLINK_H */

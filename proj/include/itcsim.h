/* C interface to the intermittent-computing toolkit.
 *
 * All functions returning int yield an ITC_* status code. Output strings are
 * heap-allocated and must be released with itc_str_free; on failure *err (when
 * provided) receives a diagnostic string, also owned by the caller.
 */
#ifndef ITCSIM_H
#define ITCSIM_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct itc_program itc_program;   /* parsed + validated program */
typedef struct itc_compiled itc_compiled; /* instrumented + lowered program */

enum {
  ITC_OK = 0,
  ITC_EPARSE = 1,    /* syntax or validation error in the source program */
  ITC_EPROGRAM = 2,  /* run ended in a program error (bounds, div by zero) */
  ITC_EVERIFY = 3,   /* verification found a divergence */
  ITC_EINVAL = 4,    /* bad argument / malformed options */
  ITC_EINTERNAL = 5, /* unexpected internal failure */
};

const char* itc_version(void);

int itc_parse(const char* source, itc_program** out, char** err);
void itc_program_free(itc_program* p);

/* Re-parsable pretty-printed source. */
int itc_print_source(const itc_program* p, char** out, char** err);

/* W-A-R analysis report: {strictCalls, tasks:{name:{warSet,commitBound}},
 * contagious, maxCommitListSize}. */
int itc_analyze_json(const itc_program* p, int strict_calls, char** json_out,
                     char** err);

/* mode: "redo" | "undo" | "ckpt" | "none" */
int itc_compile(const itc_program* p, const char* mode, itc_compiled** out,
                char** err);
void itc_compiled_free(itc_compiled* c);

int itc_instrumented_source(const itc_compiled* c, char** out, char** err);
int itc_manifest_json(const itc_compiled* c, char** out, char** err);

/* options_json (all fields optional):
 *   power:      "continuous" (default) | "budget=N"
 *   schedule:   [step indices]  (overrides power)
 *   seed:       integer channel seed
 *   channels:   {"name": [v1, v2, ...]} explicit cyclic streams
 *   costTable:  "key=value\n..." text (compute / volAccess / nvAccess)
 *   maxSteps:   step limit
 *   initialVersion: pre-set cur_version in the fresh image
 *   fpLimit:    identical failed attempts before a forward-progress verdict
 *   trace:      true -> result gains a "trace" array of JSON event lines
 *   dumpNv:     true -> result gains an "nv" name->value dump
 * Returns ITC_EPROGRAM when the run ends in a program error; result_json is
 * still produced. */
int itc_run_json(const itc_compiled* c, const char* options_json,
                 char** result_json, char** err);

/* options_json: run options plus
 *   exhaustive: true -> single-failure sweep over every step
 *   fuzzRuns:   N -> N randomized budget runs (capacity auto-ranged)
 *   strictOutputs: compare raw outputs too
 *   parallelism: worker threads (0 = hardware)
 * Omitting both exhaustive and fuzzRuns verifies the single configured run.
 * Returns ITC_EVERIFY when any divergence is found; report_json is still
 * produced. */
int itc_verify_json(const itc_compiled* c, const char* options_json,
                    char** report_json, char** err);

/* options_json:
 *   corpusDir: path (required)
 *   suite:     "all" (default) | program stem
 *   sweep:     "none" (default) | "tasksize" | "capacity"
 *   modes:     ["undo","redo","ckpt"]
 *   verifyFirst: exhaustive gate before emitting rows (default true)
 *   seed, costTable, parallelism as above */
int itc_bench_csv(const char* options_json, char** csv_out, char** err);

/* SVG line chart of the task-size sweep; options as itc_bench_csv. */
int itc_bench_svg(const char* options_json, char** svg_out, char** err);

void itc_str_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* ITCSIM_H */

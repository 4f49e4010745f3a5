#ifndef TENSEGRITY_TENSEGRITY_H
#define TENSEGRITY_TENSEGRITY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(TSG_BUILDING_LIBRARY)
#define TSG_API __declspec(dllexport)
#else
#define TSG_API __declspec(dllimport)
#endif
#else
#define TSG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tsg_structure tsg_structure;
typedef struct tsg_config tsg_config;
typedef struct tsg_world tsg_world;
typedef struct tsg_program tsg_program;
typedef struct tsg_trajectory tsg_trajectory;
typedef struct tsg_manifest tsg_manifest;

typedef enum tsg_status {
  TSG_OK = 0,
  TSG_ERR_ARGUMENT = 1,      /* bad argument, unknown name, malformed spec */
  TSG_ERR_VALIDATION = 2,    /* structure or program failed validation */
  TSG_ERR_IO = 3,            /* file could not be read */
  TSG_ERR_NOT_CONVERGED = 4, /* settle ran out of time; the world holds the last state */
  TSG_ERR_DIVERGED = 5,      /* state became non-finite */
  TSG_ERR_INTERNAL = 6
} tsg_status;

/* Experiment timing. Zero fields take the library defaults. */
typedef struct tsg_timing {
  double duration;        /* s */
  double sample_period;   /* s, a whole multiple of dt */
  double settle_tol;      /* m/s */
  double settle_max_time; /* s */
} tsg_timing;

TSG_API const char* tsg_version(void);
TSG_API const char* tsg_status_name(tsg_status status);
/* Message for the last failing call on this thread; "" when none. */
TSG_API const char* tsg_last_error(void);
/* Releases any char* returned through an out parameter. */
TSG_API void tsg_string_free(char* s);

/* Structures. Diagnostics are one "line:column: kind: message" or
   "element: rule" per line and may be NULL. */
TSG_API tsg_status tsg_builtin_names(char** out);
TSG_API tsg_status tsg_structure_builtin(const char* name, tsg_structure** out);
TSG_API tsg_status tsg_structure_parse(const char* text, tsg_structure** out, char** diagnostics);
TSG_API tsg_status tsg_structure_load(const char* path, tsg_structure** out, char** diagnostics);
TSG_API tsg_status tsg_structure_serialize(const tsg_structure* s, char** out);
TSG_API tsg_status tsg_structure_validate(const tsg_structure* s, char** diagnostics);
TSG_API tsg_status tsg_structure_name(const tsg_structure* s, char** out);
TSG_API size_t tsg_structure_body_count(const tsg_structure* s);
TSG_API size_t tsg_structure_cable_count(const tsg_structure* s);
/* Newline-separated preset names when the structure carries a built-in name, else "". */
TSG_API tsg_status tsg_structure_presets(const tsg_structure* s, char** out);
/* Built-in end-effector marker as body.node. TSG_ERR_ARGUMENT for other structures. */
TSG_API tsg_status tsg_structure_end_effector(const tsg_structure* s, char** out);
TSG_API void tsg_structure_free(tsg_structure* s);

/* Simulation settings. Obstacles: "sphere:cx,cy,cz,r" or "halfspace:nx,ny,nz,offset". */
TSG_API tsg_status tsg_config_create(double dt, tsg_config** out);
TSG_API tsg_status tsg_config_add_obstacle(tsg_config* c, const char* spec);
TSG_API size_t tsg_config_obstacle_count(const tsg_config* c);
TSG_API void tsg_config_free(tsg_config* c);

/* Worlds. */
TSG_API tsg_status tsg_world_initial(const tsg_structure* s, tsg_world** out);
TSG_API tsg_status tsg_world_load_state(const tsg_structure* s, const char* text, tsg_world** out);
/* Settles in place with active targets frozen. Returns TSG_ERR_NOT_CONVERGED or
   TSG_ERR_DIVERGED on failure; residual may be NULL. */
TSG_API tsg_status tsg_world_settle(const tsg_structure* s, const tsg_config* c, tsg_world* w, double tol,
                                    double max_time, double* residual);
TSG_API double tsg_world_time(const tsg_world* w);
/* Smallest cable tension in the world, N. */
TSG_API tsg_status tsg_world_min_tension(const tsg_structure* s, const tsg_world* w, double* out);
TSG_API tsg_status tsg_world_state_document(const tsg_structure* s, const tsg_world* w, int converged,
                                            double residual, char** out);
TSG_API void tsg_world_free(tsg_world* w);

/* Controller programs. */
TSG_API tsg_status tsg_program_parse(const char* text, tsg_program** out, char** diagnostics);
TSG_API tsg_status tsg_program_load(const char* path, tsg_program** out, char** diagnostics);
/* Sine preset of a built-in DOF about the commanded lengths of w. */
TSG_API tsg_status tsg_program_preset(const tsg_structure* s, const tsg_world* w, const char* preset,
                                      tsg_program** out);
TSG_API tsg_status tsg_program_validate(const tsg_program* p, const tsg_structure* s, char** diagnostics);
TSG_API tsg_status tsg_program_serialize(const tsg_program* p, char** out);
TSG_API void tsg_program_free(tsg_program* p);

/* Measures are a built-in preset name or a spec: "angle:pivot,proximal,distal[,nx,ny,nz]",
   "travel:marker,ax,ay,az" or "heading:pivot,marker,nx,ny,nz". Comma-separated body.node list. */
TSG_API tsg_status tsg_measure_markers(const tsg_structure* s, const char* measure, char** out);

/* Tracking. markers is a comma-separated body.node list. final_state may be NULL. */
TSG_API tsg_status tsg_track(const tsg_structure* s, const tsg_config* c, const tsg_world* initial,
                             const tsg_program* p, const char* markers, double duration, double sample_period,
                             tsg_trajectory** out, tsg_world** final_state);
TSG_API size_t tsg_trajectory_sample_count(const tsg_trajectory* t);
TSG_API tsg_status tsg_trajectory_csv(const tsg_trajectory* t, char** out);
/* Warnings raised while tracking, one per line. */
TSG_API tsg_status tsg_trajectory_warnings(const tsg_trajectory* t, char** out);
/* Range-of-motion report document for a measure whose markers were tracked. */
TSG_API tsg_status tsg_trajectory_range_of_motion(const tsg_structure* s, const tsg_trajectory* t,
                                                  const char* measure, char** report);
TSG_API void tsg_trajectory_free(tsg_trajectory* t);

/* Experiments. Reports are structured text documents. */
/* Tracks from a settled world; reports the swept area and angular extent of
   marker in the measure's plane plus the measure's range of motion. */
TSG_API tsg_status tsg_experiment_workspace(const tsg_structure* s, const tsg_config* c, const tsg_world* settled,
                                            const tsg_program* p, const char* measure, const char* marker,
                                            const tsg_timing* timing, tsg_trajectory** trajectory, char** report);
/* Free run under c minus its obstacles, obstructed run under c. */
TSG_API tsg_status tsg_experiment_compliance(const tsg_structure* s, const tsg_config* c, const tsg_world* settled,
                                             const tsg_program* p, const char* markers, const tsg_timing* timing,
                                             tsg_trajectory** free_run, tsg_trajectory** obstructed_run,
                                             char** report);
/* Perturbs passive cables by noise per seed, settles, tracks and measures. */
TSG_API tsg_status tsg_experiment_repeatability(const tsg_structure* s, const tsg_config* c, const tsg_program* p,
                                                const char* measure, const uint64_t* seeds, size_t seed_count,
                                                double noise, const tsg_timing* timing, char** report);

/* Run manifests. */
TSG_API tsg_status tsg_manifest_create(const char* command, tsg_manifest** out);
TSG_API tsg_status tsg_manifest_add_input(tsg_manifest* m, const char* path);
TSG_API tsg_status tsg_manifest_add_output(tsg_manifest* m, const char* path);
TSG_API tsg_status tsg_manifest_set(tsg_manifest* m, const char* key, const char* value);
TSG_API tsg_status tsg_manifest_render(const tsg_manifest* m, char** out);
TSG_API void tsg_manifest_free(tsg_manifest* m);

#ifdef __cplusplus
}
#endif

#endif

/* C interface to the ufno wind-field surrogate pipeline.
 *
 * Every function returns a ufno_status; on failure ufno_last_error() holds a
 * human-readable message for the calling thread. Handles are opaque and owned
 * by the caller via the matching _free function. All file formats match the
 * documented binary/JSON layouts (field "UFN1", mask "UMSK", checkpoint
 * "UFCK", manifest/scene/summary JSON).
 */
#ifndef UFNO_H
#define UFNO_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ufno_status {
  UFNO_OK = 0,
  UFNO_ERR_INVALID = 1, /* bad arguments, shapes, configuration */
  UFNO_ERR_IO = 2,      /* filesystem failure */
  UFNO_ERR_FORMAT = 3,  /* malformed file contents */
  UFNO_ERR_NUMERIC = 4, /* NaN, divergence, non-convergence */
} ufno_status;

const char* ufno_last_error(void);
const char* ufno_version(void);

/* ------------------------------------------------------------------ fields */

typedef struct ufno_field ufno_field;
typedef struct ufno_mask ufno_mask;

ufno_status ufno_field_read(const char* path, ufno_field** out);
ufno_status ufno_field_write(const ufno_field* field, const char* path);
ufno_status ufno_field_create(uint32_t nx, uint32_t ny, uint32_t nz, double dx, double dy,
                              double dz, const double origin[3], const double* values,
                              ufno_field** out);
void ufno_field_free(ufno_field* field);
ufno_status ufno_field_dims(const ufno_field* field, uint32_t* nx, uint32_t* ny, uint32_t* nz);
ufno_status ufno_field_spacing(const ufno_field* field, double* dx, double* dy, double* dz);
/* Dense nx*ny*nz values, x-fastest. Valid until the handle is freed. */
const double* ufno_field_values(const ufno_field* field);
double* ufno_field_values_mut(ufno_field* field);
ufno_status ufno_field_export_vtk(const ufno_field* field, const char* path,
                                  const char* array_name);

ufno_status ufno_mask_read(const char* path, ufno_mask** out);
void ufno_mask_free(ufno_mask* mask);
ufno_status ufno_mask_dims(const ufno_mask* mask, uint32_t* nx, uint32_t* ny, uint32_t* nz);
/* 0 fluid, 1 solid; x-fastest. */
const uint8_t* ufno_mask_solid(const ufno_mask* mask);
ufno_status ufno_apply_mask(ufno_field* field, const ufno_mask* mask);

/* -------------------------------------------------------------- checkpoint */

typedef struct ufno_checkpoint ufno_checkpoint;

ufno_status ufno_checkpoint_load(const char* path, ufno_checkpoint** out);
void ufno_checkpoint_free(ufno_checkpoint* ckpt);
ufno_status ufno_checkpoint_info(const ufno_checkpoint* ckpt, uint32_t* epoch,
                                 uint64_t* trainable_parameters, uint32_t* modes,
                                 uint32_t* width, uint32_t* layers);

/* One surrogate forward pass: n_inputs history fields (the model's input
 * channel count) on one grid. Inputs are normalized with (mean, std) before
 * the pass; the returned field is in physical units and not masked. */
ufno_status ufno_checkpoint_forward(const ufno_checkpoint* ckpt, const ufno_field* const* inputs,
                                    size_t n_inputs, double norm_mean, double norm_std,
                                    ufno_field** out);

/* ---------------------------------------------------------------- pipeline */

typedef struct ufno_solver_opts {
  uint32_t n_steps;        /* generate only */
  uint32_t output_stride;  /* generate only */
  int direction_degrees;   /* 0 west, 90 north, 180 east, 270 south */
  double reynolds;
  double prandtl;
  double grashof;
  double smagorinsky_cs;
  double courant;
  double u_ref;
  double z_ref;
  double alpha;
  int thermal;             /* 0/1 */
  double prandtl_turbulent;
  int linear_interpolation; /* 0 cubic (default), 1 trilinear */
  int use_sor;              /* 0 damped Jacobi (default), 1 red-black SOR */
  double projection_tol;
  uint32_t max_projection_iters;
  uint32_t threads;         /* recorded in outputs; this build runs serially */
} ufno_solver_opts;

void ufno_solver_opts_init(ufno_solver_opts* opts);

/* Runs the solver over scene_path and writes field_%05u.ufn snapshots,
 * mask.umsk, summary.json and index.json into out_dir. */
ufno_status ufno_generate(const char* scene_path, const ufno_solver_opts* opts,
                          const char* out_dir);

typedef struct ufno_prepare_opts {
  uint32_t window;    /* steps per sample, default 6 */
  uint32_t stride;    /* default 2 */
  uint32_t n_train;
  uint64_t seed;
  uint32_t target_nx, target_ny, target_nz; /* 0 = keep source dims */
  const char* mask_path;                    /* optional, for stats + re-zeroing */
  double dt;                                /* 0 = take from fields_dir/summary.json */
} ufno_prepare_opts;

void ufno_prepare_opts_init(ufno_prepare_opts* opts);

/* Windows + split + normalization over the fields_dir snapshots (optionally
 * spline-downsampled to the target dims); writes the manifest JSON and the
 * processed field files next to it. */
ufno_status ufno_prepare(const char* fields_dir, const ufno_prepare_opts* opts,
                         const char* out_dir);

typedef struct ufno_train_opts {
  uint32_t epochs;
  double learning_rate;
  uint64_t seed;
  uint32_t modes, width, layers;
  const char* activation; /* "gelu" | "relu" */
  int grad_check;
  uint32_t threads;
} ufno_train_opts;

void ufno_train_opts_init(ufno_train_opts* opts);

/* Trains on the manifest dataset; writes checkpoint_best.ufck,
 * checkpoint_final.ufck, loss_curves.csv, index.json into out_dir. */
ufno_status ufno_train(const char* manifest_path, const ufno_train_opts* opts,
                       const char* out_dir);

typedef struct ufno_eval_opts {
  const char* split;     /* "test" (default), "train", "all" */
  const char* label;     /* scenario tag recorded in metrics.json */
  double pdf_bin_width;  /* default 0.25 m/s */
  double cond_bin_width; /* default 0.25 m/s */
} ufno_eval_opts;

void ufno_eval_opts_init(ufno_eval_opts* opts);

/* One-step evaluation over the chosen split; writes metrics.json,
 * per_sample_loss.csv, pdf.csv, cond_error.csv, height_profile.csv and
 * index.json into out_dir. */
ufno_status ufno_eval(const char* checkpoint_path, const char* manifest_path,
                      const ufno_eval_opts* opts, const char* out_dir);

typedef struct ufno_rollout_opts {
  uint32_t n_steps;     /* default 50 */
  uint32_t start_frame; /* index of the first history frame, default 0 */
  const char* mask_path;
  int write_fields; /* also write rollout_%05u.ufn predictions */
} ufno_rollout_opts;

void ufno_rollout_opts_init(ufno_rollout_opts* opts);

/* Autoregressive rollout seeded from the manifest frames; when the manifest
 * holds truth for the forecast horizon, rollout_error.csv is produced. */
ufno_status ufno_rollout(const char* checkpoint_path, const char* manifest_path,
                         const ufno_rollout_opts* opts, const char* out_dir);

/* Median one-step timing of solver vs surrogate at the scene resolution;
 * writes bench.csv and index.json. */
ufno_status ufno_bench(const char* checkpoint_path, const char* scene_path,
                       const ufno_solver_opts* solver_opts, uint32_t n_repeats,
                       const char* out_dir);

ufno_status ufno_export_vtk(const char* field_path, const char* vtk_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* UFNO_H */

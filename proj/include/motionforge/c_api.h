/* Flat C boundary for in-process host-language bindings.
 *
 * Every function returns 0 on success or a motionforge error code
 * (2 config, 3 input missing, 4 contract/descriptor, 5 internal). The message
 * for the last failure on the calling thread is available from
 * motionforge_last_error(). No exception crosses this boundary.
 *
 * Arrays are passed as descriptors with byte strides. Float inputs may be
 * strided float32 or float64; outputs must be C-contiguous and exactly shaped.
 */
#ifndef MOTIONFORGE_C_API_H
#define MOTIONFORGE_C_API_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define MOTIONFORGE_ABI_VERSION 1
#define MF_MAX_DIMS 4

typedef enum mf_dtype {
    MF_FLOAT32 = 1,
    MF_FLOAT64 = 2,
    MF_UINT8 = 3
} mf_dtype;

typedef struct mf_array {
    void* data;
    int32_t dtype;
    int32_t ndim;
    int64_t shape[MF_MAX_DIMS];
    int64_t strides[MF_MAX_DIMS]; /* bytes */
} mf_array;

/* Per-frame track row layout (22 float64 values):
 * R[9] row-major, T[3], fx, fy, cx, cy, width, height, bbox x, y, w, h */
#define MF_TRACK_ROW 22

typedef struct mf_render_settings {
    int32_t width;
    int32_t height;
    double near_plane;
    double ambient;
    double light[3];
    int32_t use_default_palette; /* nonzero: ignore palette below */
    uint8_t palette[7][3];       /* six parts in part-id order, then background */
    uint32_t workers;
} mf_render_settings;

int32_t motionforge_abi_version(void);
const char* motionforge_last_error(void);

void motionforge_default_render_settings(mf_render_settings* settings);

/* out: float64 [n] */
int32_t motionforge_sample_timestep(double mean, double stddev, double lo, double hi, uint64_t seed, mf_array* out);

int32_t motionforge_conditioning_active(double t, double mean, double stddev, double lo, double hi, int32_t* out);

/* preset: 0 cosine, 1 linear. x0 and out: float64 [rows, cols] */
int32_t motionforge_forward_noise(const mf_array* x0, double t, int32_t preset, uint64_t seed, mf_array* out);

/* poses: float64 [K, 3*N_j + 3]; betas: float64 [n] or NULL;
 * out: float64 [K, N_v, 3] */
int32_t motionforge_pose(const char* model_path, const mf_array* poses, const mf_array* betas, mf_array* out);

/* motion: float64 [K, 3*N_j + 3]; track: float64 [K, MF_TRACK_ROW];
 * intrinsics_space: 0 crop, 1 frame; out: uint8 [K, height, width, 3] */
int32_t motionforge_render_video(const mf_array* motion, const mf_array* betas, const char* model_path,
                                 const mf_array* track, double crop_side, int32_t intrinsics_space,
                                 const mf_render_settings* settings, mf_array* out);

#ifdef __cplusplus
}
#endif

#endif /* MOTIONFORGE_C_API_H */

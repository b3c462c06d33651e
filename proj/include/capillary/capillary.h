#ifndef CAPILLARY_CAPILLARY_H
#define CAPILLARY_CAPILLARY_H

/* C interface to the capillary convex body library.
 *
 * Conventions:
 *   - Every fallible function returns a cap_status; CAP_OK is 0.
 *   - On failure the thread-local message from cap_last_error_message()
 *     describes what went wrong; it stays valid until the next failing call
 *     on the same thread.
 *   - Output strings (char**) are heap copies owned by the caller; release
 *     them with cap_string_free. Handles are released with the matching
 *     *_free function. All *_free functions accept NULL.
 *   - Structured options and reports travel as JSON text, so the surface
 *     stays small and forward compatible.
 *   - Angles are radians throughout. Meshes of dimension 1 use a signed arc
 *     coordinate; meshes of dimension 2 use polar/azimuth angles.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cap_status {
  CAP_OK = 0,
  CAP_ERR_INVALID_ARGUMENT = 1, /* bad parameter or malformed options */
  CAP_ERR_VALIDATION = 2,       /* geometric validity check failed */
  CAP_ERR_MESH_MISMATCH = 3,    /* operands live on incompatible meshes */
  CAP_ERR_OUT_OF_RANGE = 4,     /* index or buffer length out of range */
  CAP_ERR_SOLVER_STALL = 5,     /* solve finished without converging */
  CAP_ERR_IO = 6,               /* file or JSON parse failure */
  CAP_ERR_INTERNAL = 7          /* unexpected condition; please report */
} cap_status;

/* Opaque handles. */
typedef struct cap_mesh cap_mesh;
typedef struct cap_body cap_body;
typedef struct cap_gauge cap_gauge;

/* ------------------------------------------------------------------ */
/* Library plumbing                                                    */

/* Semantic version of the library, a static string (do not free). */
const char* cap_version(void);

/* Static name for a status value, e.g. "validation" (do not free). */
const char* cap_status_name(cap_status status);

/* Message of the most recent failure on this thread; "" if none. */
const char* cap_last_error_message(void);

void cap_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Meshes                                                              */

/* dim is 1 or 2 and counts the tangential dimensions of the cap; theta is
 * the contact angle in (0, pi). res_polar is the number of rings between
 * pole and boundary (nodes for dim 1); res_azimuth is the even azimuth
 * count for dim 2 (pass 0 for the default 2*res_polar) and ignored for
 * dim 1. */
cap_status cap_mesh_create(int dim, double theta, int res_polar, int res_azimuth, cap_mesh** out);
void cap_mesh_free(cap_mesh* mesh);

int cap_mesh_dim(const cap_mesh* mesh);
double cap_mesh_theta(const cap_mesh* mesh);
int cap_mesh_rings(const cap_mesh* mesh);
int cap_mesh_azimuths(const cap_mesh* mesh); /* 1 for dim 1 */
int64_t cap_mesh_node_count(const cap_mesh* mesh);

/* Max-norm defect of the discrete identity that the curvature operator must
 * satisfy on the exact unit cap; the natural resolution-dependent tolerance
 * scale for every downstream check. */
cap_status cap_mesh_stencil_error(const cap_mesh* mesh, double* out);

/* Fills the provided arrays (each of length node_count) with per-node
 * coordinates. Any pointer may be NULL to skip that column. For dim 1,
 * `polar` receives the signed arc coordinate and `azimuth` zeros. `height`
 * is the vertical component of the outward normal minus cos(theta). */
cap_status cap_mesh_node_coordinates(const cap_mesh* mesh, double* polar, double* azimuth,
                                     double* height, int64_t len);

/* Quadrature of a nodal field against the round area element. */
cap_status cap_mesh_integrate(const cap_mesh* mesh, const double* values, int64_t len,
                              double* out);

cap_status cap_mesh_to_json(const cap_mesh* mesh, char** out_json);
cap_status cap_mesh_from_json(const char* json_text, cap_mesh** out);

/* ------------------------------------------------------------------ */
/* Gauges                                                              */

/* spec_json examples: {"kind":"power","p":3}
 *                     {"kind":"power_sum","terms":[[1.0,3],[1.0,4]]} */
cap_status cap_gauge_create(const char* spec_json, cap_gauge** out);
cap_status cap_gauge_power(double p, cap_gauge** out);
void cap_gauge_free(cap_gauge* gauge);

cap_status cap_gauge_value(const cap_gauge* gauge, double x, double* out);
cap_status cap_gauge_label(const cap_gauge* gauge, char** out);
cap_status cap_gauge_spec_json(const cap_gauge* gauge, char** out_json);

/* Admissible-class membership report for ambient dimension n = dim:
 * monotonicity, convexity, log-concavity and the three growth conditions,
 * each with its worst sampled margin. */
cap_status cap_gauge_membership_json(const cap_gauge* gauge, int dim, char** out_json);

/* ------------------------------------------------------------------ */
/* Bodies                                                              */

void cap_body_free(cap_body* body);

/* The cap of radius r (support r times the boundary-distance factor). */
cap_status cap_body_cap(const cap_mesh* mesh, double r, cap_body** out);

/* Wraps a raw nodal support function; only finiteness and length are
 * checked here, so follow with cap_body_validate_json to certify it. */
cap_status cap_body_from_support(const cap_mesh* mesh, const double* support, int64_t len,
                                 cap_body** out);

/* Unit cap perturbed multiplicatively: u = 1 + eps * g. Throws back
 * CAP_ERR_VALIDATION if eps pushes the body out of the convex class. */
cap_status cap_body_perturbed_cap(const cap_mesh* mesh, const double* g, int64_t len, double eps,
                                  cap_body** out);

/* Fills the named analytic perturbation mode, a smooth even field compatible
 * with the contact-angle condition: "cosJ" (J >= 1) varies radially, "azK"
 * (even K >= 2, 2-d meshes only) puts K waves around the axis. Modes are
 * scaled so cap_body_perturbed_cap stays convex for amplitudes up to about
 * one, independent of the mode index. */
cap_status cap_mesh_perturbation_mode(const cap_mesh* mesh, const char* mode, double* out,
                                      int64_t len);

/* Horizontal translate; offset has mesh dim entries. */
cap_status cap_body_translate(const cap_body* body, const double* offset, int dim,
                              cap_body** out);

cap_status cap_body_scale(const cap_body* body, double factor, cap_body** out);

/* Gauge combination with weights alpha, beta >= 0, not both zero. The
 * result is validated; CAP_ERR_VALIDATION reports the defect. */
cap_status cap_body_combine(const cap_gauge* gauge, double alpha, const cap_body* first,
                            double beta, const cap_body* second, cap_body** out);

int64_t cap_body_node_count(const cap_body* body);

/* New handle onto the mesh the body lives on (free separately). */
cap_status cap_body_mesh(const cap_body* body, cap_mesh** out);

/* Copies the nodal support function into the caller's buffer. */
cap_status cap_body_support(const cap_body* body, double* out, int64_t len);

/* Copies the capillary support u = h / ell. */
cap_status cap_body_capillary_support(const cap_body* body, double* out, int64_t len);

/* Validity report: positivity, convexity of the area matrix, the contact
 * angle boundary condition, and (optionally) evenness. options_json may be
 * NULL or {} for defaults, or set any of tol_psd, tol_robin, tol_even,
 * require_even; negative tolerances mean resolution-calibrated defaults.
 * out_pass gets 1/0; the detailed report always comes back on success. */
cap_status cap_body_validate_json(const cap_body* body, const char* options_json, int* out_pass,
                                  char** out_report_json);

cap_status cap_body_to_json(const cap_body* body, char** out_json);
cap_status cap_body_from_json(const char* json_text, cap_body** out);

/* ------------------------------------------------------------------ */
/* Functionals                                                         */

cap_status cap_volume(const cap_body* body, double* out);
cap_status cap_wetting_energy(const cap_body* body, double* out);

/* Density of a capillary measure on the mesh. options_json:
 *   {"kind":"surface"}
 *   {"kind":"lp","exponent":p}
 *   {"kind":"orlicz","gauge":{...gauge spec...}}
 *   {"kind":"cone-volume"}
 * Returns the versioned density document (nodal values plus mesh
 * descriptor) with the field "total" added. */
cap_status cap_density_json(const cap_body* body, const char* options_json, char** out_json);

/* First mixed volume V1(K, L): one support slot of L against the area of K. */
cap_status cap_v1(const cap_body* k, const cap_body* l, double* out);

/* V_phi(K, L), the gauge-weighted mixed volume. */
cap_status cap_orlicz_mixed_volume(const cap_gauge* gauge, const cap_body* k, const cap_body* l,
                                   double* out);

/* Nodal density values written as CSV (index, coordinates, value). */
cap_status cap_write_density_csv(const cap_mesh* mesh, const double* values, int64_t len,
                                 const char* path);

/* ------------------------------------------------------------------ */
/* Verification and solving                                            */

/* Runs one seeded inequality suite. options_json:
 *   {"suite":"orlicz-minkowski",                 required
 *    "mesh":{"dim":2,"theta":1.0471975512,"rings":48,"azimuths":96},
 *    "seed":7, "pairs":100,                      optional
 *    "check":{"slack_rel":1e-8,"eq_tol_rel":1e-9},
 *    "gauges":[{...gauge spec...}, ...]}         optional
 * out_pass gets 1 iff every check passed; the report lists each one. */
cap_status cap_verify_json(const char* options_json, int* out_pass, char** out_report_json);

/* Names of the available suites as a JSON array of strings. */
cap_status cap_suite_names_json(char** out_json);

/* Data admissibility check for a prescribed-measure problem. options_json
 * as for cap_solve_json (config ignored). */
cap_status cap_admissibility_json(const char* options_json, int* out_pass,
                                  char** out_report_json);

/* Prescribed-measure solve by Newton continuation. options_json:
 *   {"mesh":{...},                               required
 *    "phi":{...gauge spec...},                   required
 *    "f":{"type":"manufactured","radius":1.5}    one of the three
 *       |{"type":"equality-case"}
 *       |{"type":"values","values":[...]},
 *    "form":"unnormalized"|"normalized",         default unnormalized
 *    "config":{...solver overrides...},          optional
 *    "trace_csv":"path"}                         optional step log
 * On convergence returns CAP_OK; a completed but unconverged continuation
 * returns CAP_ERR_SOLVER_STALL. In both cases *out_report_json receives the
 * full report and *out_body (if non-NULL) the final body when one exists;
 * callers must check both. */
cap_status cap_solve_json(const char* options_json, char** out_report_json, cap_body** out_body);

#ifdef __cplusplus
}
#endif

#endif /* CAPILLARY_CAPILLARY_H */

#pragma once
// Data-parallel inner loops used by the solver and the emulator.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The variant is chosen once at runtime from CPUID and can be pinned
// with the MORPHOUQ_SIMD environment variable (scalar | avx2 | auto).

#include <cstddef>
#include <string_view>

namespace morphouq::simd {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Read-only view of one side of a line of cell faces (structure of arrays).
struct FaceSide {
  const double* h = nullptr;   // water depth
  const double* qn = nullptr;  // discharge normal to the face
  const double* qt = nullptr;  // discharge tangential to the face
  const double* z = nullptr;   // bed elevation
};

/// Per-face outputs of the well-balanced HLL flux.
///
/// `mom_left` / `mom_right` are the normal-momentum fluxes seen by the left and
/// right cell after removing the reconstructed hydrostatic pressure, so that a
/// cell update is `-(mom_left[i+1/2] - mom_right[i-1/2])` with no explicit
/// bed-slope source.
struct FaceFlux {
  double* mass = nullptr;
  double* mom_left = nullptr;
  double* mom_right = nullptr;
  double* tangential = nullptr;
};

struct HllConstants {
  double g = 9.81;
  double h_dry = 1e-6;
};

struct AdamStep {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double bias1 = 1.0;  // 1 - beta1^t
  double bias2 = 1.0;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y[b, o] = act(sum_i w[o, i] x[b, i] + bias[o]); w is out x in row-major.
  void (*dense_forward)(const double* w, const double* bias, const double* x, double* y,
                        std::size_t batch, std::size_t in, std::size_t out, bool relu);
  void (*adam_update)(double* w, double* m, double* v, const double* grad, std::size_t n,
                      const AdamStep& step);
  void (*hll_faces)(std::size_t n, FaceSide left, FaceSide right, FaceFlux out,
                    const HllConstants& c);
};

const KernelTable& scalar_kernels();

/// AVX2+FMA table, or nullptr when the build or the CPU lacks support.
const KernelTable* avx2_kernels();

/// Best ISA the running CPU supports.
Isa detect_isa();

/// Kernel table used by the library. Resolved on first call.
const KernelTable& active_kernels();

/// Overrides the runtime choice (tests and the --simd CLI flag). Falls back to
/// scalar if the requested ISA is unavailable; returns the ISA actually set.
Isa set_active_isa(Isa isa);

/// Scalar reference for a single face; also used for boundary faces.
void hll_face(double hL, double qnL, double qtL, double zL, double hR, double qnR, double qtR,
              double zR, const HllConstants& c, double& mass, double& mom_left,
              double& mom_right, double& tangential);

}  // namespace morphouq::simd

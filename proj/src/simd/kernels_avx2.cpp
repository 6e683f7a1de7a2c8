// Compiled with -mavx2 -mfma -ffp-contract=off. The HLL kernel uses no fused
// operations so it reproduces the scalar reference bit for bit; the dense
// kernels use FMA and differ from scalar only by rounding.

#include "morphouq/simd/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace morphouq::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s = std::fma(a[i], b[i], s);
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void dense_forward_avx2(const double* w, const double* bias, const double* x, double* y,
                        std::size_t batch, std::size_t in, std::size_t out, bool relu) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x + b * in;
    double* yb = y + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double s = dot_avx2(w + o * in, xb, in) + bias[o];
      yb[o] = relu ? (s > 0.0 ? s : 0.0) : s;
    }
  }
}

void adam_update_avx2(double* w, double* m, double* v, const double* grad, std::size_t n,
                      const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d bias1 = _mm256_set1_pd(s.bias1);
  const __m256d bias2 = _mm256_set1_pd(s.bias2);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(c1, g));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(c2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bias1);
    const __m256d vhat = _mm256_div_pd(vi, bias2);
    const __m256d step =
        _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), step));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    w[i] -= s.lr * (m[i] / s.bias1) / (std::sqrt(v[i] / s.bias2) + s.eps);
  }
}

inline __m256d select(__m256d mask, __m256d if_true, __m256d if_false) {
  return _mm256_blendv_pd(if_false, if_true, mask);
}

void hll_faces_avx2(std::size_t n, FaceSide l, FaceSide r, FaceFlux out, const HllConstants& c) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d g = _mm256_set1_pd(c.g);
  const __m256d half_g = _mm256_set1_pd(0.5 * c.g);
  const __m256d h_dry = _mm256_set1_pd(c.h_dry);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d hL = _mm256_loadu_pd(l.h + i);
    const __m256d hR = _mm256_loadu_pd(r.h + i);
    const __m256d zL = _mm256_loadu_pd(l.z + i);
    const __m256d zR = _mm256_loadu_pd(r.z + i);
    const __m256d qnL0 = _mm256_loadu_pd(l.qn + i);
    const __m256d qnR0 = _mm256_loadu_pd(r.qn + i);
    const __m256d qtL0 = _mm256_loadu_pd(l.qt + i);
    const __m256d qtR0 = _mm256_loadu_pd(r.qt + i);

    const __m256d zs = _mm256_max_pd(zR, zL);
    const __m256d hLs = _mm256_max_pd(_mm256_sub_pd(_mm256_add_pd(hL, zL), zs), zero);
    const __m256d hRs = _mm256_max_pd(_mm256_sub_pd(_mm256_add_pd(hR, zR), zs), zero);
    const __m256d wetL = _mm256_cmp_pd(hL, h_dry, _CMP_GT_OQ);
    const __m256d wetR = _mm256_cmp_pd(hR, h_dry, _CMP_GT_OQ);
    const __m256d uL = select(wetL, _mm256_div_pd(qnL0, hL), zero);
    const __m256d vL = select(wetL, _mm256_div_pd(qtL0, hL), zero);
    const __m256d uR = select(wetR, _mm256_div_pd(qnR0, hR), zero);
    const __m256d vR = select(wetR, _mm256_div_pd(qtR0, hR), zero);
    const __m256d pL = _mm256_mul_pd(_mm256_mul_pd(half_g, hLs), hLs);
    const __m256d pR = _mm256_mul_pd(_mm256_mul_pd(half_g, hRs), hRs);

    const __m256d dryL = _mm256_cmp_pd(hLs, h_dry, _CMP_LE_OQ);
    const __m256d dryR = _mm256_cmp_pd(hRs, h_dry, _CMP_LE_OQ);
    const __m256d both_dry = _mm256_and_pd(dryL, dryR);

    const __m256d qL = _mm256_mul_pd(hLs, uL);
    const __m256d qR = _mm256_mul_pd(hRs, uR);
    const __m256d cL = _mm256_sqrt_pd(_mm256_mul_pd(g, hLs));
    const __m256d cR = _mm256_sqrt_pd(_mm256_mul_pd(g, hRs));

    __m256d sL = _mm256_min_pd(_mm256_sub_pd(uR, cR), _mm256_sub_pd(uL, cL));
    __m256d sR = _mm256_max_pd(_mm256_add_pd(uR, cR), _mm256_add_pd(uL, cL));
    sL = select(dryR, _mm256_sub_pd(uL, cL), sL);
    sR = select(dryR, _mm256_add_pd(uL, _mm256_mul_pd(two, cL)), sR);
    sL = select(dryL, _mm256_sub_pd(uR, _mm256_mul_pd(two, cR)), sL);
    sR = select(dryL, _mm256_add_pd(uR, cR), sR);

    const __m256d fmL = qL;
    const __m256d fmR = qR;
    const __m256d fnL = _mm256_add_pd(_mm256_mul_pd(qL, uL), pL);
    const __m256d fnR = _mm256_add_pd(_mm256_mul_pd(qR, uR), pR);
    const __m256d ftL = _mm256_mul_pd(qL, vL);
    const __m256d ftR = _mm256_mul_pd(qR, vR);

    const __m256d inv = _mm256_div_pd(one, _mm256_sub_pd(sR, sL));
    const __m256d a = _mm256_mul_pd(_mm256_mul_pd(half, _mm256_add_pd(sR, sL)), inv);
    const __m256d b = _mm256_mul_pd(_mm256_mul_pd(sL, sR), inv);

    auto central = [&](__m256d FL, __m256d FR, __m256d UL, __m256d UR) {
      const __m256d avg = _mm256_mul_pd(half, _mm256_add_pd(FL, FR));
      const __m256d t1 = _mm256_mul_pd(a, _mm256_sub_pd(FR, FL));
      const __m256d t2 = _mm256_mul_pd(b, _mm256_sub_pd(UR, UL));
      return _mm256_add_pd(_mm256_sub_pd(avg, t1), t2);
    };
    __m256d fm = central(fmL, fmR, hLs, hRs);
    __m256d fn = central(fnL, fnR, qL, qR);
    __m256d ft = central(ftL, ftR, _mm256_mul_pd(hLs, vL), _mm256_mul_pd(hRs, vR));

    const __m256d right_only = _mm256_cmp_pd(sR, zero, _CMP_LE_OQ);
    fm = select(right_only, fmR, fm);
    fn = select(right_only, fnR, fn);
    ft = select(right_only, ftR, ft);
    const __m256d left_only = _mm256_cmp_pd(sL, zero, _CMP_GE_OQ);
    fm = select(left_only, fmL, fm);
    fn = select(left_only, fnL, fn);
    ft = select(left_only, ftL, ft);

    fm = select(both_dry, zero, fm);
    fn = select(both_dry, zero, fn);
    ft = select(both_dry, zero, ft);

    _mm256_storeu_pd(out.mass + i, fm);
    _mm256_storeu_pd(out.tangential + i, ft);
    _mm256_storeu_pd(out.mom_left + i, _mm256_sub_pd(fn, pL));
    _mm256_storeu_pd(out.mom_right + i, _mm256_sub_pd(fn, pR));
  }
  for (; i < n; ++i) {
    hll_face(l.h[i], l.qn[i], l.qt[i], l.z[i], r.h[i], r.qn[i], r.qt[i], r.z[i], c,
             out.mass[i], out.mom_left[i], out.mom_right[i], out.tangential[i]);
  }
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Isa::Avx2,         dot_avx2,         axpy_avx2,
                                 dense_forward_avx2, adam_update_avx2, hll_faces_avx2};
  if (detect_isa() != Isa::Avx2) return nullptr;
  return &table;
}

}  // namespace morphouq::simd

#else

namespace morphouq::simd {
const KernelTable* avx2_kernels() { return nullptr; }
}  // namespace morphouq::simd

#endif

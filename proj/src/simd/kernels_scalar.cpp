#include "morphouq/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace morphouq::simd {

void hll_face(double hL, double qnL, double qtL, double zL, double hR, double qnR, double qtR,
              double zR, const HllConstants& c, double& mass, double& mom_left,
              double& mom_right, double& tangential) {
  const double half_g = 0.5 * c.g;
  // Hydrostatic reconstruction at the face.
  const double zs = std::max(zL, zR);
  const double hLs = std::max(0.0, hL + zL - zs);
  const double hRs = std::max(0.0, hR + zR - zs);
  const double uL = hL > c.h_dry ? qnL / hL : 0.0;
  const double vL = hL > c.h_dry ? qtL / hL : 0.0;
  const double uR = hR > c.h_dry ? qnR / hR : 0.0;
  const double vR = hR > c.h_dry ? qtR / hR : 0.0;
  const double pL = (half_g * hLs) * hLs;
  const double pR = (half_g * hRs) * hRs;

  const bool dryL = hLs <= c.h_dry;
  const bool dryR = hRs <= c.h_dry;
  if (dryL && dryR) {
    mass = 0.0;
    tangential = 0.0;
    mom_left = -pL;
    mom_right = -pR;
    return;
  }

  const double qL = hLs * uL;
  const double qR = hRs * uR;
  const double cL = std::sqrt(c.g * hLs);
  const double cR = std::sqrt(c.g * hRs);
  double sL;
  double sR;
  if (dryL) {
    sL = uR - 2.0 * cR;
    sR = uR + cR;
  } else if (dryR) {
    sL = uL - cL;
    sR = uL + 2.0 * cL;
  } else {
    sL = std::min(uL - cL, uR - cR);
    sR = std::max(uL + cL, uR + cR);
  }

  const double fmL = qL;
  const double fmR = qR;
  const double fnL = qL * uL + pL;
  const double fnR = qR * uR + pR;
  const double ftL = qL * vL;
  const double ftR = qR * vR;

  double fm;
  double fn;
  double ft;
  if (sL >= 0.0) {
    fm = fmL;
    fn = fnL;
    ft = ftL;
  } else if (sR <= 0.0) {
    fm = fmR;
    fn = fnR;
    ft = ftR;
  } else {
    const double inv = 1.0 / (sR - sL);
    const double a = 0.5 * (sR + sL) * inv;
    const double b = sL * sR * inv;
    fm = 0.5 * (fmL + fmR) - a * (fmR - fmL) + b * (hRs - hLs);
    fn = 0.5 * (fnL + fnR) - a * (fnR - fnL) + b * (qR - qL);
    ft = 0.5 * (ftL + ftR) - a * (ftR - ftL) + b * (hRs * vR - hLs * vL);
  }
  mass = fm;
  tangential = ft;
  mom_left = fn - pL;
  mom_right = fn - pR;
}

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void dense_forward_scalar(const double* w, const double* bias, const double* x, double* y,
                          std::size_t batch, std::size_t in, std::size_t out, bool relu) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = x + b * in;
    double* yb = y + b * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double s = dot_scalar(w + o * in, xb, in) + bias[o];
      yb[o] = relu ? (s > 0.0 ? s : 0.0) : s;
    }
  }
}

void adam_update_scalar(double* w, double* m, double* v, const double* grad, std::size_t n,
                        const AdamStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grad[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = m[i] / s.bias1;
    const double vhat = v[i] / s.bias2;
    w[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void hll_faces_scalar(std::size_t n, FaceSide l, FaceSide r, FaceFlux out,
                      const HllConstants& c) {
  for (std::size_t i = 0; i < n; ++i) {
    hll_face(l.h[i], l.qn[i], l.qt[i], l.z[i], r.h[i], r.qn[i], r.qt[i], r.z[i], c,
             out.mass[i], out.mom_left[i], out.mom_right[i], out.tangential[i]);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,         dot_scalar,         axpy_scalar,
                                 dense_forward_scalar, adam_update_scalar, hll_faces_scalar};
  return table;
}

}  // namespace morphouq::simd

// AVX2 backend. This translation unit is compiled with -mavx2 -mfma; nothing
// here runs unless dispatch confirmed CPU support first.
//
// scale/axpy/lif_voltage_step mirror the scalar backend operation for
// operation (no FMA, per-lane std::exp) and are bitwise identical to it.
// matvec/matvec_t_acc/outer_acc/adam_step use FMA and differ from scalar by
// normal round-off; the equivalence tests bound that difference.

#include "eventline/kernels.hpp"

#include <stdexcept>

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace eventline::kernels {
namespace {

void scale_inplace(double* x, size_t n, double factor) {
    const __m256d f = _mm256_set1_pd(factor);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), f));
    }
    for (; i < n; ++i) x[i] *= factor;
}

void axpy(double* y, const double* x, double a, size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(av, _mm256_loadu_pd(x + i)); // no FMA: match scalar
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void lif_voltage_step(double* v, const double* ge, const double* gi, size_t n,
                      const LifStepConsts& c) {
    const __m256d inv_tau = _mm256_set1_pd(c.inv_tau_m);
    const __m256d inv_cm = _mm256_set1_pd(c.inv_cm);
    const __m256d vrest_tau = _mm256_set1_pd(c.vrest_over_tau);
    const __m256d e_exc = _mm256_set1_pd(c.e_exc);
    const __m256d e_inh = _mm256_set1_pd(c.e_inh);
    const __m256d dt = _mm256_set1_pd(c.dt_ms);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vge = _mm256_loadu_pd(ge + i);
        const __m256d vgi = _mm256_loadu_pd(gi + i);
        const __m256d gsum = _mm256_add_pd(vge, vgi);
        const __m256d b = _mm256_add_pd(inv_tau, _mm256_mul_pd(gsum, inv_cm));
        const __m256d drive =
            _mm256_add_pd(_mm256_mul_pd(vge, e_exc), _mm256_mul_pd(vgi, e_inh));
        const __m256d a = _mm256_add_pd(vrest_tau, _mm256_mul_pd(drive, inv_cm));
        const __m256d vinf = _mm256_div_pd(a, b);
        alignas(32) double bdt[4];
        _mm256_store_pd(bdt, _mm256_mul_pd(b, dt));
        bdt[0] = std::exp(-bdt[0]);
        bdt[1] = std::exp(-bdt[1]);
        bdt[2] = std::exp(-bdt[2]);
        bdt[3] = std::exp(-bdt[3]);
        const __m256d decay = _mm256_load_pd(bdt);
        const __m256d vv = _mm256_loadu_pd(v + i);
        const __m256d out =
            _mm256_add_pd(vinf, _mm256_mul_pd(_mm256_sub_pd(vv, vinf), decay));
        _mm256_storeu_pd(v + i, out);
    }
    for (; i < n; ++i) {
        const double gsum = ge[i] + gi[i];
        const double b = c.inv_tau_m + gsum * c.inv_cm;
        const double a = c.vrest_over_tau + (ge[i] * c.e_exc + gi[i] * c.e_inh) * c.inv_cm;
        const double vinf = a / b;
        const double decay = std::exp(-(b * c.dt_ms));
        v[i] = vinf + (v[i] - vinf) * decay;
    }
}

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void matvec(double* y, const double* w, const double* x, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        __m256d acc = _mm256_setzero_pd();
        size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(wr + i), _mm256_loadu_pd(x + i), acc);
        }
        double s = hsum(acc);
        for (; i < cols; ++i) s += wr[i] * x[i];
        y[r] = s;
    }
}

void matvec_t_acc(double* y, const double* w, const double* g, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const __m256d gr = _mm256_set1_pd(g[r]);
        size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            const __m256d acc =
                _mm256_fmadd_pd(_mm256_loadu_pd(wr + i), gr, _mm256_loadu_pd(y + i));
            _mm256_storeu_pd(y + i, acc);
        }
        for (; i < cols; ++i) y[i] += wr[i] * g[r];
    }
}

void outer_acc(double* gw, const double* g, const double* x, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        double* row = gw + r * cols;
        const __m256d gr = _mm256_set1_pd(g[r]);
        size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            const __m256d acc =
                _mm256_fmadd_pd(gr, _mm256_loadu_pd(x + i), _mm256_loadu_pd(row + i));
            _mm256_storeu_pd(row + i, acc);
        }
        for (; i < cols; ++i) row[i] += g[r] * x[i];
    }
}

void adam_step(double* w, double* m, double* v, const double* g, size_t n, const AdamConsts& c) {
    const __m256d b1 = _mm256_set1_pd(c.beta1);
    const __m256d omb1 = _mm256_set1_pd(1.0 - c.beta1);
    const __m256d b2 = _mm256_set1_pd(c.beta2);
    const __m256d omb2 = _mm256_set1_pd(1.0 - c.beta2);
    const __m256d bias1 = _mm256_set1_pd(c.bias1);
    const __m256d bias2 = _mm256_set1_pd(c.bias2);
    const __m256d lr = _mm256_set1_pd(c.lr);
    const __m256d eps = _mm256_set1_pd(c.eps);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_loadu_pd(m + i);
        __m256d vv = _mm256_loadu_pd(v + i);
        mv = _mm256_fmadd_pd(b1, mv, _mm256_mul_pd(omb1, gv));
        vv = _mm256_fmadd_pd(b2, vv, _mm256_mul_pd(omb2, _mm256_mul_pd(gv, gv)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mv, bias1);
        const __m256d vhat = _mm256_mul_pd(vv, bias2);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), eps);
        const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lr, mhat), denom);
        _mm256_storeu_pd(w + i, _mm256_sub_pd(_mm256_loadu_pd(w + i), upd));
    }
    for (; i < n; ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * (g[i] * g[i]);
        const double mhat = m[i] * c.bias1;
        const double vhat = v[i] * c.bias2;
        w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

} // namespace

bool avx2_supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Backend& avx2_backend() {
    if (!avx2_supported()) throw std::runtime_error("AVX2 backend requested on non-AVX2 CPU");
    static const Backend b{"avx2",       scale_inplace, axpy,      lif_voltage_step,
                           matvec,       matvec_t_acc,  outer_acc, adam_step};
    return b;
}

} // namespace eventline::kernels

#else // non-x86 or AVX2 not available to the compiler

namespace eventline::kernels {

bool avx2_supported() { return false; }

const Backend& avx2_backend() {
    throw std::runtime_error("AVX2 backend not compiled in on this platform");
}

} // namespace eventline::kernels

#endif

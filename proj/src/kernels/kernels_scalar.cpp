#include <cmath>
#include <cstddef>

#include "eventline/kernels.hpp"

namespace eventline::kernels {
namespace {

void scale_inplace(double* x, size_t n, double factor) {
    for (size_t i = 0; i < n; ++i) x[i] *= factor;
}

void axpy(double* y, const double* x, double a, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void lif_voltage_step(double* v, const double* ge, const double* gi, size_t n,
                      const LifStepConsts& c) {
    for (size_t i = 0; i < n; ++i) {
        const double gsum = ge[i] + gi[i];
        const double b = c.inv_tau_m + gsum * c.inv_cm;
        const double a = c.vrest_over_tau + (ge[i] * c.e_exc + gi[i] * c.e_inh) * c.inv_cm;
        const double vinf = a / b;
        const double decay = std::exp(-(b * c.dt_ms));
        v[i] = vinf + (v[i] - vinf) * decay;
    }
}

void matvec(double* y, const double* w, const double* x, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        double acc = 0.0;
        for (size_t cidx = 0; cidx < cols; ++cidx) acc += wr[cidx] * x[cidx];
        y[r] = acc;
    }
}

void matvec_t_acc(double* y, const double* w, const double* g, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double gr = g[r];
        for (size_t cidx = 0; cidx < cols; ++cidx) y[cidx] += wr[cidx] * gr;
    }
}

void outer_acc(double* gw, const double* g, const double* x, size_t rows, size_t cols) {
    for (size_t r = 0; r < rows; ++r) {
        double* row = gw + r * cols;
        const double gr = g[r];
        for (size_t cidx = 0; cidx < cols; ++cidx) row[cidx] += gr * x[cidx];
    }
}

void adam_step(double* w, double* m, double* v, const double* g, size_t n, const AdamConsts& c) {
    for (size_t i = 0; i < n; ++i) {
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * (g[i] * g[i]);
        const double mhat = m[i] * c.bias1;
        const double vhat = v[i] * c.bias2;
        w[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
}

} // namespace

const Backend& scalar_backend() {
    static const Backend b{"scalar",     scale_inplace, axpy,     lif_voltage_step,
                           matvec,       matvec_t_acc,  outer_acc, adam_step};
    return b;
}

} // namespace eventline::kernels

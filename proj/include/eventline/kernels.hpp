#pragma once

#include <cstddef>
#include <string_view>

namespace eventline::kernels {

// Precomputed constants for one LIF voltage step (conductance-based neuron,
// exponential-Euler update). All time constants in ms, conductances in uS,
// capacitance in nF, voltages in mV.
struct LifStepConsts {
    double inv_tau_m;     // 1 / tau_m
    double inv_cm;        // 1 / c_m
    double vrest_over_tau; // v_rest / tau_m
    double e_exc;
    double e_inh;
    double dt_ms;
};

struct AdamConsts {
    double lr;
    double beta1;
    double beta2;
    double eps;
    double bias1; // 1 / (1 - beta1^t)
    double bias2; // 1 / (1 - beta2^t)
};

// One backend = one set of function pointers. The scalar backend is the
// reference; the AVX2 backend must agree bitwise for scale/axpy/lif_voltage
// (no FMA, per-lane exp) and within round-off for the FMA-based routines.
struct Backend {
    const char* name;

    // x[i] *= factor
    void (*scale_inplace)(double* x, size_t n, double factor);
    // y[i] += a * x[i]
    void (*axpy)(double* y, const double* x, double a, size_t n);
    // v[i] <- vinf + (v[i] - vinf) * exp(-B dt), conductance-based LIF
    void (*lif_voltage_step)(double* v, const double* ge, const double* gi, size_t n,
                             const LifStepConsts& c);
    // y = W x, W row-major [rows x cols]
    void (*matvec)(double* y, const double* w, const double* x, size_t rows, size_t cols);
    // y += W^T g, W row-major [rows x cols], g length rows, y length cols
    void (*matvec_t_acc)(double* y, const double* w, const double* g, size_t rows, size_t cols);
    // gw += g x^T, gw row-major [rows x cols]
    void (*outer_acc)(double* gw, const double* g, const double* x, size_t rows, size_t cols);
    // Adam update over one parameter array
    void (*adam_step)(double* w, double* m, double* v, const double* g, size_t n,
                      const AdamConsts& c);
};

const Backend& scalar_backend();
bool avx2_supported();           // CPU capability (false when not compiled in)
const Backend& avx2_backend();   // throws if unsupported

// Active backend. Resolution order: force_backend() call, EVENTLINE_SIMD env
// var ("scalar" / "avx2" / "auto"), then CPU detection.
const Backend& active();
void force_backend(std::string_view name); // "scalar" | "avx2" | "auto"

} // namespace eventline::kernels

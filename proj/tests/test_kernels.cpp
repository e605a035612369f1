#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "eventline/kernels.hpp"

using namespace eventline;
using kernels::Backend;

namespace {

std::vector<double> random_vec(std::mt19937& rng, size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// ulp-scaled comparison for the FMA-based routines
void check_close(const std::vector<double>& a, const std::vector<double>& b, double rel) {
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
        CHECK(std::abs(a[i] - b[i]) <= rel * scale);
    }
}

} // namespace

TEST_CASE("scalar kernels compute what they advertise") {
    const Backend& k = kernels::scalar_backend();
    std::mt19937 rng(7);

    auto x = random_vec(rng, 17, -2, 2);
    auto x0 = x;
    k.scale_inplace(x.data(), x.size(), 0.25);
    for (size_t i = 0; i < x.size(); ++i) CHECK(x[i] == x0[i] * 0.25);

    auto y = random_vec(rng, 17, -1, 1);
    auto y0 = y;
    k.axpy(y.data(), x.data(), 3.0, y.size());
    for (size_t i = 0; i < y.size(); ++i) CHECK(y[i] == y0[i] + 3.0 * x[i]);

    const size_t rows = 5, cols = 13;
    auto w = random_vec(rng, rows * cols, -1, 1);
    auto v = random_vec(rng, cols, -1, 1);
    std::vector<double> out(rows);
    k.matvec(out.data(), w.data(), v.data(), rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        double want = 0;
        for (size_t c = 0; c < cols; ++c) want += w[r * cols + c] * v[c];
        CHECK(out[r] == doctest::Approx(want).epsilon(1e-12));
    }

    auto g = random_vec(rng, rows, -1, 1);
    std::vector<double> acc(cols, 0.5);
    k.matvec_t_acc(acc.data(), w.data(), g.data(), rows, cols);
    for (size_t c = 0; c < cols; ++c) {
        double want = 0.5;
        for (size_t r = 0; r < rows; ++r) want += w[r * cols + c] * g[r];
        CHECK(acc[c] == doctest::Approx(want).epsilon(1e-12));
    }

    std::vector<double> gw(rows * cols, 1.0);
    k.outer_acc(gw.data(), g.data(), v.data(), rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            CHECK(gw[r * cols + c] == doctest::Approx(1.0 + g[r] * v[c]).epsilon(1e-12));
        }
    }
}

TEST_CASE("lif voltage step matches the closed-form update") {
    const Backend& k = kernels::scalar_backend();
    kernels::LifStepConsts c{1.0 / 2.5, 1.0 / 1.0, -60.0 / 2.5, 0.0, -70.0, 0.1};
    std::mt19937 rng(11);
    auto v = random_vec(rng, 9, -75, -25);
    auto ge = random_vec(rng, 9, 0, 2);
    auto gi = random_vec(rng, 9, 0, 2);
    auto v0 = v;
    k.lif_voltage_step(v.data(), ge.data(), gi.data(), v.size(), c);
    for (size_t i = 0; i < v.size(); ++i) {
        const double b = c.inv_tau_m + (ge[i] + gi[i]) * c.inv_cm;
        const double a = c.vrest_over_tau + (ge[i] * c.e_exc + gi[i] * c.e_inh) * c.inv_cm;
        const double vinf = a / b;
        const double want = vinf + (v0[i] - vinf) * std::exp(-b * c.dt_ms);
        CHECK(v[i] == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("adam step follows the reference recurrence") {
    const Backend& k = kernels::scalar_backend();
    kernels::AdamConsts c{0.03, 0.9, 0.999, 1e-8, 1.0 / (1.0 - 0.9), 1.0 / (1.0 - 0.999)};
    std::mt19937 rng(13);
    auto w = random_vec(rng, 6, -1, 1);
    auto g = random_vec(rng, 6, -1, 1);
    std::vector<double> m(6, 0.0), v(6, 0.0);
    auto w0 = w;
    k.adam_step(w.data(), m.data(), v.data(), g.data(), 6, c);
    for (size_t i = 0; i < 6; ++i) {
        const double mi = 0.1 * g[i];
        const double vi = 0.001 * g[i] * g[i];
        const double want = w0[i] - 0.03 * (mi * c.bias1) / (std::sqrt(vi * c.bias2) + 1e-8);
        CHECK(m[i] == doctest::Approx(mi).epsilon(1e-14));
        CHECK(v[i] == doctest::Approx(vi).epsilon(1e-14));
        CHECK(w[i] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("avx2 backend agrees with scalar across sizes and alignments") {
    if (!kernels::avx2_supported()) {
        MESSAGE("AVX2 not available on this host; skipping");
        return;
    }
    const Backend& s = kernels::scalar_backend();
    const Backend& a = kernels::avx2_backend();
    std::mt19937 rng(23);

    // sizes straddle the vector width to exercise remainder handling
    for (size_t n : {size_t(1), size_t(3), size_t(4), size_t(7), size_t(8), size_t(129)}) {
        auto x = random_vec(rng, n, -3, 3);
        auto xs = x, xa = x;
        s.scale_inplace(xs.data(), n, 0.9375);
        a.scale_inplace(xa.data(), n, 0.9375);
        CHECK(bitwise_equal(xs, xa));

        auto y = random_vec(rng, n, -3, 3);
        auto ys = y, ya = y;
        s.axpy(ys.data(), x.data(), -1.75, n);
        a.axpy(ya.data(), x.data(), -1.75, n);
        CHECK(bitwise_equal(ys, ya));

        kernels::LifStepConsts c{1.0 / 2.5, 1.0, -60.0 / 2.5, 0.0, -70.0, 0.1};
        auto v = random_vec(rng, n, -70, -20);
        auto ge = random_vec(rng, n, 0, 1.5);
        auto gi = random_vec(rng, n, 0, 1.5);
        auto vs = v, va = v;
        s.lif_voltage_step(vs.data(), ge.data(), gi.data(), n, c);
        a.lif_voltage_step(va.data(), ge.data(), gi.data(), n, c);
        CHECK(bitwise_equal(vs, va));
    }

    for (auto [rows, cols] : {std::pair<size_t, size_t>{1, 1},
                              {3, 5},
                              {4, 8},
                              {7, 33},
                              {16, 128}}) {
        auto w = random_vec(rng, rows * cols, -1, 1);
        auto x = random_vec(rng, cols, -1, 1);
        auto g = random_vec(rng, rows, -1, 1);

        std::vector<double> ys(rows), ya(rows);
        s.matvec(ys.data(), w.data(), x.data(), rows, cols);
        a.matvec(ya.data(), w.data(), x.data(), rows, cols);
        check_close(ys, ya, 1e-13);

        std::vector<double> ts(cols, 0.25), ta(cols, 0.25);
        s.matvec_t_acc(ts.data(), w.data(), g.data(), rows, cols);
        a.matvec_t_acc(ta.data(), w.data(), g.data(), rows, cols);
        check_close(ts, ta, 1e-13);

        std::vector<double> os(rows * cols, 0.125), oa(rows * cols, 0.125);
        s.outer_acc(os.data(), g.data(), x.data(), rows, cols);
        a.outer_acc(oa.data(), g.data(), x.data(), rows, cols);
        check_close(os, oa, 1e-13);

        kernels::AdamConsts c{0.03, 0.9, 0.999, 1e-8, 1.0 / (1.0 - 0.9), 1.0 / (1.0 - 0.999)};
        auto ws = w, wa = w;
        std::vector<double> ms(rows * cols, 0), vs2(rows * cols, 0);
        auto ma = ms, va2 = vs2;
        auto grad = random_vec(rng, rows * cols, -1, 1);
        s.adam_step(ws.data(), ms.data(), vs2.data(), grad.data(), rows * cols, c);
        a.adam_step(wa.data(), ma.data(), va2.data(), grad.data(), rows * cols, c);
        check_close(ws, wa, 1e-13);
        check_close(ms, ma, 1e-13);
        check_close(vs2, va2, 1e-13);
    }
}

TEST_CASE("backend selection honours force_backend") {
    kernels::force_backend("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    if (kernels::avx2_supported()) {
        kernels::force_backend("avx2");
        CHECK(std::string(kernels::active().name) == "avx2");
    } else {
        CHECK_THROWS_AS(kernels::avx2_backend(), std::exception);
    }
    kernels::force_backend("auto");
    CHECK_THROWS_AS(kernels::force_backend("sse9"), std::exception);
    kernels::force_backend("auto");
}

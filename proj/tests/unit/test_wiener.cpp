#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "snswf/errors.hpp"
#include "snswf/wiener.hpp"

using namespace snswf;

namespace {

using Series = std::vector<double>;

Series add(Series a, const Series& b, double gain = 1.0) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += gain * b[i];
    return a;
}

Series scaled(Series a, double gain) {
    for (auto& v : a) v *= gain;
    return a;
}

Series delayed(const Series& x, std::size_t by) {
    Series y(x.size(), 0.0);
    for (std::size_t i = by; i < x.size(); ++i) y[i] = x[i - by];
    return y;
}

double norm(const Series& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

Eigen::VectorXd stacked(const WienerDesign& d) {
    const auto n = d.filters.front().taps.size();
    Eigen::VectorXd h(static_cast<Eigen::Index>(d.filters.size() * n));
    for (std::size_t i = 0; i < d.filters.size(); ++i)
        for (std::size_t k = 0; k < n; ++k) h(static_cast<Eigen::Index>(i * n + k)) = d.filters[i].taps[k];
    return h;
}

WienerDesign design_for(const std::vector<Series>& refs, const Series& d, std::size_t taps, double lambda = 0.0) {
    return solve_wiener(estimate_correlations(refs, d, taps), lambda);
}

} // namespace

TEST_CASE("correlate") {
    SUBCASE("impulse") {
        Series x(8, 0.0);
        x[0] = 1.0;
        // demeaning spreads -1/8 everywhere; the estimator still follows the definition
        const auto r = correlate(x, x, 7);
        const auto expect = oracle::correlate(x, x, 7);
        for (std::size_t k = 0; k < 8; ++k) CHECK(r[k] == doctest::Approx(expect[k]).epsilon(1e-14));
    }
    SUBCASE("zero-mean impulse pair") {
        // +1 at n=0 and -1 at n=4 is already zero mean, so r(0) = 2/8 and r(4) = -1/8
        Series x(8, 0.0);
        x[0] = 1.0;
        x[4] = -1.0;
        const auto r = correlate(x, x, 7);
        CHECK(r[0] == doctest::Approx(0.25));
        CHECK(r[4] == doctest::Approx(-0.125));
        for (std::size_t k : {1u, 2u, 3u, 5u, 6u, 7u}) CHECK(std::abs(r[k]) <= 1e-15);
    }
    SUBCASE("sinusoid closed form") {
        const double fs = 20.0, f = 0.5, amp = 2.0;
        const std::size_t t = 4000;
        const auto x = oracle::sinusoid(t, f, fs, amp);
        const auto r = correlate(x, x, 40);
        // the closed form drops a term oscillating at 2w, bounded by amp^2 / (2 T sin w)
        const double w = 2 * std::numbers::pi * f / fs;
        const double bound = amp * amp / (2.0 * static_cast<double>(t) * std::sin(w));
        for (std::size_t k = 0; k <= 40; k += 5) {
            const double expect = amp * amp / 2.0 * std::cos(2 * std::numbers::pi * f * static_cast<double>(k) / fs) *
                                  (1.0 - static_cast<double>(k) / static_cast<double>(t));
            CHECK(std::abs(r[k] - expect) <= bound);
        }
    }
    SUBCASE("matches the double loop") {
        const auto x = oracle::gaussian(300, 1), y = add(oracle::gaussian(300, 2), x, 0.5);
        const auto r = correlate(x, y, 25);
        const auto e = oracle::correlate(x, y, 25);
        for (std::size_t k = 0; k <= 25; ++k) CHECK(std::abs(r[k] - e[k]) <= 1e-12);
    }
    SUBCASE("errors") {
        const auto x = oracle::gaussian(10, 1);
        CHECK_THROWS_AS(correlate(x, x, 10), ArgumentError);
        CHECK_THROWS_AS(correlate(x, oracle::gaussian(9, 1), 2), ArgumentError);
    }
}

TEST_CASE("estimated correlation sets") {
    const std::vector<Series> refs{oracle::gaussian(400, 3), add(oracle::gaussian(400, 4), oracle::gaussian(400, 3))};
    const auto d = oracle::gaussian(400, 5);
    const auto c = estimate_correlations(refs, d, 6);
    CHECK(c.n_refs() == 2);
    CHECK(c.taps() == 6);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::ptrdiff_t k = -5; k <= 5; ++k) {
            CHECK(c.autocorr(i, i, 0) >= std::abs(c.autocorr(i, i, k)));
            for (std::size_t j = 0; j < 2; ++j) CHECK(c.autocorr(i, j, k) == c.autocorr(j, i, -k));
        }
        const auto cross = oracle::correlate(d, refs[i], 5);
        for (std::size_t k = 0; k < 6; ++k) CHECK(c.crosscorr(i, k) == doctest::Approx(cross[k]).epsilon(1e-12));
    }
    const auto r01 = oracle::correlate(refs[0], refs[1], 5);
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(c.autocorr(0, 1, static_cast<std::ptrdiff_t>(k)) == doctest::Approx(r01[k]).epsilon(1e-12));
    CHECK(c.max_zero_lag_power() == std::max(c.autocorr(0, 0, 0), c.autocorr(1, 1, 0)));
    CHECK_THROWS_AS(c.autocorr(0, 0, 6), ArgumentError);
    CHECK_THROWS_AS(c.crosscorr(2, 0), ArgumentError);
    CHECK_THROWS_AS(CorrelationSet(0, 3), ArgumentError);
    CHECK_THROWS_AS(CorrelationSet(1, 0), ArgumentError);
    CHECK_THROWS_AS(estimate_correlations(refs, oracle::gaussian(399, 1), 4), ArgumentError);
}

TEST_CASE("solve_wiener") {
    SUBCASE("identifies a pure delay") {
        const auto x = oracle::gaussian(10000, 6);
        const auto w = design_for({x}, delayed(x, 3), 8);
        const auto& h = w.filters.front().taps;
        REQUIRE(h.size() == 8);
        for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(h[k] - (k == 3 ? 1.0 : 0.0)) <= 0.05);
    }
    SUBCASE("d equal to x gives a unit impulse") {
        const auto x = oracle::gaussian(500, 7);
        for (std::size_t n : {1u, 5u, 12u}) {
            const auto h = design_for({x}, x, n).filters.front().taps;
            for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(h[k] - (k == 0 ? 1.0 : 0.0)) <= 1e-8);
        }
    }
    SUBCASE("matches the zero-padded least-squares oracle") {
        const std::vector<Series> refs{oracle::gaussian(256, 8), add(oracle::gaussian(256, 9), oracle::gaussian(256, 8), 0.4)};
        const auto d = add(add(delayed(refs[0], 1), refs[1], -0.7), oracle::gaussian(256, 10, 0.3));
        const auto w = design_for(refs, d, 4);
        const Eigen::VectorXd expect = oracle::zero_padded_least_squares(refs, d, 4);
        CHECK((stacked(w) - expect).norm() <= 1e-6 * expect.norm());
        CHECK(w.condition_estimate >= 1.0);
        CHECK(w.regularization == 0.0);
    }
    SUBCASE("regularisation shrinks the solution monotonically") {
        const std::vector<Series> refs{oracle::gaussian(300, 11), oracle::gaussian(300, 12)};
        const auto d = add(refs[0], oracle::sinusoid(300, 0.1, 1.0), 1.0);
        const auto corr = estimate_correlations(refs, d, 6);
        double previous = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 1e-4, 1e-2, 1e-1, 1.0, 10.0, 1e3}) {
            const double n = stacked(solve_wiener(corr, lambda)).norm();
            CHECK(n <= previous * (1.0 + 1e-12));
            previous = n;
        }
    }
    SUBCASE("matches the regularised normal equations") {
        const std::vector<Series> refs{oracle::gaussian(200, 13)};
        const auto d = oracle::gaussian(200, 14);
        const auto corr = estimate_correlations(refs, d, 5);
        const auto ne = assemble_normal_equations(corr);
        const Eigen::MatrixXd a = ne.matrix + 0.3 * Eigen::MatrixXd::Identity(5, 5);
        const Eigen::VectorXd expect = a.colPivHouseholderQr().solve(ne.rhs);
        CHECK((stacked(solve_wiener(corr, 0.3)) - expect).norm() <= 1e-10 * expect.norm());
    }
    SUBCASE("errors") {
        const auto x = oracle::gaussian(100, 15);
        const auto corr = estimate_correlations(std::vector<Series>{x}, x, 3);
        CHECK_THROWS_AS(solve_wiener(corr, -1.0), ArgumentError);
        CHECK_THROWS_AS(solve_wiener(corr, std::nan("")), ArgumentError);
        const CorrelationSet zero(2, 3);
        CHECK_THROWS_AS(solve_wiener(zero, 0.0), SingularSystemError);
        CHECK_NOTHROW(solve_wiener(zero, 1e-3));
    }
}

TEST_CASE("apply_fir") {
    const auto x = oracle::gaussian(64, 16);
    CHECK(apply_fir({{1.0}, 1.0}, x) == x);
    Series impulse(6, 0.0);
    impulse[0] = 1.0;
    CHECK(apply_fir({{0.0, 1.0}, 1.0}, impulse) == Series{0, 1, 0, 0, 0, 0});
    const auto taps = oracle::gaussian(9, 17);
    const auto y = apply_fir({taps, 1.0}, x);
    const auto e = oracle::convolve(taps, x);
    REQUIRE(y.size() == x.size());
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - e[i]) <= 1e-12);
    CHECK(apply_fir({taps, 1.0}, Series{}).empty());
}

TEST_CASE("cancel") {
    SUBCASE("identical references cancel exactly") {
        const auto d = oracle::gaussian(100, 18);
        WienerDesign w;
        w.filters = {{{1.0}, 1.0}};
        const auto e = cancel(w, std::vector<Series>{d}, d);
        for (double v : e) CHECK(v == 0.0);
    }
    SUBCASE("a noise reference removes the noise tone") {
        const double fs = 20.0;
        const std::size_t t = 4000;
        const auto s = oracle::sinusoid(t, 0.5, fs, 1.0);
        const auto n = oracle::sinusoid(t, 1.3, fs, 2.0, 0.4);
        const auto d = add(s, n);
        const auto ref = add(n, oracle::gaussian(t, 19, 0.01));
        const auto e = cancel(design_for({ref}, d, 8), std::vector<Series>{ref}, d);
        const double before = oracle::tone_amplitude(d, 1.3, fs), after = oracle::tone_amplitude(e, 1.3, fs);
        CHECK(20.0 * std::log10(before / after) >= 20.0);
        CHECK(oracle::tone_amplitude(e, 0.5, fs) == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("heavy regularisation leaves the input untouched") {
        const auto x = oracle::gaussian(1000, 20), d = oracle::gaussian(1000, 21);
        const auto corr = estimate_correlations(std::vector<Series>{x}, d, 10);
        const auto w = solve_wiener(corr, 1e6 * corr.autocorr(0, 0, 0));
        const auto e = cancel(w, std::vector<Series>{x}, d);
        Series diff(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) diff[i] = e[i] - d[i];
        CHECK(norm(diff) / norm(d) <= 0.01);
    }
    SUBCASE("mismatches") {
        WienerDesign w;
        w.filters = {{{1.0}, 1.0}};
        const auto d = oracle::gaussian(10, 1);
        CHECK_THROWS_AS(cancel(w, std::vector<Series>{d, d}, d), ArgumentError);
        CHECK_THROWS_AS(cancel(w, std::vector<Series>{oracle::gaussian(9, 1)}, d), ArgumentError);
    }
}

TEST_CASE("residual is orthogonal to every lagged reference") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::size_t t = 400, n = 5;
        const std::vector<Series> refs{oracle::gaussian(t, seed * 3), oracle::gaussian(t, seed * 3 + 1)};
        const auto d = add(add(delayed(refs[0], 2), refs[1], 0.3), oracle::gaussian(t, seed * 3 + 2));
        const auto w = design_for(refs, d, n);
        std::vector<Series> taps;
        for (const auto& f : w.filters) taps.push_back(f.taps);
        const auto e = oracle::full_residual(refs, d, taps);
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const auto x = oracle::demeaned(refs[i]);
            double power = 0.0;
            for (double v : x) power += v * v;
            power /= static_cast<double>(t);
            for (std::size_t k = 0; k < n; ++k) {
                const double r = oracle::raw_lag_product(e, x, static_cast<std::ptrdiff_t>(k)) / static_cast<double>(t);
                CHECK(std::abs(r) <= 1e-6 * power);
            }
        }
    }
}

TEST_CASE("unit-circle transfer theory") {
    using C = std::complex<double>;
    TransferSpec spec;
    spec.freqs_hz = {0.0, 0.1, 0.2};
    spec.signal_path = {C(1.0, 0.5), C(0.2, -1.0), C(2.0, 0.0)};
    spec.noise_path = {C(0.5, 0.0), C(-1.0, 1.0), C(0.1, 0.3)};
    spec.signal_spectrum = {1.0, 2.0, 0.5};
    spec.noise_spectrum = {3.0, 0.2, 1.0};

    SUBCASE("pure noise gives 1/R") {
        auto s = spec;
        s.signal_spectrum = {0.0, 0.0, 0.0};
        const auto h = theory_transfer(s);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(h[i] - 1.0 / s.noise_path[i]) <= 1e-14);
        for (double v : theory_output_spectra(s).noise) CHECK(v <= 1e-28);
    }
    SUBCASE("pure signal gives 1/J") {
        auto s = spec;
        s.noise_spectrum = {0.0, 0.0, 0.0};
        const auto h = theory_transfer(s);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(h[i] - 1.0 / s.signal_path[i]) <= 1e-14);
    }
    SUBCASE("equal paths cancel everything") {
        auto s = spec;
        s.noise_path = s.signal_path;
        const auto h = theory_transfer(s);
        const auto out = theory_output_spectra(s);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(std::abs(h[i] - 1.0 / s.signal_path[i]) <= 1e-14);
            CHECK(out.signal[i] <= 1e-28);
            CHECK(out.noise[i] <= 1e-28);
        }
    }
    SUBCASE("vanishing reference spectrum") {
        auto s = spec;
        s.signal_path[1] = 0.0;
        s.noise_path[1] = 0.0;
        CHECK_THROWS_AS(theory_transfer(s), SingularSpectrumError);
        CHECK_THROWS_AS(theory_snr_densities(s), SingularSpectrumError);
    }
    SUBCASE("misaligned or negative input") {
        auto s = spec;
        s.noise_spectrum.pop_back();
        CHECK_THROWS_AS(theory_transfer(s), ArgumentError);
        s = spec;
        s.signal_spectrum[0] = -1.0;
        CHECK_THROWS_AS(theory_transfer(s), ArgumentError);
    }
}

TEST_CASE("output SNR density is the reciprocal of the reference SNR density") {
    using C = std::complex<double>;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(1e-3, 1e3), any(-5.0, 5.0);
    TransferSpec spec;
    for (int i = 0; i < 1000; ++i) {
        spec.freqs_hz.push_back(0.01 * i);
        spec.signal_path.emplace_back(any(rng), any(rng));
        spec.noise_path.emplace_back(any(rng), any(rng));
        spec.signal_spectrum.push_back(pos(rng));
        spec.noise_spectrum.push_back(pos(rng));
    }
    const auto d = theory_snr_densities(spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) worst = std::max(worst, std::abs(d.output[i] * d.reference[i] - 1.0));
    CHECK(worst <= 1e-12);

    TransferSpec point;
    point.freqs_hz = {1.0, 2.0};
    point.signal_path = {C(2.0, 0.0), C(1.0, 0.0)};
    point.noise_path = {C(1.0, 0.0), C(0.0, 1.0)};
    point.signal_spectrum = {25.0, 3.0};
    point.noise_spectrum = {1.0, 3.0};
    const auto p = theory_snr_densities(point);
    CHECK(p.reference[0] == doctest::Approx(100.0));
    CHECK(p.output[0] == doctest::Approx(0.01));
    CHECK(p.reference[1] == doctest::Approx(1.0));
    CHECK(p.output[1] == doctest::Approx(1.0));
}

TEST_CASE("time-domain reciprocity on tones") {
    // d = s + n, x = J s + R n with scalar paths and a one-tap filter; tones
    // sit on exact DFT bins so the sample cross terms vanish
    const double fs = 20.0, fsig = 0.5, fnoise = 1.3;
    const std::size_t t = 8000; // 200 signal periods
    const auto s = oracle::sinusoid(t, fsig, fs, 1.0, 0.2);
    const auto n = oracle::sinusoid(t, fnoise, fs, 1.5, 1.1);
    for (auto [j, r] : {std::pair{0.3, 2.0}, std::pair{1.0, 0.1}, std::pair{0.8, -0.5}}) {
        const auto d = add(s, n);
        const auto x = add(scaled(s, j), n, r);
        const auto e = cancel(design_for({x}, d, 1), std::vector<Series>{x}, d);
        const double ref_db = 20.0 * std::log10(oracle::tone_amplitude(x, fsig, fs) / oracle::tone_amplitude(x, fnoise, fs));
        const double out_db = 20.0 * std::log10(oracle::tone_amplitude(e, fsig, fs) / oracle::tone_amplitude(e, fnoise, fs));
        CHECK(std::abs(out_db + ref_db) <= 1.5);
    }
}

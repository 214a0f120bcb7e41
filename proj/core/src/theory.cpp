#include <cmath>
#include <complex>
#include <string>

#include "snswf/errors.hpp"
#include "snswf/wiener.hpp"

// All z-domain quantities are evaluated on the unit circle, where
// J(1/z) = conj(J(z)) for real impulse responses.

namespace snswf {

void TransferSpec::validate() const {
    const auto n = freqs_hz.size();
    if (signal_path.size() != n || noise_path.size() != n || signal_spectrum.size() != n ||
        noise_spectrum.size() != n)
        throw ArgumentError("transfer spec grids are not aligned");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(signal_spectrum[i] >= 0.0) || !(noise_spectrum[i] >= 0.0))
            throw ArgumentError("spectra must be nonnegative");
    }
}

std::vector<std::complex<double>> theory_transfer(const TransferSpec& spec) {
    spec.validate();
    std::vector<std::complex<double>> h(spec.freqs_hz.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const auto& j = spec.signal_path[i];
        const auto& r = spec.noise_path[i];
        const double ss = spec.signal_spectrum[i];
        const double nn = spec.noise_spectrum[i];
        const double den = ss * std::norm(j) + nn * std::norm(r);
        if (!(den > 0.0))
            throw SingularSpectrumError("reference spectrum vanishes at grid point " + std::to_string(i));
        h[i] = (ss * std::conj(j) + nn * std::conj(r)) / den;
    }
    return h;
}

OutputSpectra theory_output_spectra(const TransferSpec& spec) {
    const auto h = theory_transfer(spec);
    OutputSpectra out;
    out.signal.resize(h.size());
    out.noise.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        out.signal[i] = spec.signal_spectrum[i] * std::norm(1.0 - spec.signal_path[i] * h[i]);
        out.noise[i] = spec.noise_spectrum[i] * std::norm(1.0 - spec.noise_path[i] * h[i]);
    }
    return out;
}

SnrDensities theory_snr_densities(const TransferSpec& spec) {
    spec.validate();
    SnrDensities out;
    const auto n = spec.freqs_hz.size();
    out.output.resize(n);
    out.reference.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sig = spec.signal_spectrum[i] * std::norm(spec.signal_path[i]);
        const double noi = spec.noise_spectrum[i] * std::norm(spec.noise_path[i]);
        if (!(sig > 0.0) || !(noi > 0.0))
            throw SingularSpectrumError("SNR density undefined at grid point " + std::to_string(i));
        out.reference[i] = sig / noi;
        out.output[i] = noi / sig;
    }
    return out;
}

} // namespace snswf

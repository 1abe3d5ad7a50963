#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace chew::signal {

/// A sampled audio signal with an explicit sample rate.
struct TimeSeries {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// One normalized biquad (a0 = 1).
struct BiquadSection {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterDesign {
  double cutoff_hz = 0.0;
  int order = 0;
  double sample_rate_hz = 0.0;
};

/// Second-order-section cascade plus the design it was derived from.
struct IIRFilterSpec {
  std::vector<BiquadSection> sections;
  FilterDesign design;
};

/// Fixed-length windows cut from a signal, with per-window start times.
struct WindowMatrix {
  std::vector<std::vector<double>> windows;
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::vector<double> origin_times_s;
};

/// Designs a high-pass Butterworth as a biquad cascade (bilinear transform
/// with frequency prewarping, so |H| at cutoff_hz is exactly -3.01 dB).
/// Requires an even order and cutoff below Nyquist.
IIRFilterSpec design_highpass_butterworth(double cutoff_hz, double sample_rate_hz,
                                          int order);

/// Complex frequency response of the cascade at frequency `freq_hz`.
std::complex<double> frequency_response(const IIRFilterSpec& filter, double freq_hz);

/// Largest pole magnitude across all sections (stable iff < 1).
double max_pole_magnitude(const IIRFilterSpec& filter);

/// Causal forward filtering with zero initial conditions. Output length
/// equals input length; rejects a sample-rate mismatch.
TimeSeries filter_forward(const IIRFilterSpec& filter, const TimeSeries& x);

/// Integer-factor decimation with a linear-phase anti-alias FIR
/// (Hamming-windowed sinc, 8*factor+1 taps, cutoff 0.9x the output Nyquist,
/// unity DC gain, zero padding at the edges). factor 1 bypasses the FIR.
TimeSeries decimate(const TimeSeries& x, std::size_t factor);

/// Consecutive slices x[k*stride : k*stride + window_len]; a trailing
/// partial window is dropped. A signal shorter than window_len yields an
/// empty WindowMatrix.
WindowMatrix extract_windows(const TimeSeries& x, std::size_t window_len,
                             std::size_t stride);

}  // namespace chew::signal

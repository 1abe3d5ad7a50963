#include "chew/signal.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace chew::signal {

IIRFilterSpec design_highpass_butterworth(double cutoff_hz, double sample_rate_hz,
                                          int order) {
  if (sample_rate_hz <= 0.0)
    throw std::invalid_argument("design_highpass_butterworth: sample rate must be positive");
  if (cutoff_hz <= 0.0 || cutoff_hz >= sample_rate_hz / 2.0)
    throw std::invalid_argument(
        "design_highpass_butterworth: cutoff must lie strictly between 0 and Nyquist (" +
        std::to_string(sample_rate_hz / 2.0) + " Hz)");
  if (order <= 0 || order % 2 != 0)
    throw std::invalid_argument(
        "design_highpass_butterworth: order must be a positive even number "
        "(cascade of biquads)");

  // Analog prototype poles on the left unit semicircle; prewarped cutoff so
  // the bilinear transform lands the -3 dB point exactly at cutoff_hz.
  const double warped = 2.0 * sample_rate_hz * std::tan(M_PI * cutoff_hz / sample_rate_hz);
  const double fs2 = 2.0 * sample_rate_hz;

  IIRFilterSpec spec;
  spec.design = {cutoff_hz, order, sample_rate_hz};
  const int n_sections = order / 2;
  spec.sections.reserve(n_sections);

  for (int k = 0; k < n_sections; ++k) {
    // Upper-half-plane prototype pole; its conjugate completes the biquad.
    const double theta = M_PI / 2.0 + M_PI * (2.0 * k + 1.0) / (2.0 * order);
    const std::complex<double> p_lp(std::cos(theta), std::sin(theta));
    const std::complex<double> p_hp = warped / p_lp;           // lowpass -> highpass
    const std::complex<double> z_p = (fs2 + p_hp) / (fs2 - p_hp);  // bilinear

    // Zeros at s=0 map to a double zero at z=1; per-section bilinear gain.
    const double gain = (fs2 * fs2) / std::norm(fs2 - p_hp);

    BiquadSection s;
    s.b0 = gain;
    s.b1 = -2.0 * gain;
    s.b2 = gain;
    s.a1 = -2.0 * z_p.real();
    s.a2 = std::norm(z_p);
    spec.sections.push_back(s);
  }
  return spec;
}

std::complex<double> frequency_response(const IIRFilterSpec& filter, double freq_hz) {
  const double omega = 2.0 * M_PI * freq_hz / filter.design.sample_rate_hz;
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h(1.0, 0.0);
  for (const auto& s : filter.sections) {
    h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  }
  return h;
}

double max_pole_magnitude(const IIRFilterSpec& filter) {
  double worst = 0.0;
  for (const auto& s : filter.sections) {
    const double disc = s.a1 * s.a1 - 4.0 * s.a2;
    double mag;
    if (disc < 0.0) {
      mag = std::sqrt(s.a2);  // complex pair: |p|^2 = a2
    } else {
      const double r = std::sqrt(disc);
      mag = std::max(std::abs((-s.a1 + r) / 2.0), std::abs((-s.a1 - r) / 2.0));
    }
    worst = std::max(worst, mag);
  }
  return worst;
}

TimeSeries filter_forward(const IIRFilterSpec& filter, const TimeSeries& x) {
  if (filter.design.sample_rate_hz != x.sample_rate_hz)
    throw std::invalid_argument("filter_forward: filter designed for " +
                                std::to_string(filter.design.sample_rate_hz) +
                                " Hz but signal is " +
                                std::to_string(x.sample_rate_hz) + " Hz");

  TimeSeries y;
  y.sample_rate_hz = x.sample_rate_hz;
  y.samples = x.samples;

  // Direct form II transposed per section, zero initial state.
  for (const auto& s : filter.sections) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y.samples) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

TimeSeries decimate(const TimeSeries& x, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("decimate: factor must be >= 1");
  if (factor == 1) return x;

  const std::size_t n_out = x.samples.size() / factor;
  TimeSeries y;
  y.sample_rate_hz = x.sample_rate_hz / static_cast<double>(factor);
  y.samples.resize(n_out);

  // Hamming-windowed sinc lowpass, unity DC gain.
  const std::size_t taps = 8 * factor + 1;
  const std::ptrdiff_t mid = static_cast<std::ptrdiff_t>(taps / 2);
  const double cutoff = 0.45 / static_cast<double>(factor);  // 0.9 x output Nyquist, as fraction of fs_in
  std::vector<double> h(taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double m = static_cast<double>(static_cast<std::ptrdiff_t>(i) - mid);
    const double arg = 2.0 * cutoff * m;
    const double sinc = (m == 0.0) ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(taps - 1));
    h[i] = 2.0 * cutoff * sinc * window;
    sum += h[i];
  }
  for (double& v : h) v /= sum;

  const std::ptrdiff_t n_in = static_cast<std::ptrdiff_t>(x.samples.size());
  for (std::size_t m = 0; m < n_out; ++m) {
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(m * factor);
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) {
      const std::ptrdiff_t idx = center + static_cast<std::ptrdiff_t>(k) - mid;
      if (idx >= 0 && idx < n_in) acc += h[k] * x.samples[static_cast<std::size_t>(idx)];
    }
    y.samples[m] = acc;
  }
  return y;
}

WindowMatrix extract_windows(const TimeSeries& x, std::size_t window_len,
                             std::size_t stride) {
  if (window_len == 0) throw std::invalid_argument("extract_windows: window_len must be positive");
  if (stride == 0) throw std::invalid_argument("extract_windows: stride must be positive");

  WindowMatrix out;
  out.window_len = window_len;
  out.stride = stride;
  if (x.samples.size() < window_len) return out;

  const std::size_t n = (x.samples.size() - window_len) / stride + 1;
  out.windows.reserve(n);
  out.origin_times_s.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t begin = k * stride;
    out.windows.emplace_back(x.samples.begin() + begin,
                             x.samples.begin() + begin + window_len);
    out.origin_times_s.push_back(static_cast<double>(begin) / x.sample_rate_hz);
  }
  return out;
}

}  // namespace chew::signal

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>

#include <fftw3.h>

#include "neovitals/dsp.hpp"

namespace neovitals {

namespace {

// Real-to-complex FFT of a fixed size. Not thread-safe to construct (FFTW planner).
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n), fftw_free),
        out_(fftw_alloc_complex(n / 2 + 1), fftw_free) {
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw ContractError("FFT plan creation failed");
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { fftw_destroy_plan(plan_); }

  double* input() { return in_.get(); }
  std::size_t size() const { return n_; }

  void execute() { fftw_execute(plan_); }
  double magnitude(std::size_t bin) const {
    const auto& c = out_.get()[bin];
    return std::hypot(c[0], c[1]);
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, decltype(&fftw_free)> in_;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_;
  fftw_plan plan_ = nullptr;
};

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

AdaptedPrior adapt_prior(const GaussianPrior& prior, std::span<const double> history, const AdaptivePriorOptions& opt) {
  if (history.size() < opt.min_history) return {prior, false};
  const double mu2 = mean_of(history);
  const double sd2 = std::max(stddev_of(history), opt.min_std);
  if (std::isinf(prior.std)) return {GaussianPrior{mu2, sd2}, true};
  const double v1 = prior.std * prior.std;
  const double v2 = sd2 * sd2;
  const double mean = (prior.mean * v2 + mu2 * v1) / (v1 + v2);
  const double var = v1 * v2 / (v1 + v2);
  return {GaussianPrior{mean, std::sqrt(var)}, true};
}

std::vector<RateEstimate> spectral_rate(const SampledSeries& s, const SpectralRateOptions& opt) {
  if (!(opt.window_s > 0.0) || !(opt.stride_s > 0.0)) throw ContractError("window and stride must be > 0");
  if (!(opt.band_lo < opt.band_hi)) throw ContractError("band must satisfy lo < hi");
  const auto win = static_cast<std::size_t>(std::lround(opt.window_s * s.rate));
  const auto stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.stride_s * s.rate)));
  if (win < 64) throw ContractError("spectral window must span at least 64 samples");
  if (win > s.size()) throw ContractError("spectral window exceeds series length");

  const auto min_bins = static_cast<std::size_t>(std::ceil(60.0 * s.rate / opt.max_resolution));
  RealFft fft(next_pow2(std::max(win, min_bins)));
  const std::size_t nfft = fft.size();
  const double bin_per_min = 60.0 * s.rate / static_cast<double>(nfft);
  const auto k_lo = static_cast<std::size_t>(std::ceil(opt.band_lo / bin_per_min));
  const auto k_hi = std::min(nfft / 2, static_cast<std::size_t>(std::floor(opt.band_hi / bin_per_min)));
  if (k_lo > k_hi) throw ContractError("band contains no frequency bins");

  std::vector<double> taper(win);
  for (std::size_t i = 0; i < win; ++i) {
    taper[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(win - 1));
  }

  struct WindowSpectrum {
    std::vector<double> mag;  // bins k_lo..k_hi
    bool missing = false;
    bool degenerate = false;
    double raw_rate = 0.0;
  };
  std::vector<WindowSpectrum> spectra;
  std::vector<double> time;

  for (std::size_t start = 0; start + win <= s.size(); start += stride) {
    WindowSpectrum w;
    time.push_back(s.start_time + static_cast<double>(start) / s.rate + opt.window_s / 2.0);

    std::size_t n_missing = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < win; ++i) {
      if (s.is_missing(start + i)) {
        ++n_missing;
      } else {
        sum += s.values[start + i];
      }
    }
    if (static_cast<double>(n_missing) > opt.max_missing_fraction * static_cast<double>(win)) {
      w.missing = true;
      spectra.push_back(std::move(w));
      continue;
    }
    const double mean = sum / static_cast<double>(win - n_missing);
    double* in = fft.input();
    for (std::size_t i = 0; i < win; ++i) {
      in[i] = s.is_missing(start + i) ? 0.0 : (s.values[start + i] - mean) * taper[i];
    }
    std::fill(in + win, in + nfft, 0.0);
    fft.execute();

    w.mag.resize(k_hi - k_lo + 1);
    for (std::size_t k = k_lo; k <= k_hi; ++k) w.mag[k - k_lo] = fft.magnitude(k);
    const auto peak = std::max_element(w.mag.begin(), w.mag.end());
    w.raw_rate = static_cast<double>(k_lo + static_cast<std::size_t>(peak - w.mag.begin())) * bin_per_min;
    const double med = median_of(w.mag);
    w.degenerate = !(*peak > opt.degenerate_ratio * med) || *peak <= 0.0;
    spectra.push_back(std::move(w));
  }

  // Raw estimates feeding the adaptive prior. Windows before enough history
  // exists borrow the first `min_history` raw estimates.
  std::vector<double> raw_history;
  std::vector<std::size_t> raw_upto(spectra.size(), 0);
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    if (!spectra[i].missing && !spectra[i].degenerate) raw_history.push_back(spectra[i].raw_rate);
    raw_upto[i] = raw_history.size();
  }

  std::vector<RateEstimate> out;
  out.reserve(spectra.size());
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    const auto& w = spectra[i];
    RateEstimate e;
    e.time = time[i];
    e.raw_rate = w.raw_rate;

    GaussianPrior prior = opt.prior;
    if (opt.adaptive) {
      const auto& ad = *opt.adaptive;
      std::size_t end = std::max(raw_upto[i], std::min(ad.min_history, raw_history.size()));
      std::size_t begin = end > ad.history_length ? end - ad.history_length : 0;
      prior = adapt_prior(opt.prior, std::span(raw_history).subspan(begin, end - begin), ad).prior;
    }

    if (w.missing) {
      e.missing = true;
      e.low_confidence = true;
      e.rate = prior.mean;
      out.push_back(e);
      continue;
    }
    if (w.degenerate) {
      e.rate = prior.mean;
      e.low_confidence = true;
      out.push_back(e);
      continue;
    }

    double best = -1.0, total = 0.0;
    std::size_t best_k = k_lo;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      const double post = w.mag[k - k_lo] * prior.density(static_cast<double>(k) * bin_per_min);
      total += post;
      if (post > best) {
        best = post;
        best_k = k;
      }
    }
    e.rate = static_cast<double>(best_k) * bin_per_min;
    e.posterior_peak = total > 0.0 ? best / total : 0.0;
    e.low_confidence = !(total > 0.0);
    out.push_back(e);
  }
  return out;
}

}  // namespace neovitals

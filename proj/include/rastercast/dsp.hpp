#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace rastercast::dsp {

using cplx = std::complex<double>;

// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<cplx>& a);

// |X[k]| of the FFT of x zero-padded to nfft (power of two).
std::vector<double> fft_mag(std::span<const cplx> x, size_t nfft);

size_t next_pow2(size_t n);

// Kaiser-windowed sinc lowpass. cutoff in cycles/sample, unity DC gain.
std::vector<double> kaiser_lowpass(size_t taps, double cutoff, double beta);

// Tap-count estimate for a Kaiser design with atten_db stopband attenuation
// and transition width trans cycles/sample.
size_t kaiser_taps(double atten_db, double trans);

double kaiser_beta(double atten_db);

// Streaming rational resampler (out_rate = in_rate * L / M) with the FIR
// group delay compensated, so output sample m lands exactly at input time
// m*M/L samples. Tap count is forced to 1 (mod 2L) at construction so the
// delay is an integer number of polyphase input steps. Output is computed
// from absolute indices; chunking never changes results.
class RationalResampler {
  public:
    RationalResampler(uint32_t up, uint32_t down, std::vector<double> taps);

    void push(std::span<const cplx> in, std::vector<std::complex<float>>& out);
    // Feeds zeros so every output whose center lies within the real input
    // range is emitted.
    void finish(std::vector<std::complex<float>>& out);

    uint32_t up() const { return up_; }
    uint32_t down() const { return down_; }
    size_t taps_per_phase() const { return bank_len_; }

  private:
    void emit_ready(std::vector<std::complex<float>>& out);

    uint32_t up_, down_;
    std::vector<double> taps_;
    std::vector<std::vector<double>> bank_;  // bank_[r][t] = taps_[r + t*L]
    size_t bank_len_ = 0;
    uint64_t delay_in_ = 0;      // group delay in input samples
    std::vector<cplx> buf_;      // window of input, buf_[i] = x[base_ + i]
    uint64_t base_ = 0;          // absolute index of buf_[0]
    uint64_t in_count_ = 0;      // total input samples received
    uint64_t out_count_ = 0;     // outputs emitted
    uint64_t real_in_ = 0;       // input samples before finish() padding
    bool finished_ = false;
};

// exp(-j*2*pi*(p/q)*n) generated from exact integer phase arithmetic,
// n advancing from 0. Deterministic and drift-free for arbitrary n.
class ToneMixer {
  public:
    ToneMixer(uint64_t p, uint64_t q);
    // out[i] = in[i] * exp(-j*2*pi*(p/q)*(n0+i)) for the internal counter
    void mix(std::span<const double> in, std::vector<cplx>& out);

  private:
    uint64_t p_, q_;
    uint64_t n_ = 0;
};

uint64_t splitmix64(uint64_t& state);

// Derives an independent stream seed from (seed, a, b); used for per-trial
// noise streams so sweep points and trials can run in any order.
uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b);

// Box-Muller Gaussian generator over splitmix64; implementation pinned here
// so outputs are identical across standard libraries.
class GaussianRng {
  public:
    explicit GaussianRng(uint64_t seed) : state_(seed) {}
    double next();           // N(0, 1)
    double uniform();        // [0, 1)

  private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

double median(std::vector<double> v);

// Peak position refinement: offset in [-0.5, 0.5] of the true maximum
// around bin k given neighbour magnitudes.
double parabolic_peak_offset(double left, double mid, double right);

}  // namespace rastercast::dsp

#include "rastercast/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace rastercast::dsp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::vector<cplx>& twiddles_for(size_t n) {
    thread_local std::unordered_map<size_t, std::vector<cplx>> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<cplx> tw(n / 2);
    for (size_t k = 0; k < n / 2; ++k)
        tw[k] = std::polar(1.0, -kTwoPi * double(k) / double(n));
    return cache.emplace(n, std::move(tw)).first->second;
}

double bessel_i0(double x) {
    // power series; converges quickly for the beta range used here
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (x / (2.0 * k)) * (x / (2.0 * k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

}  // namespace

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(std::vector<cplx>& a) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft size must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles_for(n);
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t stride = n / len;
        for (size_t i = 0; i < n; i += len) {
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * tw[k * stride];
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

std::vector<double> fft_mag(std::span<const cplx> x, size_t nfft) {
    std::vector<cplx> a(nfft, cplx{0.0, 0.0});
    std::copy(x.begin(), x.begin() + std::min(x.size(), nfft), a.begin());
    fft_inplace(a);
    std::vector<double> m(nfft);
    for (size_t i = 0; i < nfft; ++i) m[i] = std::abs(a[i]);
    return m;
}

double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

size_t kaiser_taps(double atten_db, double trans) {
    if (trans <= 0.0) throw std::invalid_argument("transition width must be positive");
    double n = (atten_db - 7.95) / (2.285 * kTwoPi * trans);
    return size_t(std::ceil(n)) + 1;
}

std::vector<double> kaiser_lowpass(size_t taps, double cutoff, double beta) {
    if (taps == 0 || cutoff <= 0.0 || cutoff >= 0.5)
        throw std::invalid_argument("bad lowpass design");
    std::vector<double> h(taps);
    const double mid = 0.5 * double(taps - 1);
    const double i0b = bessel_i0(beta);
    double sum = 0.0;
    for (size_t i = 0; i < taps; ++i) {
        double t = double(i) - mid;
        double sinc = (t == 0.0) ? 2.0 * cutoff
                                 : std::sin(kTwoPi * cutoff * t) / (std::numbers::pi * t);
        double r = 2.0 * t / double(taps - 1);
        double w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
        h[i] = sinc * w;
        sum += h[i];
    }
    for (double& v : h) v /= sum;
    return h;
}

RationalResampler::RationalResampler(uint32_t up, uint32_t down, std::vector<double> taps)
    : up_(up), down_(down), taps_(std::move(taps)) {
    if (up_ == 0 || down_ == 0) throw std::invalid_argument("resampler factors must be positive");
    if (taps_.size() % (2 * up_) != 1)
        throw std::invalid_argument("resampler taps must be 1 mod 2*up for integer delay");
    // polyphase decomposition with the upsampling gain folded in
    bank_.resize(up_);
    bank_len_ = (taps_.size() + up_ - 1) / up_;
    for (uint32_t r = 0; r < up_; ++r) {
        bank_[r].assign(bank_len_, 0.0);
        for (size_t t = 0; r + t * up_ < taps_.size(); ++t)
            bank_[r][t] = taps_[r + t * up_] * double(up_);
    }
    delay_in_ = (taps_.size() - 1) / 2 / up_;
}

void RationalResampler::push(std::span<const cplx> in, std::vector<std::complex<float>>& out) {
    if (finished_) throw std::logic_error("push after finish");
    buf_.insert(buf_.end(), in.begin(), in.end());
    in_count_ += in.size();
    real_in_ = in_count_;
    emit_ready(out);
}

void RationalResampler::finish(std::vector<std::complex<float>>& out) {
    if (finished_) return;
    real_in_ = in_count_;
    finished_ = true;
    // pad so outputs centered inside the real input all become computable
    std::vector<cplx> zeros(bank_len_ + delay_in_ + 2, cplx{0.0, 0.0});
    buf_.insert(buf_.end(), zeros.begin(), zeros.end());
    in_count_ += zeros.size();
    emit_ready(out);
    // drop outputs whose center lies beyond the real input
    uint64_t max_out = (real_in_ * up_ + down_ - 1) / down_;  // ceil(real_in*L/M)
    if (out_count_ > max_out && out.size() >= out_count_ - max_out)
        out.resize(out.size() - (out_count_ - max_out));
}

void RationalResampler::emit_ready(std::vector<std::complex<float>>& out) {
    for (;;) {
        // output m is the filter centered at input index m*M/L + delay offset;
        // the top upsampled tap index is i = m*M + delay*L
        uint64_t i = out_count_ * down_ + delay_in_ * up_;
        uint64_t r = i % up_;
        uint64_t k0 = i / up_;  // newest input index used
        if (k0 >= in_count_) break;
        const auto& bank = bank_[r];
        cplx acc{0.0, 0.0};
        size_t tmax = std::min<uint64_t>(bank.size(), k0 - base_ + 1);
        const cplx* x = buf_.data() + (k0 - base_);
        for (size_t t = 0; t < tmax; ++t) acc += bank[t] * x[-ptrdiff_t(t)];
        out.emplace_back(float(acc.real()), float(acc.imag()));
        ++out_count_;
    }
    // trim consumed history, keeping one filter span
    uint64_t next_i = out_count_ * down_ + delay_in_ * up_;
    uint64_t oldest_needed = next_i / up_ >= bank_len_ ? next_i / up_ - bank_len_ : 0;
    if (oldest_needed > base_ + 4096) {
        size_t drop = size_t(oldest_needed - base_);
        buf_.erase(buf_.begin(), buf_.begin() + drop);
        base_ = oldest_needed;
    }
}

ToneMixer::ToneMixer(uint64_t p, uint64_t q) : p_(p % q), q_(q) {
    if (q == 0) throw std::invalid_argument("mixer denominator must be positive");
}

void ToneMixer::mix(std::span<const double> in, std::vector<cplx>& out) {
    out.resize(in.size());
    const cplx step = std::polar(1.0, -kTwoPi * double(p_) / double(q_));
    // exact phase from integer arithmetic: (p*n) mod q
    auto exact = [this](uint64_t n) {
        uint64_t r = uint64_t((unsigned __int128)(p_) * n % q_);
        return std::polar(1.0, -kTwoPi * double(r) / double(q_));
    };
    // Renorm blocks are anchored to absolute n, and a call starting mid-block
    // replays the block's multiply chain from its start, so the float sequence
    // for every sample is the same no matter how the stream is chunked.
    const uint64_t block = n_ / 1024 * 1024;
    cplx w = exact(block);
    for (uint64_t k = block; k < n_; ++k) w *= step;
    for (size_t i = 0; i < in.size(); ++i) {
        uint64_t n = n_ + i;
        if (n % 1024 == 0) w = exact(n);
        out[i] = in[i] * w;
        w *= step;
    }
    n_ += in.size();
}

uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
    uint64_t s = seed;
    (void)splitmix64(s);
    s ^= 0x9E3779B97F4A7C15ull * (a + 1);
    (void)splitmix64(s);
    s ^= 0xC2B2AE3D27D4EB4Full * (b + 1);
    uint64_t st = s;
    return splitmix64(st);
}

double GaussianRng::uniform() {
    return double(splitmix64(state_) >> 11) * 0x1.0p-53;
}

double GaussianRng::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 0.0);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (hi + v[mid - 1]);
}

double parabolic_peak_offset(double left, double mid, double right) {
    double denom = left - 2.0 * mid + right;
    if (denom == 0.0) return 0.0;
    double d = 0.5 * (left - right) / denom;
    return std::clamp(d, -0.5, 0.5);
}

}  // namespace rastercast::dsp

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/hermite_stein.hpp"

namespace chaoslab {

struct MCConfig {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 1;
    std::uint64_t chunk = 8192;  // samples per task; changes neither results nor their order
    int threads = 0;             // 0: CHAOSLAB_THREADS or hardware
    double ci_level = 0.99;
};

std::uint64_t splitmix64(std::uint64_t x);
// Engine for stream c (samples 1024c .. 1024c+1023) of a run with the given seed.
std::mt19937_64 chunk_rng(std::uint64_t seed, std::uint64_t stream);

// Running mean / co-moment of k statistics; merged in stream order.
class StatAccumulator {
public:
    explicit StatAccumulator(int k = 1);
    void add(const double* x);
    void merge(const StatAccumulator& o);
    int k() const { return k_; }
    std::uint64_t count() const { return n_; }
    const Vec& mean() const { return mean_; }
    Mat covariance() const;  // unbiased
    double se(int i) const;  // standard error of mean i
    // SE of mean of linear combination w . x
    double se_of(const Vec& w) const;

private:
    int k_;
    std::uint64_t n_ = 0;
    Vec mean_;
    Mat m2_;
    Vec delta_;
};

// chunk_fn(rng, count, acc) is called once per stream and must draw only from rng.
using ChunkFn = std::function<void(std::mt19937_64&, std::uint64_t, StatAccumulator&)>;
StatAccumulator run_mc(const MCConfig& cfg, int k, const ChunkFn& chunk_fn);

// Convenience: one sample at a time. sample_fn(xi, out) gets `dim` fresh standard normals.
using SampleFn = std::function<void(const double* xi, double* out)>;
StatAccumulator run_mc_gaussian(const MCConfig& cfg, int dim, int k, const SampleFn& sample_fn);
// Collect the k statistics of every sample (rows in sample order).
Mat collect_mc_gaussian(const MCConfig& cfg, int dim, int k, const SampleFn& sample_fn);

struct Estimate {
    double mean = 0;
    double se = 0;
};
Estimate estimate_expectation(const ChaosVector& F, const TestFunction& g, const MCConfig& mc);

struct SteinCheck {
    Estimate lhs;   // E g(F) - E g(Z)
    Estimate rhs;   // sum_ij E[d_ij U(F) (Gamma_ij(F) - C_ij)]
    double paired_se = 0;
    double combined_se = 0;  // sqrt(se_l^2 + se_r^2)
};
SteinCheck stein_identity_check(const ChaosVector& F, const TestFunction& g, const GaussianSpec& C,
                                const MCConfig& mc, const UOptions& opt = {});

struct RateRow {
    double scale = 0, delta_gamma = 0, delta_c = 0, phi = 0;
    double raw_gap = 0, raw_gap_se = 0, corrected_gap = 0, corrected_gap_se = 0;
};
struct Slope {
    double slope = 0, se = 0;
};
struct RateTable {
    std::vector<RateRow> rows;
    void sort();
    std::string to_csv() const;
    static RateTable from_csv(const std::string& text);
};

Slope rate_fit(const std::vector<double>& scale, const std::vector<double>& value);
Slope rate_fit(const RateTable& t, double RateRow::*column);

}  // namespace chaoslab

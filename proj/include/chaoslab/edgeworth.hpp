#pragma once

#include <map>

#include "chaoslab/hermite_stein.hpp"
#include "chaoslab/multiindex.hpp"

namespace chaoslab {

struct CumulantSet {
    int d = 0;
    int max_order = 0;
    bool formal = false;
    std::map<MultiIndex, double> values;
    std::map<MultiIndex, double> se;  // filled by sample_cumulants

    CumulantSet() = default;
    CumulantSet(int dim, int order, bool is_formal = false) : d(dim), max_order(order), formal(is_formal) {}

    double get(const MultiIndex& a) const;
    bool has(const MultiIndex& a) const { return values.count(a) > 0; }
    void set(const MultiIndex& a, double v);
    // true when every alpha with 1 <= |alpha| <= max_order is present
    bool complete() const;
};

// Cumulants of N(mean, cov) up to order m.
CumulantSet gaussian_cumulants(const Mat& cov, int m, const Vec& mean = Vec());
// kappa(F) - kappa(Z), flagged formal
CumulantSet formal_difference(const CumulantSet& f, const CumulantSet& z);

// Leonov-Shiryaev: mu_alpha = sum over partitions of prod kappa_{b_k}
double moments_from_cumulants(const CumulantSet& k, const MultiIndex& alpha);
// Inverse relation with Moebius weights (-1)^{m-1}(m-1)!
double cumulants_from_moments(const std::map<MultiIndex, double>& moments, const MultiIndex& alpha);

struct EdgeworthTerms {
    double base = 0, first = 0, second = 0, third = 0;
    double total() const { return base + first + second + third; }
};

// Third-order generalized Edgeworth expansion of E g(F) around Z.
EdgeworthTerms edgeworth3_terms(const CumulantSet& f, const GaussianSpec& Z, const TestFunction& g);
double edgeworth3(const CumulantSet& f, const GaussianSpec& Z, const TestFunction& g);

// Joint sample cumulants up to max_order (<= 4) of the rows of samples, with grouped jackknife SEs.
CumulantSet sample_cumulants(const Mat& samples, int max_order, int groups = 20);

// E[Z^alpha] for centered Z ~ N(0, cov), by pair-partition enumeration.
double isserlis_moment(const MultiIndex& alpha, const Mat& cov);

}  // namespace chaoslab

#include "chaoslab/edgeworth.hpp"

#include <cmath>
#include <stdexcept>

namespace chaoslab {

double CumulantSet::get(const MultiIndex& a) const {
    auto it = values.find(a);
    if (it == values.end()) throw std::out_of_range("missing cumulant " + a.str());
    return it->second;
}

void CumulantSet::set(const MultiIndex& a, double v) {
    if (a.dim() != d) throw std::invalid_argument("cumulant dimension mismatch");
    if (a.order() == 0) throw std::invalid_argument("cumulant of order 0 is not defined");
    values[a] = v;
}

bool CumulantSet::complete() const {
    for (int n = 1; n <= max_order; ++n)
        for (const auto& a : multi_indices(d, n))
            if (!has(a)) return false;
    return true;
}

CumulantSet gaussian_cumulants(const Mat& cov, int m, const Vec& mean) {
    const int d = static_cast<int>(cov.rows());
    CumulantSet k(d, m);
    for (int n = 1; n <= m; ++n)
        for (const auto& a : multi_indices(d, n)) {
            double v = 0.0;
            auto l = a.labels();
            if (n == 1 && mean.size() == d) v = mean(l[0]);
            if (n == 2) v = cov(l[0], l[1]);
            k.set(a, v);
        }
    return k;
}

CumulantSet formal_difference(const CumulantSet& f, const CumulantSet& z) {
    if (f.d != z.d) throw std::invalid_argument("formal_difference: dimension mismatch");
    CumulantSet k(f.d, std::min(f.max_order, z.max_order), true);
    for (int n = 1; n <= k.max_order; ++n)
        for (const auto& a : multi_indices(f.d, n)) k.set(a, f.get(a) - z.get(a));
    return k;
}

double moments_from_cumulants(const CumulantSet& k, const MultiIndex& alpha) {
    if (alpha.dim() != k.d) throw std::invalid_argument("moments_from_cumulants: dimension mismatch");
    const auto labels = alpha.labels();
    const int n = static_cast<int>(labels.size());
    if (n == 0) return 1.0;
    double total = 0.0;
    for (const auto& part : set_partitions(n)) {
        double p = 1.0;
        for (const auto& block : part) {
            std::vector<int> bl;
            for (int i : block) bl.push_back(labels[i]);
            p *= k.get(MultiIndex::from_labels(k.d, bl));
            if (p == 0.0) break;
        }
        total += p;
    }
    return total;
}

double cumulants_from_moments(const std::map<MultiIndex, double>& moments, const MultiIndex& alpha) {
    const auto labels = alpha.labels();
    const int n = static_cast<int>(labels.size());
    if (n == 0) throw std::invalid_argument("cumulant of order 0 is not defined");
    double total = 0.0;
    for (const auto& part : set_partitions(n)) {
        const int m = static_cast<int>(part.size());
        double p = (m % 2 == 1 ? 1.0 : -1.0) * factorial(m - 1);
        for (const auto& block : part) {
            std::vector<int> bl;
            for (int i : block) bl.push_back(labels[i]);
            auto it = moments.find(MultiIndex::from_labels(alpha.dim(), bl));
            if (it == moments.end()) throw std::out_of_range("missing moment");
            p *= it->second;
        }
        total += p;
    }
    return total;
}

EdgeworthTerms edgeworth3_terms(const CumulantSet& f, const GaussianSpec& Z, const TestFunction& g) {
    const int d = Z.d();
    if (f.d != d || g.d != d) throw std::invalid_argument("edgeworth3: dimension mismatch");
    if (f.max_order < 3) throw std::invalid_argument("edgeworth3: cumulants needed to order 3");
    CumulantSet kt = formal_difference(f, gaussian_cumulants(Z.cov(), 3));
    EdgeworthTerms t;
    t.base = gaussian_expectation(g, MultiIndex::zero(d), Z);
    double* slot[] = {&t.first, &t.second, &t.third};
    // sum over ordered index tuples == sum over alpha of mu/alpha!
    for (int n = 1; n <= 3; ++n)
        for (const auto& a : multi_indices(d, n)) {
            double mu = moments_from_cumulants(kt, a);
            if (mu == 0.0) continue;
            *slot[n - 1] += mu / a.factorial() * gaussian_expectation(g, a, Z);
        }
    return t;
}

double edgeworth3(const CumulantSet& f, const GaussianSpec& Z, const TestFunction& g) {
    return edgeworth3_terms(f, Z, g).total();
}

CumulantSet sample_cumulants(const Mat& samples, int max_order, int groups) {
    const Eigen::Index n = samples.rows();
    const int d = static_cast<int>(samples.cols());
    if (n < 10) throw std::invalid_argument("sample_cumulants: need at least 10 samples");
    if (max_order < 1 || max_order > 4) throw std::invalid_argument("sample_cumulants: order must be 1..4");
    groups = static_cast<int>(std::min<Eigen::Index>(groups, n));
    const Vec mean = samples.colwise().mean();
    if ((samples.rowwise() - mean.transpose()).cwiseAbs().maxCoeff() == 0.0 && max_order > 1) {
        // constant samples: cumulants are exact
        CumulantSet k(d, max_order);
        for (int o = 1; o <= max_order; ++o)
            for (const auto& a : multi_indices(d, o)) k.set(a, o == 1 ? mean(a.labels()[0]) : 0.0);
        for (auto& [a, v] : k.values) k.se[a] = 0.0;
        return k;
    }
    std::vector<MultiIndex> all;
    for (int o = 1; o <= max_order; ++o)
        for (const auto& a : multi_indices(d, o)) all.push_back(a);
    // per-group power sums of centered data
    std::vector<std::vector<double>> gs(groups, std::vector<double>(all.size(), 0.0));
    std::vector<double> gn(groups, 0.0);
    Vec y(d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int g = static_cast<int>(r * groups / n);
        y = samples.row(r).transpose() - mean;
        gn[g] += 1.0;
        for (std::size_t k = 0; k < all.size(); ++k) {
            double p = 1.0;
            for (int i = 0; i < d; ++i)
                for (int e = 0; e < all[k][i]; ++e) p *= y(i);
            gs[g][k] += p;
        }
    }
    auto estimate = [&](int skip) {
        std::map<MultiIndex, double> mom;
        double cnt = 0.0;
        std::vector<double> s(all.size(), 0.0);
        for (int g = 0; g < groups; ++g) {
            if (g == skip) continue;
            cnt += gn[g];
            for (std::size_t k = 0; k < all.size(); ++k) s[k] += gs[g][k];
        }
        for (std::size_t k = 0; k < all.size(); ++k) mom[all[k]] = s[k] / cnt;
        std::vector<double> out(all.size());
        for (std::size_t k = 0; k < all.size(); ++k) {
            out[k] = cumulants_from_moments(mom, all[k]);
            if (all[k].order() == 1) out[k] += mean(all[k].labels()[0]);
        }
        return out;
    };
    std::vector<double> full = estimate(-1);
    std::vector<std::vector<double>> jk;
    for (int g = 0; g < groups; ++g) jk.push_back(estimate(g));
    CumulantSet k(d, max_order);
    for (std::size_t i = 0; i < all.size(); ++i) {
        double m = 0.0;
        for (int g = 0; g < groups; ++g) m += jk[g][i];
        m /= groups;
        double v = 0.0;
        for (int g = 0; g < groups; ++g) v += (jk[g][i] - m) * (jk[g][i] - m);
        k.set(all[i], full[i]);
        k.se[all[i]] = std::sqrt(v * (groups - 1.0) / groups);
    }
    return k;
}

double isserlis_moment(const MultiIndex& alpha, const Mat& cov) {
    if (alpha.dim() != cov.rows()) throw std::invalid_argument("isserlis_moment: dimension mismatch");
    const auto labels = alpha.labels();
    const int n = static_cast<int>(labels.size());
    if (n > 8) throw std::invalid_argument("isserlis_moment: |alpha| <= 8");
    if (n % 2 == 1) return 0.0;
    double total = 0.0;
    for (const auto& p : pair_partitions(n)) {
        double v = 1.0;
        for (const auto& b : p) v *= cov(labels[b[0]], labels[b[1]]);
        total += v;
    }
    return total;
}

}  // namespace chaoslab

#include "chaoslab/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chaoslab {

double beta_coef(int a, int b, int r) { return factorial(r) * binomial(a, r) * binomial(b, r); }

// ---------------------------------------------------------------- ChaosElement

ChaosElement ChaosElement::integral(SymKernel f) {
    ChaosElement F(f.dim());
    F.add(f);
    return F;
}

void ChaosElement::add(const SymKernel& f) {
    if (f.dim() != dim) throw std::invalid_argument("chaos term dim " + std::to_string(f.dim()) + " != " + std::to_string(dim));
    if (f.order() == 0) {
        constant += f[0];
        return;
    }
    auto it = terms.find(f.order());
    if (it == terms.end())
        terms.emplace(f.order(), f);
    else
        it->second += f;
}

const SymKernel& ChaosElement::kernel() const {
    if (terms.size() != 1) throw std::invalid_argument("element is not a single multiple integral");
    return terms.begin()->second;
}

int ChaosElement::order() const {
    if (terms.size() != 1) throw std::invalid_argument("element is not a single multiple integral");
    return terms.begin()->first;
}

double ChaosElement::variance() const {
    double v = 0.0;
    for (const auto& [q, f] : terms) v += factorial(q) * f.norm2();
    return v;
}

ChaosElement& ChaosElement::operator+=(const ChaosElement& o) {
    if (o.dim != dim) throw std::invalid_argument("chaos dim mismatch");
    constant += o.constant;
    for (const auto& [q, f] : o.terms) add(f);
    return *this;
}

ChaosElement& ChaosElement::operator*=(double s) {
    constant *= s;
    for (auto& [q, f] : terms) f *= s;
    return *this;
}

ChaosVector::ChaosVector(std::vector<ChaosElement> comps) : components(std::move(comps)) {
    if (components.empty()) throw std::invalid_argument("chaos vector needs at least one component");
    dim = components[0].dim;
    for (const auto& c : components)
        if (c.dim != dim) throw std::invalid_argument("chaos vector components differ in dim");
}

ChaosVector ChaosVector::from_kernels(const std::vector<SymKernel>& kernels) {
    std::vector<ChaosElement> c;
    for (const auto& f : kernels) c.push_back(ChaosElement::integral(f));
    return ChaosVector(std::move(c));
}

bool ChaosVector::pure() const {
    return std::all_of(components.begin(), components.end(), [](const ChaosElement& c) { return c.pure(); });
}

std::vector<int> ChaosVector::orders() const {
    std::vector<int> q;
    for (const auto& c : components) q.push_back(c.order());
    return q;
}

// ---------------------------------------------------------------- evaluation

ChaosEvaluator::ChaosEvaluator(const ChaosElement& F) : dim_(F.dim), constant_(F.constant) {
    for (const auto& [q, f] : F.terms) {
        qmax_ = std::max(qmax_, q);
        if (q == 1) {
            linear_ = f.coeffs();
        } else if (q == 2) {
            quad_ = as_matrix(f);
            quad_trace_ = quad_.trace();
            has_quad_ = true;
        } else {
            // nondecreasing index tuples with multinomial weight q!/prod(m!)
            std::vector<int> idx(q, 0);
            while (true) {
                double c = f.at(idx);
                if (c != 0.0) {
                    Entry e;
                    double w = factorial(q);
                    for (int s = 0; s < q;) {
                        int t = s;
                        while (t < q && idx[t] == idx[s]) ++t;
                        e.slots.emplace_back(idx[s], t - s);
                        w /= factorial(t - s);
                        s = t;
                    }
                    e.weight = w * c;
                    higher_.push_back(std::move(e));
                }
                int p = q - 1;
                while (p >= 0 && idx[p] == dim_ - 1) --p;
                if (p < 0) break;
                ++idx[p];
                for (int s = p + 1; s < q; ++s) idx[s] = idx[p];
            }
        }
    }
}

double ChaosEvaluator::operator()(const double* xi) const {
    double v = constant_;
    if (!linear_.empty())
        for (int i = 0; i < dim_; ++i) v += linear_[i] * xi[i];
    if (has_quad_) {
        Eigen::Map<const Vec> x(xi, dim_);
        v += x.dot(quad_ * x) - quad_trace_;
    }
    if (!higher_.empty()) {
        const int stride = qmax_ + 1;
        std::vector<double> he(static_cast<std::size_t>(dim_) * stride);
        for (int i = 0; i < dim_; ++i) hermite_he_all(xi[i], qmax_, &he[i * stride]);
        for (const auto& e : higher_) {
            double p = e.weight;
            for (const auto& [j, m] : e.slots) p *= he[j * stride + m];
            v += p;
        }
    }
    return v;
}

double ChaosEvaluator::operator()(const Vec& xi) const {
    if (xi.size() != dim_) throw std::invalid_argument("evaluate: sample length != dim");
    return (*this)(xi.data());
}

double evaluate(const ChaosElement& F, const Vec& xi) { return ChaosEvaluator(F)(xi); }

// ---------------------------------------------------------------- products

ChaosElement multiply(const ChaosElement& F, const ChaosElement& G, int max_order) {
    if (F.dim != G.dim) throw std::invalid_argument("multiply: dim mismatch");
    if (F.top_order() + G.top_order() > max_order)
        throw std::domain_error("multiply: resulting order " + std::to_string(F.top_order() + G.top_order()) +
                                " exceeds supported maximum " + std::to_string(max_order));
    ChaosElement out(F.dim, F.constant * G.constant);
    for (const auto& [q, g] : G.terms) {
        SymKernel t = g;
        t *= F.constant;
        out.add(t);
    }
    for (const auto& [p, f] : F.terms) {
        SymKernel t = f;
        t *= G.constant;
        out.add(t);
        for (const auto& [q, g] : G.terms)
            for (int r = 0; r <= std::min(p, q); ++r) {
                SymKernel c = sym_contract(f, g, r);
                c *= beta_coef(p, q, r);
                out.add(c);
            }
    }
    return out;
}

ChaosElement gamma_step_general(const ChaosElement& G_prev, const ChaosElement& F_new) {
    if (G_prev.dim != F_new.dim) throw std::invalid_argument("gamma_step: dim mismatch");
    ChaosElement out(G_prev.dim);
    for (const auto& [a, u] : F_new.terms)
        for (const auto& [b, v] : G_prev.terms)
            for (int r = 1; r <= std::min(a, b); ++r) {
                SymKernel c = sym_contract(u, v, r);
                c *= a * beta_coef(a - 1, b - 1, r - 1);
                out.add(c);
            }
    return out;
}

ChaosElement gamma_step(const ChaosElement& G_prev, const ChaosElement& F_new) {
    if (!F_new.pure()) throw std::invalid_argument("gamma_step: F_new must be a single multiple integral");
    return gamma_step_general(G_prev, F_new);
}

double gamma_step_constant(const ChaosElement& G_prev, const ChaosElement& F_new) {
    double c = 0.0;
    for (const auto& [a, u] : F_new.terms) {
        auto it = G_prev.terms.find(a);
        if (it != G_prev.terms.end()) c += factorial(a) * inner(u, it->second);
    }
    return c;
}

ChaosElement gamma_fold(const ChaosVector& F, const std::vector<int>& labels) {
    if (labels.empty()) throw std::invalid_argument("gamma_fold: empty label list");
    for (int l : labels)
        if (l < 0 || l >= F.d()) throw std::out_of_range("gamma_fold: label out of range");
    ChaosElement G = F[labels[0]];
    for (std::size_t k = 1; k < labels.size(); ++k) G = gamma_step_general(G, F[labels[k]]);
    return G;
}

ChaosElement gamma_ij(const ChaosVector& F, int i, int j) { return gamma_step_general(F[j], F[i]); }

double var_gamma(const ChaosVector& F, int i, int j) {
    if (i < 0 || j < 0 || i >= F.d() || j >= F.d()) throw std::out_of_range("var_gamma: index out of range");
    if (!F.pure()) throw std::invalid_argument("var_gamma: vector must be pure");
    const int qi = F[i].order(), qj = F[j].order();
    const SymKernel& fi = F[i].kernel();
    const SymKernel& fj = F[j].kernel();
    const int top = std::min(qi, qj) - (qi == qj ? 1 : 0);
    double v = 0.0;
    for (int r = 1; r <= top; ++r) {
        double b = beta_coef(qi - 1, qj - 1, r - 1);
        v += factorial(qi + qj - 2 * r) * qi * qi * b * b * sym_contract(fi, fj, r).norm2();
    }
    return v;
}

Mat chaos_covariance(const ChaosVector& F) {
    const int d = F.d();
    Mat c(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s = 0.0;
            for (const auto& [q, f] : F[i].terms) {
                auto it = F[j].terms.find(q);
                if (it != F[j].terms.end()) s += factorial(q) * inner(f, it->second);
            }
            c(i, j) = s;
        }
    return c;
}

DiscrepancyReport discrepancy(const ChaosVector& F, const GaussianSpec& C) {
    const int d = F.d();
    if (C.d() != d) throw std::invalid_argument("discrepancy: covariance dimension mismatch");
    DiscrepancyReport rep;
    rep.covariance = chaos_covariance(F);
    rep.var_gamma = Mat(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) rep.var_gamma(i, j) = var_gamma(F, i, j);
    rep.delta_gamma = std::sqrt(rep.var_gamma.sum());
    rep.delta_c = (rep.covariance - C.cov()).norm();
    rep.phi = rep.delta_gamma + rep.delta_c;
    return rep;
}

// ---------------------------------------------------------------- cumulants

namespace {

void check_cumulant_support(const ChaosVector& F, int n) {
    bool all2 = true;
    for (const auto& c : F.components) all2 = all2 && c.terms.size() == 1 && c.terms.begin()->first == 2;
    if (n > 8 || (n > 4 && !all2))
        throw std::domain_error("joint_cumulant: order " + std::to_string(n) +
                                " unsupported (max 4, or 8 for pure second-chaos vectors)");
}

// sum over orderings of the multiset `counts`, each weighted by its number of position permutations
template <class State, class Step, class Leaf>
double permutation_sum(const State& s, std::vector<int>& counts, int left, Step step, Leaf leaf) {
    if (left == 1) {
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c]) return leaf(s, static_cast<int>(c));
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (!counts[c]) continue;
        const int mult = counts[c];
        State next = step(s, static_cast<int>(c));
        --counts[c];
        total += mult * permutation_sum(next, counts, left - 1, step, leaf);
        ++counts[c];
    }
    return total;
}

}  // namespace

double joint_cumulant_labels(const ChaosVector& F, const std::vector<int>& labels) {
    const int n = static_cast<int>(labels.size());
    if (n < 1) throw std::invalid_argument("joint_cumulant: |alpha| >= 1");
    for (int l : labels)
        if (l < 0 || l >= F.d()) throw std::out_of_range("joint_cumulant: label out of range");
    check_cumulant_support(F, n);
    if (n == 1) return F[labels[0]].constant;
    std::vector<int> counts(F.d(), 0);
    for (int k = 1; k < n; ++k) ++counts[labels[k]];
    return permutation_sum(
        F[labels[0]], counts, n - 1,
        [&](const ChaosElement& G, int c) { return gamma_step_general(G, F[c]); },
        [&](const ChaosElement& G, int c) { return gamma_step_constant(G, F[c]); });
}

double joint_cumulant(const ChaosVector& F, const MultiIndex& alpha) {
    if (alpha.dim() != F.d()) throw std::invalid_argument("joint_cumulant: alpha dimension != d");
    return joint_cumulant_labels(F, alpha.labels());
}

double cumulant_second_chaos(const ChaosVector& F, const std::vector<int>& labels) {
    const int n = static_cast<int>(labels.size());
    if (n < 2) throw std::invalid_argument("second-chaos cumulant formula needs |alpha| >= 2");
    std::vector<Mat> A;
    for (const auto& c : F.components) {
        if (!c.pure() || c.order() != 2) throw std::invalid_argument("second-chaos formula needs pure I_2 components");
        A.push_back(as_matrix(c.kernel()));
    }
    std::vector<int> counts(F.d(), 0);
    for (int k = 1; k < n; ++k) ++counts[labels[k]];
    // f ~x_1 g is the symmetric part of A_f A_g
    double s = permutation_sum(
        A[labels[0]], counts, n - 1,
        [&](const Mat& P, int c) -> Mat {
            Mat Q = P * A[c];
            return 0.5 * (Q + Q.transpose());
        },
        [&](const Mat& P, int c) { return P.cwiseProduct(A[c]).sum(); });
    return std::pow(2.0, n - 1) * s;
}

double cumulant_second_chaos(const ChaosVector& F, const MultiIndex& alpha) {
    return cumulant_second_chaos(F, alpha.labels());
}

ThirdPairing third_cumulant_pairing(const ChaosVector& F, int i, int j, int k) {
    if (!F.pure()) throw std::invalid_argument("third_cumulant_pairing: vector must be pure");
    const int qi = F[i].order(), qj = F[j].order(), qk = F[k].order();
    ThirdPairing p;
    const int twice = qi + qj - qk;
    if (twice % 2 != 0) return p;
    p.r = twice / 2;
    if (p.r < 1 || p.r > std::min(qi, qj)) return p;
    p.admissible = true;
    p.value = inner(sym_contract(F[i].kernel(), F[j].kernel(), p.r), F[k].kernel());
    return p;
}

std::vector<std::vector<FourthMomentRow>> fourth_moment_diagnostics(const std::vector<ChaosVector>& seq) {
    std::vector<std::vector<FourthMomentRow>> out;
    for (const auto& F : seq) {
        if (!F.pure()) throw std::invalid_argument("fourth_moment_diagnostics: vectors must be pure");
        std::vector<FourthMomentRow> rows;
        for (int i = 0; i < F.d(); ++i) {
            FourthMomentRow row;
            row.component = i;
            const int q = F[i].order();
            row.kappa4 = joint_cumulant(F, MultiIndex::from_labels(F.d(), {i, i, i, i}));
            for (int r = 1; r < q; ++r) row.contraction_norms.push_back(norm(contract(F[i].kernel(), F[i].kernel(), r)));
            row.var_gamma = var_gamma(F, i, i);
            rows.push_back(std::move(row));
        }
        out.push_back(std::move(rows));
    }
    return out;
}

RhoResult rho_constants(const ChaosVector& F, int i, int j, int k) {
    const double v = var_gamma(F, i, j);
    if (!(v > 0.0)) throw std::domain_error("rho_constants: Var Gamma_ij vanishes");
    RhoResult r;
    const ChaosElement G = gamma_fold(F, {i, j});
    r.expectation = gamma_step_constant(G, F[k]);
    r.rho = r.expectation / std::sqrt(v);
    r.cumulant_ratio = joint_cumulant_labels(F, {i, j, k}) / std::sqrt(v);
    return r;
}

}  // namespace chaoslab

#include "chaoslab/majorizing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "chaoslab/parallel.hpp"

namespace chaoslab {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out slot s takes in slot perm[s]
std::vector<double> permute(const std::vector<double>& in, int q, int M, const std::vector<int>& perm) {
    bool ident = true;
    for (int s = 0; s < q; ++s) ident = ident && perm[s] == s;
    if (ident) return in;
    std::vector<std::size_t> stride(q), src(q);
    for (int s = 0; s < q; ++s) stride[s] = ipow(M, q - 1 - s);
    for (int s = 0; s < q; ++s) src[s] = stride[perm[s]];
    std::vector<double> out(in.size());
    std::vector<int> idx(q, 0);
    std::size_t so = 0;
    for (std::size_t o = 0; o < out.size(); ++o) {
        out[o] = in[so];
        for (int t = q - 1; t >= 0; --t) {
            if (++idx[t] < M) {
                so += src[t];
                break;
            }
            so -= src[t] * (M - 1);
            idx[t] = 0;
        }
    }
    return out;
}

}  // namespace

LabeledTensor LabeledTensor::from_kernel(const Kernel& k, std::vector<int> labels) {
    if (static_cast<int>(labels.size()) != k.order()) throw std::invalid_argument("label count != kernel order");
    LabeledTensor t;
    t.labels = std::move(labels);
    t.extent = k.dim();
    t.data = k.coeffs();
    return t;
}

double LabeledTensor::scalar() const {
    if (!labels.empty()) throw std::logic_error("tensor network did not reduce to a scalar");
    return data[0];
}

LabeledTensor tensordot(const LabeledTensor& A, const LabeledTensor& B, const std::string& what) {
    if (A.extent != B.extent) throw std::invalid_argument("tensordot: extent mismatch");
    const int M = A.extent;
    std::vector<int> freeA, freeB, shared, posA, posB;  // positions
    std::vector<int> sharedA, sharedB;
    for (std::size_t i = 0; i < A.labels.size(); ++i) {
        auto it = std::find(B.labels.begin(), B.labels.end(), A.labels[i]);
        if (it == B.labels.end()) {
            freeA.push_back(static_cast<int>(i));
        } else {
            sharedA.push_back(static_cast<int>(i));
            sharedB.push_back(static_cast<int>(it - B.labels.begin()));
        }
    }
    for (std::size_t j = 0; j < B.labels.size(); ++j)
        if (std::find(sharedB.begin(), sharedB.end(), static_cast<int>(j)) == sharedB.end())
            freeB.push_back(static_cast<int>(j));
    LabeledTensor out;
    out.extent = M;
    for (int i : freeA) out.labels.push_back(A.labels[i]);
    for (int j : freeB) out.labels.push_back(B.labels[j]);
    checked_size(static_cast<int>(out.labels.size()), M, what.c_str());

    std::vector<int> pa = freeA, pb = freeB;
    pa.insert(pa.end(), sharedA.begin(), sharedA.end());
    pb.insert(pb.end(), sharedB.begin(), sharedB.end());
    const std::vector<double> a = permute(A.data, static_cast<int>(A.labels.size()), M, pa);
    const std::vector<double> b = permute(B.data, static_cast<int>(B.labels.size()), M, pb);
    const Eigen::Index nA = ipow(M, freeA.size()), nB = ipow(M, freeB.size()), nS = ipow(M, sharedA.size());
    out.data.assign(nA * nB, 0.0);
    Eigen::Map<const RowMat> Am(a.data(), nA, nS), Bm(b.data(), nB, nS);
    Eigen::Map<RowMat> O(out.data.data(), nA, nB);
    O.noalias() = Am * Bm.transpose();
    return out;
}

double majorizing_integral(const MajorizingSpec& spec, EliminationOrder order) {
    const int q = spec.kernel.order(), r = spec.r, m = spec.m;
    if (r < 1 || r > q) throw std::invalid_argument("majorizing_integral: need 1 <= r <= q");
    if (m < 0 || m > q - r) throw std::invalid_argument("majorizing_integral: need 0 <= m <= q - r");
    const int v = q - r - m;
    int next = 0;
    auto group = [&next](int w) {
        std::vector<int> g(w);
        std::iota(g.begin(), g.end(), next);
        next += w;
        return g;
    };
    auto cat = [](std::initializer_list<std::vector<int>> parts) {
        std::vector<int> out;
        for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
        return out;
    };
    const auto ra12 = group(r), ra34 = group(r), rb12 = group(r), rb34 = group(r);
    const auto ma13 = group(m), ma24 = group(m), mb13 = group(m), mb24 = group(m);
    const auto v1 = group(v), v2 = group(v), v3 = group(v), v4 = group(v);
    const Kernel& f = spec.kernel;
    auto node = [&](std::vector<int> labels) { return LabeledTensor::from_kernel(f, std::move(labels)); };
    const LabeledTensor a1 = node(cat({ra12, ma13, v1})), a2 = node(cat({ra12, ma24, v2}));
    const LabeledTensor a3 = node(cat({ra34, ma13, v3})), a4 = node(cat({ra34, ma24, v4}));
    const LabeledTensor b1 = node(cat({rb12, mb13, v1})), b2 = node(cat({rb12, mb24, v2}));
    const LabeledTensor b3 = node(cat({rb34, mb13, v3})), b4 = node(cat({rb34, mb24, v4}));
    if (order == EliminationOrder::RowsFirst) {
        LabeledTensor top = tensordot(tensordot(a1, a2, "a1.a2"), tensordot(a3, a4, "a3.a4"), "top row");
        LabeledTensor bot = tensordot(tensordot(b1, b2, "b1.b2"), tensordot(b3, b4, "b3.b4"), "bottom row");
        return tensordot(top, bot, "top.bottom").scalar();
    }
    LabeledTensor c1 = tensordot(a1, b1, "a1.b1"), c2 = tensordot(a2, b2, "a2.b2");
    LabeledTensor c3 = tensordot(a3, b3, "a3.b3"), c4 = tensordot(a4, b4, "a4.b4");
    LabeledTensor left = tensordot(c1, c2, "columns 1-2"), right = tensordot(c3, c4, "columns 3-4");
    return tensordot(left, right, "left.right").scalar();
}

SplittingReport majorizing_bound_check(const SymKernel& fi, const SymKernel& fj, int r, int s) {
    const int qi = fi.order(), qj = fj.order();
    if (fi.dim() != fj.dim()) throw std::invalid_argument("majorizing_bound_check: dim mismatch");
    if (r < 1 || r > std::min(qi, qj) - (qi == qj ? 1 : 0))
        throw std::invalid_argument("majorizing_bound_check: r out of range");
    if (s < 1 || s > qi + qj - 2 * r - 1) throw std::invalid_argument("majorizing_bound_check: s out of range");
    SplittingReport rep;
    const SymKernel h = sym_contract(fi, fj, r);
    rep.g = contract(h, h, s).norm2();
    rep.g8 = std::pow(rep.g, 8);
    const int lo = std::max(0, s - (qj - r)), hi = std::min(s, qi - r);
    if (lo > hi) throw std::logic_error("majorizing_bound_check: no admissible splitting exponents");
    std::vector<double> pair(hi + 1, 0.0);
    for (int a = lo; a <= hi; ++a)
        pair[a] = majorizing_integral({fi, r, a}) * majorizing_integral({fj, r, s - a});
    std::vector<int> k(4, lo);
    double tightest = std::numeric_limits<double>::infinity();
    while (true) {
        double p = 1.0;
        for (int t = 0; t < 4; ++t) p *= pair[k[t]];
        ++rep.candidates;
        rep.best_bound = std::max(rep.best_bound, p);
        const bool ok = rep.g8 <= p * (1.0 + 1e-10) + 1e-300;
        if (ok && p < tightest) {
            tightest = p;
            rep.found = true;
            rep.bound = p;
            rep.split_i = k;
            rep.split_j.clear();
            for (int t = 0; t < 4; ++t) rep.split_j.push_back(s - k[t]);
        }
        int t = 3;
        while (t >= 0 && ++k[t] > hi) k[t--] = lo;
        if (t < 0) break;
    }
    return rep;
}

std::vector<ContractionConditionsRow> contraction_conditions(const std::vector<ChaosVector>& seq, int threads) {
    std::vector<ContractionConditionsRow> out(seq.size());
    parallel_for(seq.size(), threads, [&](std::size_t n) {
        const ChaosVector& F = seq[n];
        if (!F.pure()) throw std::invalid_argument("contraction_conditions: vectors must be pure");
        ContractionConditionsRow row;
        for (int i = 0; i < F.d(); ++i) {
            const SymKernel& f = F[i].kernel();
            const int q = f.order();
            double plain = 0, sym = 0, fourth = 0, maj = 0;
            for (int r = 1; r < q; ++r) {
                Kernel c = contract(f, f, r);
                double nc = norm(c);
                plain += nc;
                sym += norm(symmetrize(c));
                fourth += std::pow(nc, 4);
                for (int s = 1; s <= q - r - 1; ++s) maj += majorizing_integral({f, r, s});
            }
            row.contraction_sum += plain;
            double sr = plain > 0 ? sym / plain : 1.0;
            double mr = fourth > 0 ? maj / fourth : 0.0;
            row.sym_ratio.push_back(sr);
            row.majorizing_ratio.push_back(mr);
            row.hypotheses.push_back(sr >= 1e-2 && mr < 1.0);
        }
        out[n] = std::move(row);
    });
    return out;
}

}  // namespace chaoslab

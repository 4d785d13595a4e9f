#include "chaoslab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chaoslab {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::vector<int>> permutations(int q) {
    std::vector<int> p(q);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

const std::vector<std::vector<int>>& perm_table(int q) {
    static const std::vector<std::vector<std::vector<int>>> tables = [] {
        std::vector<std::vector<std::vector<int>>> t;
        for (int k = 0; k <= 8; ++k) t.push_back(permutations(k));
        return t;
    }();
    if (q < 0 || q > 8) throw std::invalid_argument("permutation table: order out of range");
    return tables[q];
}

// Accumulate alpha * (k with slots permuted by perm) into out.
// out(i_0..i_{q-1}) += alpha * k(i_perm[0], ..., i_perm[q-1])
void add_permuted(const Kernel& k, const std::vector<int>& perm, double alpha, std::vector<double>& out) {
    const int q = k.order();
    const std::size_t M = k.dim();
    std::vector<std::size_t> stride(q);
    for (int s = 0; s < q; ++s) stride[s] = ipow(M, q - 1 - s);
    // source stride for output slot s is the stride of slot perm[s] in k
    std::vector<std::size_t> src(q);
    for (int s = 0; s < q; ++s) src[s] = stride[perm[s]];
    std::vector<std::size_t> idx(q, 0);
    const double* kd = k.data();
    std::size_t so = 0;
    const std::size_t n = out.size();
    const std::size_t inner_stride = q ? src[q - 1] : 0;
    for (std::size_t o = 0; o < n; o += M) {
        // innermost slot loop unrolled
        std::size_t s = so;
        for (std::size_t i = 0; i < M; ++i, s += inner_stride) out[o + i] += alpha * kd[s];
        // advance slots q-2 .. 0
        for (int t = q - 2; t >= 0; --t) {
            if (++idx[t] < M) { so += src[t]; break; }
            so -= src[t] * (M - 1);
            idx[t] = 0;
        }
    }
}

}  // namespace

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

std::size_t checked_size(int order, int dim, const char* what) {
    if (order < 0) throw std::invalid_argument("negative tensor order");
    if (dim < 1) throw std::invalid_argument("tensor dim must be positive");
    double n = std::pow(static_cast<double>(dim), order);
    if (n > kMaxEntries)
        throw std::length_error(std::string(what) + ": " + std::to_string(dim) + "^" + std::to_string(order) +
                                " entries exceeds the dense size cap of 1e8");
    return ipow(dim, order);
}

Kernel::Kernel(int order, int dim) : q_(order), M_(dim), c_(checked_size(order, dim), 0.0) {}

Kernel::Kernel(int order, int dim, std::vector<double> coeffs) : q_(order), M_(dim), c_(std::move(coeffs)) {
    if (c_.size() != checked_size(order, dim))
        throw std::invalid_argument("kernel coeffs length " + std::to_string(c_.size()) + " != " +
                                    std::to_string(dim) + "^" + std::to_string(order));
}

Kernel Kernel::scalar(double v, int dim) {
    Kernel k(0, dim);
    k.c_[0] = v;
    return k;
}

std::size_t Kernel::offset(const std::vector<int>& idx) const {
    if (static_cast<int>(idx.size()) != q_) throw std::invalid_argument("index length != order");
    std::size_t o = 0;
    for (int i : idx) {
        if (i < 0 || i >= M_) throw std::out_of_range("kernel index out of range");
        o = o * M_ + i;
    }
    return o;
}

double Kernel::at(const std::vector<int>& idx) const { return c_[offset(idx)]; }
double& Kernel::at(const std::vector<int>& idx) { return c_[offset(idx)]; }

double Kernel::asymmetry() const {
    if (q_ < 2) return 0.0;
    double worst = 0.0;
    const auto& perms = perm_table(q_);
    std::vector<double> t(c_.size());
    for (std::size_t p = 1; p < perms.size(); ++p) {
        std::fill(t.begin(), t.end(), 0.0);
        add_permuted(*this, perms[p], 1.0, t);
        for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(t[i] - c_[i]));
    }
    return worst;
}

double Kernel::max_abs() const {
    double m = 0.0;
    for (double v : c_) m = std::max(m, std::abs(v));
    return m;
}

double Kernel::norm2() const {
    double s = 0.0;
    for (double v : c_) s += v * v;
    return s;
}

Kernel& Kernel::operator+=(const Kernel& o) {
    if (o.q_ != q_ || o.M_ != M_) throw std::invalid_argument("kernel shape mismatch in +");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Kernel& Kernel::operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
}

SymKernel::SymKernel(Kernel k, double tol) : Kernel(std::move(k)) {
    double dev = asymmetry();
    if (dev > tol * (1.0 + max_abs()))
        throw std::invalid_argument("kernel is not symmetric (max deviation " + std::to_string(dev) + ")");
}

SymKernel::SymKernel(int order, int dim, std::vector<double> coeffs, double tol)
    : SymKernel(Kernel(order, dim, std::move(coeffs)), tol) {}

SymKernel SymKernel::trusted(Kernel k) { return SymKernel(std::move(k), NoCheck{}); }

Kernel contract(const Kernel& f, const Kernel& g, int r) {
    if (f.dim() != g.dim()) throw std::invalid_argument("contract: dimension mismatch");
    if (r < 0 || r > std::min(f.order(), g.order()))
        throw std::invalid_argument("contract: r=" + std::to_string(r) + " out of range");
    const int M = f.dim();
    const int qo = f.order() + g.order() - 2 * r;
    checked_size(qo, M, "contraction result");
    Kernel out(qo, M);
    const Eigen::Index rows = ipow(M, f.order() - r), cols = ipow(M, g.order() - r), inner = ipow(M, r);
    Eigen::Map<const RowMat> F(f.data(), rows, inner);
    Eigen::Map<const RowMat> G(g.data(), cols, inner);
    Eigen::Map<RowMat> O(out.data(), rows, cols);
    O.noalias() = F * G.transpose();
    return out;
}

Kernel tensor_product(const Kernel& f, const Kernel& g) { return contract(f, g, 0); }

SymKernel symmetrize(const Kernel& k) {
    const int q = k.order();
    if (q < 2) return SymKernel::trusted(k);
    if (q == 2) {
        Eigen::Map<const RowMat> A(k.data(), k.dim(), k.dim());
        Kernel out(2, k.dim());
        Eigen::Map<RowMat> O(out.data(), k.dim(), k.dim());
        O = 0.5 * (A + A.transpose());
        return SymKernel::trusted(std::move(out));
    }
    const auto& perms = perm_table(q);
    std::vector<double> acc(k.size(), 0.0);
    const double w = 1.0 / perms.size();
    for (const auto& p : perms) add_permuted(k, p, w, acc);
    return SymKernel::trusted(Kernel(q, k.dim(), std::move(acc)));
}

SymKernel sym_contract(const Kernel& f, const Kernel& g, int r) { return symmetrize(contract(f, g, r)); }

double inner(const Kernel& f, const Kernel& g) {
    if (f.order() != g.order() || f.dim() != g.dim()) throw std::invalid_argument("inner: shape mismatch");
    double s = 0.0;
    const double* a = f.data();
    const double* b = g.data();
    for (std::size_t i = 0; i < f.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const Kernel& f) { return std::sqrt(f.norm2()); }

SymKernel basis_kernel(int dim, const std::vector<int>& idx) {
    Kernel k(static_cast<int>(idx.size()), dim);
    k.at(idx) = 1.0;
    return symmetrize(k);
}

Kernel apply_each_slot(const Kernel& k, const Mat& P) {
    if (P.rows() != k.dim() || P.cols() != k.dim()) throw std::invalid_argument("apply_each_slot: size mismatch");
    const int q = k.order();
    const Eigen::Index M = k.dim();
    // Transform the leading slot and rotate it to the back; q rotations restore slot order.
    Kernel cur = k;
    for (int s = 0; s < q; ++s) {
        const Eigen::Index tail = static_cast<Eigen::Index>(cur.size()) / M;
        Kernel next(q, k.dim());
        Eigen::Map<const RowMat> C(cur.data(), M, tail);
        Eigen::Map<RowMat> R(next.data(), tail, M);
        R.noalias() = C.transpose() * P.transpose();
        cur = std::move(next);
    }
    return cur;
}

Mat as_matrix(const Kernel& k) {
    if (k.order() != 2) throw std::invalid_argument("as_matrix: order must be 2");
    return Eigen::Map<const RowMat>(k.data(), k.dim(), k.dim());
}

SymKernel from_matrix(const Mat& A, double tol) {
    if (A.rows() != A.cols()) throw std::invalid_argument("from_matrix: not square");
    Kernel k(2, static_cast<int>(A.rows()));
    Eigen::Map<RowMat>(k.data(), A.rows(), A.cols()) = A;
    return SymKernel(std::move(k), tol);
}

GramBasis::GramBasis(Mat gram) : gram_(std::move(gram)) {
    const Eigen::Index n = gram_.rows();
    if (n == 0 || gram_.cols() != n) throw std::invalid_argument("gram must be square and nonempty");
    if ((gram_ - gram_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + gram_.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("gram is not symmetric");
    const double floor = 1e-12 * gram_.trace();
    Eigen::LLT<Mat> llt(gram_);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        L_ = llt.matrixL();
        for (Eigen::Index i = 0; i < n; ++i)
            if (L_(i, i) * L_(i, i) < floor) ok = false;
    }
    if (!ok) {
        Eigen::SelfAdjointEigenSolver<Mat> es(gram_, Eigen::EigenvaluesOnly);
        throw std::runtime_error("gram matrix is not positive definite above the pivot floor; smallest eigenvalue " +
                                 std::to_string(es.eigenvalues()(0)));
    }
}

double GramBasis::reconstruction_error() const {
    return (L_ * L_.transpose() - gram_).norm() / gram_.norm();
}

SymKernel to_orthonormal(const Kernel& family_coeffs, const GramBasis& basis) {
    if (family_coeffs.dim() != basis.size())
        throw std::invalid_argument("to_orthonormal: family size " + std::to_string(family_coeffs.dim()) +
                                    " != basis size " + std::to_string(basis.size()));
    // generator u = sum_k L(u,k) e_k, so orthonormal coefficient = L^T applied per slot
    Kernel out = apply_each_slot(family_coeffs, basis.whitener().transpose());
    return symmetrize(out);
}

}  // namespace chaoslab

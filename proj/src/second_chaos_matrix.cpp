#include "chaoslab/second_chaos_matrix.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "chaoslab/multiindex.hpp"

namespace chaoslab {

StepKernelMatrix::StepKernelMatrix(Mat A) : A_(std::move(A)) {
    if (A_.rows() == 0 || A_.rows() != A_.cols()) throw std::invalid_argument("step kernel matrix must be square");
    if ((A_ - A_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("step kernel matrix is not symmetric");
}

SymKernel StepKernelMatrix::to_kernel() const {
    Mat c = A_ / static_cast<double>(N());
    c = (0.5 * (c + c.transpose())).eval();
    return from_matrix(c);
}

MContraction m_contract(const StepKernelMatrix& A, const StepKernelMatrix& B) {
    if (A.N() != B.N()) throw std::invalid_argument("m_contract: size mismatch");
    MContraction r;
    r.contraction = A.A() * B.A() / static_cast<double>(A.N());
    r.symmetrized = 0.5 * (r.contraction + r.contraction.transpose());
    return r;
}

double m_inner(const StepKernelMatrix& A, const StepKernelMatrix& B) {
    if (A.N() != B.N()) throw std::invalid_argument("m_inner: size mismatch");
    const double N = A.N();
    return (A.A() * B.A().transpose()).trace() / (N * N);
}

double m_norm2(const Mat& M, int N) { return M.squaredNorm() / (static_cast<double>(N) * N); }

namespace {

double trace_power(const Mat& A, int m) {
    Mat P = A;
    for (int k = 1; k < m; ++k) P = P * A;
    return P.trace();
}

}  // namespace

double trace_cumulant(const StepKernelMatrix& A, int m) {
    if (m < 2 || m > 12) throw std::invalid_argument("trace_cumulant: 2 <= m <= 12");
    return std::pow(2.0, m - 1) * factorial(m - 1) * trace_power(A.A(), m) / std::pow(A.N(), m);
}

Vec checked_eigenvalues(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigen solver failed");
    const double scale = std::max(A.norm(), 1e-300);
    for (Eigen::Index k = 0; k < A.rows(); ++k) {
        double res = (A * es.eigenvectors().col(k) - es.eigenvalues()(k) * es.eigenvectors().col(k)).norm();
        if (res > 1e-10 * scale) throw std::runtime_error("eigenpair residual " + std::to_string(res) + " too large");
    }
    return es.eigenvalues();
}

double eigen_cumulant(const StepKernelMatrix& A, int m) {
    if (m < 2) throw std::invalid_argument("eigen_cumulant: m >= 2");
    Vec lam = checked_eigenvalues(A.A()) / static_cast<double>(A.N());
    return std::pow(2.0, m - 1) * factorial(m - 1) * lam.array().pow(m).sum();
}

RatioResult ratio_bound(const StepKernelMatrix& A) {
    const double t4 = trace_power(A.A(), 4);
    if (!(t4 > 0.0)) throw std::invalid_argument("ratio_bound: zero matrix");
    RatioResult r;
    r.ratio = trace_power(A.A(), 8) / (t4 * t4);
    const double k4 = trace_cumulant(A, 4), k8 = trace_cumulant(A, 8);
    r.kappa_ratio = 36.0 / (2.0 * factorial(7)) * k8 / (k4 * k4);
    r.meets_half = r.ratio >= 0.5 - 1e-12;
    return r;
}

std::vector<ObstructionRow> obstruction_family(const std::vector<int>& sizes, ObstructionFamily fam,
                                               unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<ObstructionRow> out;
    for (int N : sizes) {
        if (N < 2) throw std::invalid_argument("obstruction_family: sizes must be >= 2");
        Mat A = Mat::Identity(N, N);
        if (fam == ObstructionFamily::RandomSign)
            for (int i = 0; i < N; ++i) A(i, i) = coin(rng) ? 1.0 : -1.0;
        StepKernelMatrix S(A);
        ObstructionRow row;
        row.N = N;
        row.kappa4 = trace_cumulant(S, 4);
        RatioResult rr = ratio_bound(S);
        row.ratio = rr.ratio;
        row.meets_half = rr.meets_half;
        out.push_back(row);
    }
    return out;
}

}  // namespace chaoslab

#pragma once

#include <vector>

#include "chaoslab/tensor.hpp"

namespace chaoslab {

// Second-chaos kernel constant on the N x N sectors of [0,1]^2, value a_ij on sector (i,j).
class StepKernelMatrix {
public:
    explicit StepKernelMatrix(Mat A);
    int N() const { return static_cast<int>(A_.rows()); }
    const Mat& A() const { return A_; }
    // coefficients on the orthonormal basis sqrt(N) 1_{[k/N,(k+1)/N)}
    SymKernel to_kernel() const;

private:
    Mat A_;
};

struct MContraction {
    Mat contraction;  // (1/N) A B
    Mat symmetrized;  // symmetric part of the contraction
};
MContraction m_contract(const StepKernelMatrix& A, const StepKernelMatrix& B);
double m_inner(const StepKernelMatrix& A, const StepKernelMatrix& B);  // tr(A B^T)/N^2
// ||M||^2 of a contraction matrix in function space: sum M_ij^2 / N^2
double m_norm2(const Mat& M, int N);

// kappa_m(I_2(f)) = 2^{m-1} (m-1)! tr(A^m) / N^m
double trace_cumulant(const StepKernelMatrix& A, int m);
// same through the eigenvalues of A/N
double eigen_cumulant(const StepKernelMatrix& A, int m);
// eigenvalues with residual check |A v - l v| <= 1e-10 |A|
Vec checked_eigenvalues(const Mat& A);

struct RatioResult {
    double ratio = 0;       // tr(A^8) / tr(A^4)^2
    double kappa_ratio = 0; // (3!^2 / (2 * 7!)) kappa_8 / kappa_4^2 (equals ratio)
    bool meets_half = false;  // ratio >= 1/2 - 1e-12
};
RatioResult ratio_bound(const StepKernelMatrix& A);

struct ObstructionRow {
    int N = 0;
    double kappa4 = 0;
    double ratio = 0;
    bool meets_half = false;
};
enum class ObstructionFamily { Identity, RandomSign };
std::vector<ObstructionRow> obstruction_family(const std::vector<int>& sizes, ObstructionFamily fam,
                                               unsigned long long seed = 1);

}  // namespace chaoslab

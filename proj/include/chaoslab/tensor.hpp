#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chaoslab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Hard limit on dense tensor entries.
inline constexpr double kMaxEntries = 1e8;

std::size_t ipow(std::size_t base, int exp);
// Throws std::length_error naming `what` when M^q exceeds the cap.
std::size_t checked_size(int order, int dim, const char* what = "tensor");

// Dense order-q tensor over R^M, row-major. Order 0 holds a single scalar.
class Kernel {
public:
    Kernel() : c_(1, 0.0) {}
    Kernel(int order, int dim);
    Kernel(int order, int dim, std::vector<double> coeffs);

    static Kernel scalar(double v, int dim = 1);

    int order() const { return q_; }
    int dim() const { return M_; }
    std::size_t size() const { return c_.size(); }

    const std::vector<double>& coeffs() const { return c_; }
    std::vector<double>& coeffs() { return c_; }
    double* data() { return c_.data(); }
    const double* data() const { return c_.data(); }
    double operator[](std::size_t i) const { return c_[i]; }
    double& operator[](std::size_t i) { return c_[i]; }

    double at(const std::vector<int>& idx) const;
    double& at(const std::vector<int>& idx);
    std::size_t offset(const std::vector<int>& idx) const;

    // max |k(i) - k(pi i)| over all slot permutations
    double asymmetry() const;
    double max_abs() const;
    double norm2() const;

    Kernel& operator+=(const Kernel& o);
    Kernel& operator*=(double s);
    friend Kernel operator+(Kernel a, const Kernel& b) { return a += b; }
    friend Kernel operator*(double s, Kernel a) { return a *= s; }

protected:
    int q_ = 0;
    int M_ = 1;
    std::vector<double> c_;
};

// Kernel validated to be invariant under slot permutations.
class SymKernel : public Kernel {
public:
    SymKernel() = default;
    SymKernel(int order, int dim) : Kernel(order, dim) {}
    // tol is relative: max deviation <= tol * (1 + max|coeff|)
    explicit SymKernel(Kernel k, double tol = 0.0);
    SymKernel(int order, int dim, std::vector<double> coeffs, double tol = 0.0);

    // Skip validation; caller guarantees symmetry (e.g. output of symmetrize).
    static SymKernel trusted(Kernel k);

    SymKernel& operator+=(const SymKernel& o) { Kernel::operator+=(o); return *this; }
    SymKernel& operator*=(double s) { Kernel::operator*=(s); return *this; }
    friend SymKernel operator+(SymKernel a, const SymKernel& b) { return a += b; }
    friend SymKernel operator*(double s, SymKernel a) { return a *= s; }

private:
    struct NoCheck {};
    SymKernel(Kernel k, NoCheck) : Kernel(std::move(k)) {}
};

// f (x)_r g: contracts the last r slots of f with the last r slots of g.
Kernel contract(const Kernel& f, const Kernel& g, int r);
Kernel tensor_product(const Kernel& f, const Kernel& g);
SymKernel symmetrize(const Kernel& k);
// symmetrize(contract(f,g,r)) with shortcuts for orders <= 1 and q=2 matrices
SymKernel sym_contract(const Kernel& f, const Kernel& g, int r);

double inner(const Kernel& f, const Kernel& g);
double norm(const Kernel& f);

// Symmetric basis tensor e_{i1} (.) ... (.) e_{iq}, unit-normalized coefficients
// averaged over permutations (so the plain product e_i (x) e_j symmetrized).
SymKernel basis_kernel(int dim, const std::vector<int>& idx);

// Mode product: apply P (n_out x n_in) to every slot.
Kernel apply_each_slot(const Kernel& k, const Mat& P);

// View order-2 kernels as matrices.
Mat as_matrix(const Kernel& k);
SymKernel from_matrix(const Mat& A, double tol = 0.0);

class GramBasis {
public:
    explicit GramBasis(Mat gram);
    int size() const { return static_cast<int>(gram_.rows()); }
    const Mat& gram() const { return gram_; }
    // lower triangular, whitener * whitener^T = gram
    const Mat& whitener() const { return L_; }
    double reconstruction_error() const;

private:
    Mat gram_;
    Mat L_;
};

// Coefficients over a generating family -> orthonormal coordinates.
SymKernel to_orthonormal(const Kernel& family_coeffs, const GramBasis& basis);

}  // namespace chaoslab

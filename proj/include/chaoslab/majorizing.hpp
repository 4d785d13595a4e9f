#pragma once

#include <string>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/tensor.hpp"

namespace chaoslab {

// Dense tensor with one label per leg; all legs share the same extent.
struct LabeledTensor {
    std::vector<int> labels;
    int extent = 1;
    std::vector<double> data;

    static LabeledTensor from_kernel(const Kernel& k, std::vector<int> labels);
    double scalar() const;
};

// Sum over labels present in both operands; result legs are A's free legs then B's.
LabeledTensor tensordot(const LabeledTensor& A, const LabeledTensor& B, const std::string& what = "tensordot");

struct MajorizingSpec {
    SymKernel kernel;
    int r = 1;
    int m = 0;
};

enum class EliminationOrder { RowsFirst, ColumnsFirst };

// Eight copies of f: top a1..a4, bottom b1..b4; r-edges a1a2, a3a4, b1b2, b3b4;
// m-edges a1a3, a2a4, b1b3, b2b4; (q-r-m)-edges a_k b_k.
// r = q is accepted (then m = 0 and the value is |f|^8).
double majorizing_integral(const MajorizingSpec& spec, EliminationOrder order = EliminationOrder::RowsFirst);

struct SplittingReport {
    double g = 0;  // |(f_i ~x_r f_j) x_s (f_i ~x_r f_j)|^2
    double g8 = 0;
    bool found = false;
    std::vector<int> split_i;  // a_k, k = 1..4: M_r(f_i, a_k)
    std::vector<int> split_j;  // s - a_k
    double bound = 0;           // product for the reported splitting
    double best_bound = 0;      // largest product over all splittings
    int candidates = 0;
};
// Exhaustive search; reports the tightest valid splitting (smallest product >= g^8).
SplittingReport majorizing_bound_check(const SymKernel& fi, const SymKernel& fj, int r, int s);

struct ContractionConditionsRow {
    double contraction_sum = 0;          // sum_i sum_r |f_i x_r f_i|
    std::vector<double> sym_ratio;       // per component: sum |f ~x_r f| / sum |f x_r f|
    std::vector<double> majorizing_ratio;  // per component: sum_r sum_s M_r(f,s) / sum_r |f x_r f|^4
    std::vector<bool> hypotheses;        // per component flag
};
std::vector<ContractionConditionsRow> contraction_conditions(const std::vector<ChaosVector>& seq, int threads = 1);

}  // namespace chaoslab

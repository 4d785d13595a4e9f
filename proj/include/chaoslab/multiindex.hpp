#pragma once

#include <compare>
#include <string>
#include <vector>

namespace chaoslab {

struct MultiIndex {
    std::vector<int> e;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries);
    static MultiIndex zero(int d) { return MultiIndex(std::vector<int>(d, 0)); }
    static MultiIndex unit(int d, int i);
    // multiplicities of the given coordinate labels
    static MultiIndex from_labels(int d, const std::vector<int>& labels);

    int dim() const { return static_cast<int>(e.size()); }
    int order() const;
    int operator[](int i) const { return e[i]; }
    // elementary decomposition as sorted coordinate labels, e.g. (2,1) -> {0,0,1}
    std::vector<int> labels() const;
    double factorial() const;  // alpha!

    MultiIndex operator+(const MultiIndex& o) const;
    auto operator<=>(const MultiIndex&) const = default;
    std::string str() const;
};

// All multi-indices of dimension d and exact order n.
std::vector<MultiIndex> multi_indices(int d, int n);

// Set partitions of {0..n-1}; blocks listed with increasing first element. n <= 8.
using Partition = std::vector<std::vector<int>>;
const std::vector<Partition>& set_partitions(int n);
// Perfect matchings of {0..n-1} (pair partitions). n <= 8.
const std::vector<Partition>& pair_partitions(int n);

double factorial(int n);
double binomial(int n, int k);

}  // namespace chaoslab

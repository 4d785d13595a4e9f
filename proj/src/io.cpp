#include "chaoslab/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace chaoslab {

namespace {

const Json& need(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + "." + key, "missing");
    return j.at(key);
}

int need_int(const Json& j, const char* key, const std::string& where, int lo, int hi) {
    const Json& v = need(j, key, where);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key, "must be an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
        throw ConfigError(where + "." + key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
}

double number(const Json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where, "must be finite");
    return x;
}

SymKernel symmetrize_checked(const Kernel& k, const std::string& where, std::vector<std::string>* warnings) {
    const double asym = k.asymmetry() / (1.0 + k.max_abs());
    if (asym > 1e-8) throw ConfigError(where, "kernel is not symmetric (relative asymmetry " + std::to_string(asym) + ")");
    if (asym > 1e-12 && warnings)
        warnings->push_back(where + ": symmetrized input with relative asymmetry " + std::to_string(asym));
    return symmetrize(k);
}

}  // namespace

Mat matrix_from_json(const Json& j, const std::string& where, std::vector<std::string>* warnings) {
    if (!j.is_array() || j.empty()) throw ConfigError(where, "must be a nonempty array of rows");
    const std::size_t n = j.size();
    Mat m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::string wr = where + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != n) throw ConfigError(wr, "row must have " + std::to_string(n) + " entries");
        for (std::size_t c = 0; c < n; ++c) m(r, c) = number(j[r][c], wr + "[" + std::to_string(c) + "]");
    }
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff() / (1.0 + m.cwiseAbs().maxCoeff());
    if (asym > 1e-8) throw ConfigError(where, "matrix is not symmetric (relative asymmetry " + std::to_string(asym) + ")");
    if (asym > 1e-12 && warnings)
        warnings->push_back(where + ": symmetrized input with relative asymmetry " + std::to_string(asym));
    return 0.5 * (m + m.transpose());
}

SymKernel kernel_from_json(const Json& j, const std::string& where, std::vector<std::string>* warnings) {
    if (j.is_object() && j.contains("matrix")) {
        Mat m = matrix_from_json(j.at("matrix"), where + ".matrix", warnings);
        return from_matrix(m, 1e-12);
    }
    const int q = need_int(j, "order", where, 0, 12);
    const int M = need_int(j, "dim", where, 1, 1 << 20);
    const Json& c = need(j, "coeffs", where);
    std::size_t size;
    try {
        size = checked_size(q, M, where.c_str());
    } catch (const std::length_error& e) {
        throw ConfigError(where, e.what());
    }
    if (!c.is_array() || c.size() != size)
        throw ConfigError(where + ".coeffs", "expected " + std::to_string(size) + " numbers");
    std::vector<double> v(size);
    for (std::size_t i = 0; i < size; ++i) v[i] = number(c[i], where + ".coeffs[" + std::to_string(i) + "]");
    return symmetrize_checked(Kernel(q, M, std::move(v)), where, warnings);
}

ChaosVector chaos_vector_from_json(const Json& j, std::vector<std::string>* warnings) {
    if (!j.is_object()) throw ConfigError("vector", "must be an object");
    std::vector<ChaosElement> comps;
    if (j.contains("kernels") && !j.contains("components")) {
        const Json& ks = j.at("kernels");
        if (!ks.is_array() || ks.empty()) throw ConfigError("kernels", "must be a nonempty array");
        for (std::size_t i = 0; i < ks.size(); ++i)
            comps.push_back(ChaosElement::integral(kernel_from_json(ks[i], "kernels[" + std::to_string(i) + "]", warnings)));
    } else {
        const Json& cs = need(j, "components", "vector");
        if (!cs.is_array() || cs.empty()) throw ConfigError("components", "must be a nonempty array");
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const std::string w = "components[" + std::to_string(i) + "]";
            const Json& ks = need(cs[i], "kernels", w);
            if (!ks.is_array()) throw ConfigError(w + ".kernels", "must be an array");
            int dim = -1;
            ChaosElement el;
            for (std::size_t k = 0; k < ks.size(); ++k) {
                SymKernel f = kernel_from_json(ks[k], w + ".kernels[" + std::to_string(k) + "]", warnings);
                if (dim < 0) {
                    dim = f.dim();
                    el = ChaosElement(dim);
                }
                if (f.dim() != dim) throw ConfigError(w, "kernels have different dimensions");
                el.add(f);
            }
            if (cs[i].contains("constant")) el.constant += number(cs[i].at("constant"), w + ".constant");
            comps.push_back(el);
        }
    }
    try {
        return ChaosVector(std::move(comps));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("vector", e.what());
    }
}

Json kernel_to_json(const Kernel& k) { return Json{{"order", k.order()}, {"dim", k.dim()}, {"coeffs", k.coeffs()}}; }

Json chaos_vector_to_json(const ChaosVector& F) {
    Json comps = Json::array();
    for (const auto& c : F.components) {
        Json ks = Json::array();
        for (const auto& [q, f] : c.terms) ks.push_back(kernel_to_json(f));
        comps.push_back(Json{{"constant", c.constant}, {"kernels", ks}});
    }
    return Json{{"dim", F.dim}, {"components", comps}};
}

Json matrix_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open file");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace chaoslab

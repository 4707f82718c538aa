#include "nsssm/polynomial.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace nsssm {

namespace {

// exponent vectors of exactly degree k, first exponent descending
void enumerate(int dim, int k, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
    if (pos == dim - 1) {
        cur[pos] = k;
        out.push_back(cur);
        return;
    }
    for (int e = k; e >= 0; --e) {
        cur[pos] = e;
        enumerate(dim, k - e, cur, pos + 1, out);
    }
}

}  // namespace

MonomialBasis::MonomialBasis(int dim, int lo, int hi) : dim_(dim), lo_(lo), hi_(hi) {
    if (dim < 1 || lo < 0 || hi < lo) throw PreconditionError("invalid monomial basis");
    for (int k = lo; k <= hi; ++k) {
        MultiIndex cur(dim, 0);
        enumerate(dim, k, cur, 0, exps_);
    }
}

int MonomialBasis::find(const MultiIndex& p) const {
    for (int i = 0; i < size(); ++i) {
        if (exps_[i] == p) return i;
    }
    return -1;
}

Vec MonomialBasis::evaluate(const Vec& x) const {
    // powers table
    Mat pw(dim_, hi_ + 1);
    for (int j = 0; j < dim_; ++j) {
        pw(j, 0) = 1.0;
        for (int e = 1; e <= hi_; ++e) pw(j, e) = pw(j, e - 1) * x[j];
    }
    Vec out(size());
    for (int i = 0; i < size(); ++i) {
        double v = 1.0;
        for (int j = 0; j < dim_; ++j) v *= pw(j, exps_[i][j]);
        out[i] = v;
    }
    return out;
}

Mat MonomialBasis::jacobian(const Vec& x) const {
    Mat pw(dim_, hi_ + 1);
    for (int j = 0; j < dim_; ++j) {
        pw(j, 0) = 1.0;
        for (int e = 1; e <= hi_; ++e) pw(j, e) = pw(j, e - 1) * x[j];
    }
    Mat jac = Mat::Zero(size(), dim_);
    for (int i = 0; i < size(); ++i) {
        for (int k = 0; k < dim_; ++k) {
            const int ek = exps_[i][k];
            if (ek == 0) continue;
            double v = ek * pw(k, ek - 1);
            for (int j = 0; j < dim_; ++j) {
                if (j != k) v *= pw(j, exps_[i][j]);
            }
            jac(i, k) = v;
        }
    }
    return jac;
}

Mat MonomialBasis::evaluate_columns(const Mat& xs) const {
    Mat out(size(), xs.cols());
    for (Eigen::Index c = 0; c < xs.cols(); ++c) out.col(c) = evaluate(xs.col(c));
    return out;
}

int degree(const MultiIndex& p) { return std::accumulate(p.begin(), p.end(), 0); }

std::string to_key(const MultiIndex& p) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) os << ',';
        os << p[i];
    }
    os << ')';
    return os.str();
}

MultiIndex from_key(const std::string& key) {
    if (key.size() < 3 || key.front() != '(' || key.back() != ')') {
        throw ConfigError("malformed multi-index key '" + key + "'");
    }
    MultiIndex p;
    std::istringstream is(key.substr(1, key.size() - 2));
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
            p.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("malformed multi-index key '" + key + "'");
        }
    }
    if (p.empty()) throw ConfigError("empty multi-index key");
    return p;
}

int monomial_count(int dim, int lo, int hi) { return MonomialBasis(dim, lo, hi).size(); }

}  // namespace nsssm

// banded.hpp — Band-structured complex matrices.
//
// Every operator appearing in the bilinear master equation is built from a
// and a† and has bandwidth <= 2 in the Fock basis, so multiplying a density
// matrix by one of them costs O((2*bw+1) N^2) instead of O(N^3). Diagonals
// are stored densely; offset k holds entries B(i, i+k).

#pragma once

#include <complex>
#include <cstdlib>
#include <vector>

#include <Eigen/Dense>

namespace qbm {

class Banded {
public:
    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;

    Banded() = default;
    Banded(int n, int bw) : n_(n), bw_(bw), diags_(2 * bw + 1) {
        for (int k = -bw; k <= bw; ++k) diags_[k + bw] = Vec::Zero(n - std::abs(k));
    }

    static Banded from_dense(const Mat& m, int bw) {
        Banded b(static_cast<int>(m.rows()), bw);
        for (int k = -bw; k <= bw; ++k) {
            const int i0 = std::max(0, -k);
            const int len = b.n_ - std::abs(k);
            for (int i = 0; i < len; ++i) b.diags_[k + bw](i) = m(i0 + i, i0 + i + k);
        }
        return b;
    }

    int size() const { return n_; }
    int bandwidth() const { return bw_; }

    void set_zero() {
        for (auto& d : diags_) d.setZero();
    }

    // this += coeff * other (other's bandwidth must not exceed ours)
    void add_scaled(std::complex<double> coeff, const Banded& other) {
        for (int k = -other.bw_; k <= other.bw_; ++k)
            diags_[k + bw_] += coeff * other.diags_[k + other.bw_];
    }

    // out = B * X
    void apply_left(const Mat& x, Mat& out) const {
        out.setZero();
        const auto cols = x.cols();
        for (int k = -bw_; k <= bw_; ++k) {
            const int i0 = std::max(0, -k);
            const int j0 = std::max(0, k);
            const int len = n_ - std::abs(k);
            const Vec& d = diags_[k + bw_];
            for (Eigen::Index c = 0; c < cols; ++c)
                out.col(c).segment(i0, len) += d.cwiseProduct(x.col(c).segment(j0, len));
        }
    }

    // out = X * B
    void apply_right(const Mat& x, Mat& out) const {
        out.setZero();
        for (int k = -bw_; k <= bw_; ++k) {
            const int i0 = std::max(0, -k);
            const int len = n_ - std::abs(k);
            const Vec& d = diags_[k + bw_];
            for (int r = 0; r < len; ++r) out.col(i0 + r + k) += d(r) * x.col(i0 + r);
        }
    }

    // out = B * v for a vector
    void apply(const Vec& v, Vec& out) const {
        out.setZero();
        for (int k = -bw_; k <= bw_; ++k) {
            const int i0 = std::max(0, -k);
            const int j0 = std::max(0, k);
            const int len = n_ - std::abs(k);
            out.segment(i0, len) += diags_[k + bw_].cwiseProduct(v.segment(j0, len));
        }
    }

    // Tr(B * X)
    std::complex<double> trace_prod(const Mat& x) const {
        std::complex<double> acc{0.0, 0.0};
        for (int k = -bw_; k <= bw_; ++k) {
            const int i0 = std::max(0, -k);
            const int len = n_ - std::abs(k);
            const Vec& d = diags_[k + bw_];
            for (int r = 0; r < len; ++r) acc += d(r) * x(i0 + r + k, i0 + r);
        }
        return acc;
    }

    Mat to_dense() const {
        Mat m = Mat::Zero(n_, n_);
        for (int k = -bw_; k <= bw_; ++k) {
            const int i0 = std::max(0, -k);
            const int len = n_ - std::abs(k);
            for (int r = 0; r < len; ++r) m(i0 + r, i0 + r + k) = diags_[k + bw_](r);
        }
        return m;
    }

private:
    int n_ = 0;
    int bw_ = 0;
    std::vector<Vec> diags_;
};

} // namespace qbm

#ifndef MEXPAND_DILATION_HPP
#define MEXPAND_DILATION_HPP

#include <optional>

#include <Eigen/Eigenvalues>

#include "mexpand/core.hpp"

namespace mexpand {

/// Spectral norm (largest singular value) by power iteration on A^T A.
inline double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  const Mat g = a.transpose() * a;
  Vec v = Vec::Ones(g.cols());
  // A fixed non-symmetric start avoids landing in an invariant subspace.
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += 0.1 * static_cast<double>(i + 1);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = g * v;
    const double n = w.norm();
    if (n == 0.0) return 0.0;
    const double next = v.dot(w);
    w /= n;
    const bool done = std::fabs(next - lambda) <= 1e-16 * std::fabs(next) && (w - v).norm() < 1e-12;
    v = w;
    lambda = next;
    if (done) break;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

/// Eigenvalues of a small real matrix: closed-form characteristic polynomial
/// for d <= 2, shifted QR iteration (real Schur form) otherwise.
inline std::vector<cplx> eigenvalues(const Mat& a) {
  const Eigen::Index d = a.rows();
  if (d == 1) return {cplx(a(0, 0))};
  if (d == 2) {
    const double tr = a(0, 0) + a(1, 1);
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    const cplx disc = std::sqrt(cplx(tr * tr - 4.0 * det));
    // Stable pairing: the larger root first, the other from the product.
    const cplx r1 = 0.5 * (tr + (tr >= 0 ? disc : -disc));
    const cplx r2 = (std::abs(r1) > 0.0) ? cplx(det) / r1 : 0.5 * (tr - disc);
    return {r1, r2};
  }
  Eigen::EigenSolver<Mat> es(a, false);
  if (es.info() != Eigen::Success) throw AccuracyFailure("QR iteration did not converge", 1.0);
  std::vector<cplx> out;
  for (Eigen::Index i = 0; i < d; ++i) out.push_back(es.eigenvalues()[i]);
  return out;
}

/// A d x d expanding matrix M together with the quantities the expansions
/// need: m = |det M|, eigenvalue magnitudes, isotropy, and the rate parameter
/// (any positive number below every eigenvalue magnitude).
class Dilation {
 public:
  explicit Dilation(Mat entries, std::optional<double> rate = std::nullopt) : m_(std::move(entries)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw InvalidSpec("dilation must be a non-empty square matrix");
    if (!m_.allFinite()) throw InvalidSpec("dilation entries must be finite");
    integer_ = true;
    for (Eigen::Index i = 0; i < m_.size(); ++i)
      if (m_.data()[i] != std::round(m_.data()[i])) integer_ = false;

    for (const cplx& e : eigenvalues(m_)) eig_mags_.push_back(std::abs(e));
    std::sort(eig_mags_.begin(), eig_mags_.end());
    for (double v : eig_mags_)
      if (!(v > 1.0)) throw InvalidSpec("dilation is not expanding: eigenvalue magnitude " + std::to_string(v) + " <= 1");

    det_mag_ = std::fabs(m_.determinant());
    double prod = 1.0;
    for (double v : eig_mags_) prod *= v;
    if (std::fabs(prod - det_mag_) > 1e-9 * det_mag_)
      throw AccuracyFailure("eigenvalue magnitudes inconsistent with |det M|", std::fabs(prod - det_mag_) / det_mag_);

    isotropic_ = (eig_mags_.back() - eig_mags_.front()) <= 1e-9 * eig_mags_.back();
    rate_ = rate.value_or(0.99 * eig_mags_.front());
    if (!(rate_ > 0.0 && rate_ < eig_mags_.front()))
      throw InvalidSpec("rate must lie in (0, min |eigenvalue|)");
  }

  static Dilation scalar(int d, double s) { return Dilation(s * Mat::Identity(d, d)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  double det_mag() const { return det_mag_; }
  /// Ascending.
  const std::vector<double>& eig_mags() const { return eig_mags_; }
  double min_eig_mag() const { return eig_mags_.front(); }
  double max_eig_mag() const { return eig_mags_.back(); }
  bool isotropic() const { return isotropic_; }
  double rate() const { return rate_; }
  bool integer_entries() const { return integer_; }

  /// M^j for any integer j. Integer matrices use exact integer products for
  /// |j| <= 20 (negative powers invert the exact positive power).
  Mat power(int j) const { return power_of(m_, j); }

  /// (M^*)^j, the adjoint power.
  Mat adjoint_power(int j) const { return power_of(Mat(m_.transpose()), j); }

 private:
  Mat power_of(const Mat& base, int j) const {
    const int n = std::abs(j);
    const Eigen::Index d = base.rows();
    Mat pos;
    bool done = false;
    if (integer_ && n <= 20) {
      using I = __int128;
      std::vector<I> b(d * d), r(d * d, 0);
      for (Eigen::Index i = 0; i < d; ++i) {
        r[i * d + i] = 1;
        for (Eigen::Index k = 0; k < d; ++k) b[i * d + k] = static_cast<I>(base(i, k));
      }
      const I limit = static_cast<I>(1) << 100;
      bool overflow = false;
      for (int s = 0; s < n && !overflow; ++s) {
        std::vector<I> t(d * d, 0);
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index k = 0; k < d; ++k) {
            I acc = 0;
            for (Eigen::Index l = 0; l < d; ++l) acc += r[i * d + l] * b[l * d + k];
            if (acc > limit || acc < -limit) overflow = true;
            t[i * d + k] = acc;
          }
        r = std::move(t);
      }
      if (!overflow) {
        pos.resize(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index k = 0; k < d; ++k) pos(i, k) = static_cast<double>(r[i * d + k]);
        done = true;
      }
    }
    if (!done) {
      pos = Mat::Identity(d, d);
      for (int s = 0; s < n; ++s) pos = pos * base;
    }
    if (j >= 0) return pos;
    return pos.fullPivLu().inverse();
  }

  Mat m_;
  bool integer_ = false;
  double det_mag_ = 0.0;
  std::vector<double> eig_mags_;
  bool isotropic_ = false;
  double rate_ = 0.0;
};

}  // namespace mexpand

#endif  // MEXPAND_DILATION_HPP

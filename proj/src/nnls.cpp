#include "stream_ot/nnls.hpp"

#include <cmath>
#include <vector>

#include "stream_ot/error.hpp"

namespace stream_ot {

namespace {

// Thin QR of the active columns, kept up to date as columns enter and leave.
class ActiveQr {
 public:
  ActiveQr(Eigen::Index rows, const Eigen::VectorXd& b)
      : q_(rows, 0), r_(0, 0), qtb_(0), b_(b) {
    const Eigen::Index cap = rows;
    q_.resize(rows, cap);
    r_.setZero(cap, cap);
    qtb_.setZero(cap);
  }

  Eigen::Index size() const { return k_; }

  // Appends a column; false if it is numerically dependent on the others.
  bool add(const Eigen::Ref<const Eigen::VectorXd>& col) {
    if (k_ == q_.cols()) return false;
    const double norm0 = col.norm();
    if (norm0 == 0.0) return false;
    Eigen::VectorXd v = col;
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(k_);
    for (int pass = 0; pass < 2; ++pass) {
      if (k_ == 0) break;
      const Eigen::VectorXd c = q_.leftCols(k_).transpose() * v;
      v.noalias() -= q_.leftCols(k_) * c;
      coef += c;
    }
    const double rnew = v.norm();
    if (rnew <= 1e-12 * norm0) return false;
    q_.col(k_) = v / rnew;
    r_.col(k_).head(k_) = coef;
    r_(k_, k_) = rnew;
    qtb_(k_) = q_.col(k_).dot(b_);
    ++k_;
    return true;
  }

  void remove(Eigen::Index p) {
    for (Eigen::Index j = p; j + 1 < k_; ++j) r_.col(j).head(k_) = r_.col(j + 1).head(k_);
    r_.col(k_ - 1).setZero();
    for (Eigen::Index i = p; i + 1 < k_; ++i) {
      const double a = r_(i, i);
      const double bb = r_(i + 1, i);
      const double h = std::hypot(a, bb);
      if (h == 0.0) continue;
      const double c = a / h;
      const double s = bb / h;
      for (Eigen::Index j = i; j + 1 < k_; ++j) {
        const double x = r_(i, j);
        const double y = r_(i + 1, j);
        r_(i, j) = c * x + s * y;
        r_(i + 1, j) = -s * x + c * y;
      }
      r_(i + 1, i) = 0.0;
      const Eigen::VectorXd qi = q_.col(i);
      q_.col(i) = c * qi + s * q_.col(i + 1);
      q_.col(i + 1) = -s * qi + c * q_.col(i + 1);
      const double t = qtb_(i);
      qtb_(i) = c * t + s * qtb_(i + 1);
      qtb_(i + 1) = -s * t + c * qtb_(i + 1);
    }
    --k_;
    r_.row(k_).setZero();
    qtb_(k_) = 0.0;
  }

  Eigen::VectorXd solve() const {
    return r_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>().solve(qtb_.head(k_));
  }

 private:
  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
  Eigen::VectorXd qtb_;
  const Eigen::VectorXd& b_;
  Eigen::Index k_ = 0;
};

}  // namespace

double default_nnls_tolerance(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const double col = a.size() == 0 ? 0.0 : a.colwise().norm().maxCoeff();
  return 1e-12 * col * b.norm();
}

NnlsResult nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double tol,
                std::size_t max_iterations) {
  if (a.rows() != b.size()) throw Error(Errc::alignment, "nnls: rows of A and b differ");
  const Eigen::Index n = a.cols();
  NnlsResult out;
  out.x = Eigen::VectorXd::Zero(n);
  out.tolerance = tol > 0.0 ? tol : default_nnls_tolerance(a, b);
  const std::size_t cap = max_iterations > 0 ? max_iterations : 3 * static_cast<std::size_t>(n);

  std::vector<Eigen::Index> active;
  std::vector<char> in_active(static_cast<std::size_t>(n), 0);
  std::vector<char> blocked(static_cast<std::size_t>(n), 0);
  ActiveQr qr(a.rows(), b);
  Eigen::VectorXd resid = b;
  Eigen::VectorXd w = a.transpose() * resid;

  while (true) {
    Eigen::Index j = -1;
    double best = out.tolerance;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_active[i] || blocked[i]) continue;
      if (w(i) > best) {
        best = w(i);
        j = i;
      }
    }
    if (j < 0) {
      out.converged = true;
      break;
    }
    if (out.iterations >= cap) break;
    ++out.iterations;

    if (!qr.add(a.col(j))) {
      blocked[j] = 1;
      continue;
    }
    active.push_back(j);
    in_active[j] = 1;

    Eigen::VectorXd s = qr.solve();
    if (s(s.size() - 1) <= 0.0) {
      // Roundoff made the entering column useless; undo and keep looking.
      qr.remove(qr.size() - 1);
      active.pop_back();
      in_active[j] = 0;
      blocked[j] = 1;
      continue;
    }
    while (true) {
      bool feasible = true;
      double alpha = 1.0;
      for (std::size_t p = 0; p < active.size(); ++p) {
        if (s(p) <= 0.0) {
          feasible = false;
          const double xp = out.x(active[p]);
          alpha = std::min(alpha, xp / (xp - s(p)));
        }
      }
      if (feasible) {
        for (std::size_t p = 0; p < active.size(); ++p) out.x(active[p]) = s(p);
        break;
      }
      for (std::size_t p = 0; p < active.size(); ++p) {
        auto& xp = out.x(active[p]);
        xp += alpha * (s(p) - xp);
      }
      for (std::size_t p = active.size(); p-- > 0;) {
        const Eigen::Index c = active[p];
        if (out.x(c) <= 0.0 || (s(p) <= 0.0 && out.x(c) <= 1e-300)) {
          out.x(c) = 0.0;
          qr.remove(static_cast<Eigen::Index>(p));
          active.erase(active.begin() + static_cast<std::ptrdiff_t>(p));
          in_active[c] = 0;
        }
      }
      if (active.empty()) break;
      s = qr.solve();
    }
    std::fill(blocked.begin(), blocked.end(), 0);

    resid = b;
    for (auto c : active) resid.noalias() -= out.x(c) * a.col(c);
    w.noalias() = a.transpose() * resid;
  }
  out.residual = (a * out.x - b).norm();
  return out;
}

KktReport kkt_check(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& x, double tol) {
  const Eigen::VectorXd grad = a.transpose() * (a * x - b);
  KktReport rep;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < 0.0) {
      rep.worst_zero = std::min(rep.worst_zero, x(i));
      continue;
    }
    if (x(i) == 0.0) {
      rep.worst_zero = std::min(rep.worst_zero, grad(i));
    } else {
      rep.worst_positive = std::max(rep.worst_positive, std::abs(grad(i)));
    }
  }
  rep.ok = (x.array() >= 0.0).all() && rep.worst_zero >= -tol && rep.worst_positive <= tol;
  return rep;
}

}  // namespace stream_ot

#include "scir/likelihood.hpp"

#include <cmath>

#include "scir/errors.hpp"

namespace scir {

double rate_m(std::size_t n, double eps, double alpha) {
    return std::pow(static_cast<double>(n), 1.0 / alpha - 1.0) / eps;
}

double rate_v(std::size_t n, double eps, double alpha) {
    return rate_m(n, eps, alpha) * std::sqrt(static_cast<double>(n));
}

ObjectiveContext::ObjectiveContext(const ObservedPath& path, double eps,
                                   double alpha, double q,
                                   const StableLaw& law)
    : law_(law), eps_(eps), alpha_(alpha), q_(q) {
    if (path.values.size() != path.n + 1)
        throw DomainError("path length does not match n");
    if (path.n == 0) throw DomainError("empty path");
    if (!(eps > 0)) throw DomainError("eps must be positive");
    if (std::fabs(law.alpha() - alpha) > 1e-12)
        throw DomainError("law built for a different alpha");
    const double nn = static_cast<double>(path.n);
    base_ = eps * std::pow(nn, -1.0 / alpha);
    v_ = rate_v(path.n, eps, alpha);
    dy_.resize(path.n);
    yprev_.resize(path.n);
    ypow_.resize(path.n);
    for (std::size_t k = 0; k < path.n; ++k) {
        const double yp = path.values[k];
        if (!(yp > 0.0))
            throw DegeneratePathError("path touches zero at interior node");
        dy_[k] = path.values[k + 1] - path.values[k];
        yprev_[k] = yp;
        ypow_[k] = std::pow(yp, 1.0 / q);
    }
}

Residuals ObjectiveContext::residuals(const ParamPoint& theta) const {
    if (!(theta.a3 > 0)) throw DomainError("a3 must be positive");
    const double nn = static_cast<double>(dy_.size());
    Residuals r;
    r.y_vec.resize(dy_.size());
    r.yprev = yprev_;
    r.ypow = ypow_;
    for (std::size_t k = 0; k < dy_.size(); ++k)
        r.y_vec[k] = (dy_[k] - theta.a1 / nn + theta.a2 * yprev_[k] / nn) /
                     (theta.a3 * base_ * ypow_[k]);
    return r;
}

double ObjectiveContext::value(const ParamPoint& theta) const {
    if (!(theta.a3 > 0)) throw DomainError("a3 must be positive");
    const double nn = static_cast<double>(dy_.size());
    double acc = 0;
    for (std::size_t k = 0; k < dy_.size(); ++k) {
        const double y = (dy_[k] - theta.a1 / nn +
                          theta.a2 * yprev_[k] / nn) /
                         (theta.a3 * base_ * ypow_[k]);
        acc += law_.log_p(y);
    }
    return acc - nn * std::log(theta.a3);
}

Vec3 ObjectiveContext::gradient(const ParamPoint& theta) const {
    if (!(theta.a3 > 0)) throw DomainError("a3 must be positive");
    const double nn = static_cast<double>(dy_.size());
    double g1 = 0, g2 = 0, g3 = 0;
    for (std::size_t k = 0; k < dy_.size(); ++k) {
        const double denom = theta.a3 * base_ * ypow_[k];
        const double y =
            (dy_[k] - theta.a1 / nn + theta.a2 * yprev_[k] / nn) / denom;
        const double h0 = law_.dlog_p(y);
        const double c = 1.0 / (nn * denom);
        g1 -= h0 * c;
        g2 += h0 * c * yprev_[k];
        g3 -= (h0 * y + 1.0) / theta.a3;
    }
    return {g1, g2, g3};
}

Mat3 ObjectiveContext::hessian_unscaled(const ParamPoint& theta) const {
    if (!(theta.a3 > 0)) throw DomainError("a3 must be positive");
    const double nn = static_cast<double>(dy_.size());
    double u11 = 0, u12 = 0, u22 = 0, u13 = 0, u23 = 0, u33 = 0;
    for (std::size_t k = 0; k < dy_.size(); ++k) {
        const double denom = theta.a3 * base_ * ypow_[k];
        const double y =
            (dy_[k] - theta.a1 / nn + theta.a2 * yprev_[k] / nn) / denom;
        const ScoreValues s = law_.scores(y);
        const double c = 1.0 / (nn * denom);
        u11 += s.h1 * c * c;
        u12 -= s.h1 * c * c * yprev_[k];
        u22 += s.h1 * c * c * yprev_[k] * yprev_[k];
        u13 += s.h2 * c / theta.a3;
        u23 -= s.h2 * c * yprev_[k] / theta.a3;
        u33 += s.h3 / (theta.a3 * theta.a3);
    }
    return {{{u11, u12, u13}, {u12, u22, u23}, {u13, u23, u33}}};
}

Mat3 ObjectiveContext::scaled_hessian(const ParamPoint& theta) const {
    Mat3 h = hessian_unscaled(theta);
    const double nn = static_cast<double>(dy_.size());
    const double sqn = std::sqrt(nn);
    const double v2 = v_ * v_;
    const double vs = v_ * sqn;
    h[0][0] /= v2;
    h[0][1] /= v2;
    h[1][0] /= v2;
    h[1][1] /= v2;
    h[0][2] /= vs;
    h[2][0] /= vs;
    h[1][2] /= vs;
    h[2][1] /= vs;
    h[2][2] /= nn;
    return h;
}

Residuals residuals(const ObservedPath& path, const ParamPoint& theta,
                    double eps, double alpha, double q) {
    // Residuals do not need the density; a throwaway context would force a
    // law build, so redo the arithmetic directly.
    if (path.values.size() != path.n + 1 || path.n == 0)
        throw DomainError("path length does not match n");
    if (!(theta.a3 > 0)) throw DomainError("a3 must be positive");
    const double nn = static_cast<double>(path.n);
    const double base = eps * std::pow(nn, -1.0 / alpha);
    Residuals r;
    r.y_vec.resize(path.n);
    r.yprev.resize(path.n);
    r.ypow.resize(path.n);
    for (std::size_t k = 0; k < path.n; ++k) {
        const double yp = path.values[k];
        if (!(yp > 0.0))
            throw DegeneratePathError("path touches zero at interior node");
        r.yprev[k] = yp;
        r.ypow[k] = std::pow(yp, 1.0 / q);
        r.y_vec[k] = (path.values[k + 1] - yp - theta.a1 / nn +
                      theta.a2 * yp / nn) /
                     (theta.a3 * base * r.ypow[k]);
    }
    return r;
}

double objective_u(const ObservedPath& path, const ParamPoint& theta,
                   double eps, double alpha, double q, const StableLaw& law) {
    return ObjectiveContext(path, eps, alpha, q, law).value(theta);
}

Vec3 gradient_u(const ObservedPath& path, const ParamPoint& theta, double eps,
                double alpha, double q, const StableLaw& law) {
    return ObjectiveContext(path, eps, alpha, q, law).gradient(theta);
}

Mat3 scaled_hessian(const ObservedPath& path, const ParamPoint& theta,
                    double eps, double alpha, double q, const StableLaw& law) {
    return ObjectiveContext(path, eps, alpha, q, law).scaled_hessian(theta);
}

} // namespace scir

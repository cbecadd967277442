#include "scir/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "scir/errors.hpp"

namespace scir {

void ParamBox::validate() const {
    for (int i = 0; i < 3; ++i)
        if (!(lo[static_cast<std::size_t>(i)] < hi[static_cast<std::size_t>(i)]))
            throw DomainError("box bounds must satisfy lo < hi");
    if (lo[0] < 0.0) throw DomainError("a1 lower bound must be nonnegative");
    if (!(lo[2] > 0.0)) throw DomainError("a3 lower bound must be positive");
}

ParamPoint ParamBox::center() const {
    return {(lo[0] + hi[0]) / 2, (lo[1] + hi[1]) / 2, (lo[2] + hi[2]) / 2};
}

ParamPoint ParamBox::clamp(const ParamPoint& p) const {
    return {std::clamp(p.a1, lo[0], hi[0]), std::clamp(p.a2, lo[1], hi[1]),
            std::clamp(p.a3, lo[2], hi[2])};
}

bool ParamBox::contains(const ParamPoint& p) const {
    return p.a1 >= lo[0] && p.a1 <= hi[0] && p.a2 >= lo[1] && p.a2 <= hi[1] &&
           p.a3 >= lo[2] && p.a3 <= hi[2];
}

ParamBox default_box() { return {{0.0, -5.0, 0.01}, {5.0, 5.0, 5.0}}; }

Vec3 standardize(const ParamPoint& theta_hat, const ParamPoint& theta_true,
                 std::size_t n, double eps, double alpha) {
    const double v = rate_v(n, eps, alpha);
    const double sqn = std::sqrt(static_cast<double>(n));
    return {v * (theta_hat.a1 - theta_true.a1),
            v * (theta_hat.a2 - theta_true.a2),
            sqn * (theta_hat.a3 - theta_true.a3)};
}

namespace {

double halton(std::size_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

struct Vertex {
    ParamPoint x;
    double u;
};

ParamPoint to_point(const Vec3& v) { return {v[0], v[1], v[2]}; }
Vec3 to_vec(const ParamPoint& p) { return {p.a1, p.a2, p.a3}; }

// Nelder-Mead ascent on U restricted to the box (proposals are clamped).
StartResult simplex_search(const ObjectiveContext& ctx, const ParamBox& box,
                           const ParamPoint& start,
                           const MaximizeOptions& opts) {
    const Vec3 span = {box.hi[0] - box.lo[0], box.hi[1] - box.lo[1],
                       box.hi[2] - box.lo[2]};
    auto eval = [&](const ParamPoint& p) { return ctx.value(p); };

    std::array<Vertex, 4> s;
    s[0] = {box.clamp(start), 0};
    s[0].u = eval(s[0].x);
    for (std::size_t j = 0; j < 3; ++j) {
        Vec3 v = to_vec(s[0].x);
        const double step = 0.05 * span[j];
        v[j] += (v[j] + step <= box.hi[j]) ? step : -step;
        s[j + 1].x = box.clamp(to_point(v));
        s[j + 1].u = eval(s[j + 1].x);
    }

    StartResult res;
    std::size_t iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        std::sort(s.begin(), s.end(),
                  [](const Vertex& a, const Vertex& b) { return a.u > b.u; });

        double diam = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double mn = std::min({to_vec(s[0].x)[j], to_vec(s[1].x)[j],
                                        to_vec(s[2].x)[j], to_vec(s[3].x)[j]});
            const double mx = std::max({to_vec(s[0].x)[j], to_vec(s[1].x)[j],
                                        to_vec(s[2].x)[j], to_vec(s[3].x)[j]});
            diam = std::max(diam, (mx - mn) / span[j]);
        }
        if (diam < opts.simplex_tol) {
            res.converged = true;
            break;
        }

        Vec3 centroid{0, 0, 0};
        for (std::size_t v = 0; v < 3; ++v) {
            const Vec3 vv = to_vec(s[v].x);
            for (std::size_t j = 0; j < 3; ++j) centroid[j] += vv[j] / 3.0;
        }
        const Vec3 worst = to_vec(s[3].x);

        auto propose = [&](double coef) {
            Vec3 v;
            for (std::size_t j = 0; j < 3; ++j)
                v[j] = centroid[j] + coef * (centroid[j] - worst[j]);
            Vertex out{box.clamp(to_point(v)), 0};
            out.u = eval(out.x);
            return out;
        };

        Vertex refl = propose(1.0);
        if (refl.u > s[0].u) {
            Vertex exp_ = propose(2.0);
            s[3] = (exp_.u > refl.u) ? exp_ : refl;
        } else if (refl.u > s[2].u) {
            s[3] = refl;
        } else {
            Vertex contr = propose(refl.u > s[3].u ? 0.5 : -0.5);
            if (contr.u > std::max(refl.u, s[3].u)) {
                s[3] = contr;
            } else {
                // shrink toward the best vertex
                for (std::size_t v = 1; v < 4; ++v) {
                    Vec3 vv = to_vec(s[v].x);
                    const Vec3 best = to_vec(s[0].x);
                    for (std::size_t j = 0; j < 3; ++j)
                        vv[j] = best[j] + 0.5 * (vv[j] - best[j]);
                    s[v].x = box.clamp(to_point(vv));
                    s[v].u = eval(s[v].x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(),
              [](const Vertex& a, const Vertex& b) { return a.u > b.u; });
    res.theta = s[0].x;
    res.u = s[0].u;
    res.iterations = iter;
    return res;
}

// Newton ascent with backtracking, using the analytic gradient/Hessian.
void polish(const ObjectiveContext& ctx, const ParamBox& box,
            const MaximizeOptions& opts, StartResult& r) {
    const double sqn = std::sqrt(static_cast<double>(ctx.n()));
    const double v = ctx.v_rate();
    for (std::size_t it = 0; it < 50; ++it) {
        const Vec3 g = ctx.gradient(r.theta);
        const double scaled_norm =
            std::sqrt(g[0] * g[0] / (v * v) + g[1] * g[1] / (v * v) +
                      g[2] * g[2] / (ctx.n() ? sqn * sqn : 1.0));
        if (scaled_norm < opts.grad_tol) {
            r.converged = true;
            return;
        }
        const Mat3 h = ctx.hessian_unscaled(r.theta);
        Eigen::Matrix3d H;
        Eigen::Vector3d G;
        for (int i = 0; i < 3; ++i) {
            G(i) = g[static_cast<std::size_t>(i)];
            for (int j = 0; j < 3; ++j)
                H(i, j) = h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        Eigen::Vector3d d = H.fullPivLu().solve(-G);
        if (!d.allFinite() || d.dot(G) <= 0.0) d = G / std::max(v * v, 1.0);

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 12; ++bt) {
            const ParamPoint cand = box.clamp(
                {r.theta.a1 + step * d(0), r.theta.a2 + step * d(1),
                 r.theta.a3 + step * d(2)});
            const double u = ctx.value(cand);
            if (u > r.u) {
                r.theta = cand;
                r.u = u;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        ++r.iterations;
        if (!accepted) return;
    }
}

bool lexicographically_before(const ParamPoint& a, const ParamPoint& b) {
    if (a.a1 != b.a1) return a.a1 < b.a1;
    if (a.a2 != b.a2) return a.a2 < b.a2;
    return a.a3 < b.a3;
}

} // namespace

EstimateReport maximize(const ObjectiveContext& ctx, const ParamBox& box,
                        const MaximizeOptions& opts) {
    box.validate();

    std::vector<ParamPoint> starts;
    starts.push_back(box.center());
    for (std::size_t i = 1; i <= opts.extra_starts; ++i)
        starts.push_back({box.lo[0] + halton(i, 2) * (box.hi[0] - box.lo[0]),
                          box.lo[1] + halton(i, 3) * (box.hi[1] - box.lo[1]),
                          box.lo[2] + halton(i, 5) * (box.hi[2] - box.lo[2])});
    if (opts.user_start) starts.push_back(box.clamp(*opts.user_start));

    EstimateReport rep;
    rep.n_starts = starts.size();
    bool have_best = false;
    for (const ParamPoint& s0 : starts) {
        StartResult r = simplex_search(ctx, box, s0, opts);
        polish(ctx, box, opts, r);
        rep.start_results.push_back(r);
        const bool better =
            !have_best || r.u > rep.u_value + 1e-10 ||
            (std::fabs(r.u - rep.u_value) <= 1e-10 &&
             lexicographically_before(r.theta, rep.theta_hat));
        if (better) {
            rep.theta_hat = r.theta;
            rep.u_value = r.u;
            rep.converged = r.converged;
            rep.iterations = r.iterations;
            have_best = true;
        }
    }
    for (std::size_t j = 0; j < 3; ++j) {
        const double x = to_vec(rep.theta_hat)[j];
        rep.boundary_hit[j] =
            std::fabs(x - box.lo[j]) <= 1e-8 || std::fabs(x - box.hi[j]) <= 1e-8;
    }
    return rep;
}

EstimateReport maximize(const ObservedPath& path, const ParamBox& box,
                        double eps, double alpha, double q,
                        const StableLaw& law, const MaximizeOptions& opts) {
    const ObjectiveContext ctx(path, eps, alpha, q, law);
    return maximize(ctx, box, opts);
}

} // namespace scir

#include "scir/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "scir/errors.hpp"
#include "scir/likelihood.hpp"

namespace scir {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return (v.size() % 2 == 1) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

nlohmann::ordered_json mat_json(const Mat3& m) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& row : m) out.push_back({row[0], row[1], row[2]});
    return out;
}

} // namespace

void ExperimentConfig::validate() const {
    if (schema != 1) throw ConfigError("unsupported schema version");
    try {
        ModelSpec checked = model;
        checked.eps = 0.0;
        checked.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid model: ") + e.what());
    }
    if (!(model.a3 > 0)) throw ConfigError("true a3 must be positive");
    if (n_list.empty()) throw ConfigError("n_list must be nonempty");
    for (std::size_t n : n_list)
        if (n == 0) throw ConfigError("n values must be positive");
    if (!eps_list.empty() && eps_list.size() != n_list.size())
        throw ConfigError("eps_list must match n_list in length");
    for (double e : eps_list)
        if (!(e > 0)) throw ConfigError("eps values must be positive");
    if (!(m0 > 0)) throw ConfigError("m0 must be positive");
    if (replicas == 0) throw ConfigError("replicas must be >= 1");
    if (substeps == 0) throw ConfigError("substeps must be >= 1");
    if (workers == 0) throw ConfigError("workers must be >= 1");
    try {
        box.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid box: ") + e.what());
    }
    if (window) {
        if (!(window->x_lo < 0 && window->x_hi > 0))
            throw ConfigError("density window must straddle 0");
        if (window->n_nodes < (1u << 12))
            throw ConfigError("density window needs at least 2^12 nodes");
    }
}

double ExperimentConfig::eps_for(std::size_t block) const {
    if (!eps_list.empty()) return eps_list[block];
    return m0 * std::pow(static_cast<double>(n_list[block]),
                         1.0 / model.alpha - 1.0);
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::ordered_json& j) {
    ExperimentConfig cfg;
    try {
        cfg.schema = j.at("schema").get<int>();
        const auto& m = j.at("model");
        cfg.model.a1 = m.at("a1").get<double>();
        cfg.model.a2 = m.at("a2").get<double>();
        cfg.model.a3 = m.at("a3").get<double>();
        cfg.model.q = m.at("q").get<double>();
        cfg.model.alpha = m.at("alpha").get<double>();
        cfg.model.x0 = m.at("x0").get<double>();
        cfg.n_list = j.at("n_list").get<std::vector<std::size_t>>();
        if (j.contains("eps_list"))
            cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
        if (j.contains("m0")) cfg.m0 = j.at("m0").get<double>();
        if (j.contains("replicas"))
            cfg.replicas = j.at("replicas").get<std::size_t>();
        if (j.contains("box")) {
            const auto& b = j.at("box");
            const auto lo = b.at("lo").get<std::vector<double>>();
            const auto hi = b.at("hi").get<std::vector<double>>();
            if (lo.size() != 3 || hi.size() != 3)
                throw ConfigError("box bounds must have 3 entries");
            cfg.box.lo = {lo[0], lo[1], lo[2]};
            cfg.box.hi = {hi[0], hi[1], hi[2]};
        }
        if (j.contains("substeps"))
            cfg.substeps = j.at("substeps").get<std::size_t>();
        if (j.contains("master_seed"))
            cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("out_dir"))
            cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("workers"))
            cfg.workers = j.at("workers").get<std::size_t>();
        if (j.contains("window")) {
            DensityWindow w;
            w.x_lo = j.at("window").at("x_lo").get<double>();
            w.x_hi = j.at("window").at("x_hi").get<double>();
            if (j.at("window").contains("n_nodes"))
                w.n_nodes = j.at("window").at("n_nodes").get<std::size_t>();
            cfg.window = w;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = schema;
    j["model"] = {{"a1", model.a1},   {"a2", model.a2},
                  {"a3", model.a3},   {"q", model.q},
                  {"alpha", model.alpha}, {"x0", model.x0}};
    j["n_list"] = n_list;
    if (!eps_list.empty()) j["eps_list"] = eps_list;
    j["m0"] = m0;
    j["replicas"] = replicas;
    j["box"] = {{"lo", {box.lo[0], box.lo[1], box.lo[2]}},
                {"hi", {box.hi[0], box.hi[1], box.hi[2]}}};
    j["substeps"] = substeps;
    j["master_seed"] = master_seed;
    j["out_dir"] = out_dir;
    // workers is deliberately not echoed: summaries must be byte-identical
    // across worker-count settings.
    if (window)
        j["window"] = {{"x_lo", window->x_lo},
                       {"x_hi", window->x_hi},
                       {"n_nodes", window->n_nodes}};
    return j;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::ordered_json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") +
                          e.what());
    }
    return ExperimentConfig::from_json(j);
}

McSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto [w_lo, w_hi] = cfg.window
                                  ? std::pair{cfg.window->x_lo, cfg.window->x_hi}
                                  : default_window(cfg.model.alpha);
    const std::size_t nodes = cfg.window ? cfg.window->n_nodes : kDefaultNodes;
    const StableLaw law = StableLaw::build(cfg.model.alpha, w_lo, w_hi, nodes);

    const std::size_t blocks = cfg.n_list.size();
    const std::size_t total = blocks * cfg.replicas;
    std::vector<ReplicaRow> rows(total);

    const ParamPoint truth{cfg.model.a1, cfg.model.a2, cfg.model.a3};
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) return;
            const std::size_t block = task / cfg.replicas;
            const std::size_t rep = task % cfg.replicas;
            ReplicaRow& row = rows[task];
            row.n = cfg.n_list[block];
            row.eps = cfg.eps_for(block);
            row.replica = rep;
            try {
                ModelSpec spec = cfg.model;
                spec.eps = row.eps;
                Rng rng = Rng::for_stream(cfg.master_seed, block, rep);
                ObservedPath path =
                    simulate_path(spec, row.n, cfg.substeps, rng);
                row.clamps = path.clamp_count;
                const ObjectiveContext ctx(path, row.eps, cfg.model.alpha,
                                           cfg.model.q, law);
                const EstimateReport rep_ = maximize(ctx, cfg.box);
                row.theta_hat = rep_.theta_hat;
                row.u_value = rep_.u_value;
                row.converged = rep_.converged;
                row.boundary_hit = rep_.boundary_hit[0] ||
                                   rep_.boundary_hit[1] || rep_.boundary_hit[2];
                row.s = standardize(rep_.theta_hat, truth, row.n, row.eps,
                                    cfg.model.alpha);
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
        }
    };
    {
        std::vector<std::thread> pool;
        const std::size_t nw = std::min(cfg.workers, total);
        pool.reserve(nw);
        for (std::size_t i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Aggregation is a sequential fold over the index-ordered rows, so the
    // output is independent of scheduling.
    const SigmaReport sig = sigma_matrix(cfg.model, law);

    nlohmann::ordered_json summary;
    summary["schema"] = 1;
    summary["config"] = cfg.to_json();

    nlohmann::ordered_json per_n = nlohmann::ordered_json::array();
    std::vector<double> median_a3_err;
    Mat3 cov_largest{};
    std::size_t successes_largest = 0;
    std::array<std::vector<double>, 3> s_largest;
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();

    for (std::size_t block = 0; block < blocks; ++block) {
        std::array<double, 3> mean{0, 0, 0};
        Mat3 cov{};
        std::array<std::vector<double>, 3> svals, abserr;
        std::size_t ok = 0, conv = 0, bhits = 0, clamps = 0;
        for (std::size_t rep = 0; rep < cfg.replicas; ++rep) {
            const ReplicaRow& row = rows[block * cfg.replicas + rep];
            if (row.failed) {
                failures.push_back({{"n", row.n},
                                    {"replica", row.replica},
                                    {"error", row.error}});
                continue;
            }
            ++ok;
            conv += row.converged ? 1 : 0;
            bhits += row.boundary_hit ? 1 : 0;
            clamps += row.clamps;
            const Vec3 hat = {row.theta_hat.a1, row.theta_hat.a2,
                              row.theta_hat.a3};
            const Vec3 tru = {truth.a1, truth.a2, truth.a3};
            for (std::size_t c = 0; c < 3; ++c) {
                svals[c].push_back(row.s[c]);
                abserr[c].push_back(std::fabs(hat[c] - tru[c]));
            }
        }
        for (std::size_t c = 0; c < 3; ++c) {
            for (double v : svals[c]) mean[c] += v;
            if (ok) mean[c] /= static_cast<double>(ok);
        }
        if (ok > 1) {
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) {
                    double acc = 0;
                    for (std::size_t r = 0; r < svals[i].size(); ++r)
                        acc += (svals[i][r] - mean[i]) *
                               (svals[j][r] - mean[j]);
                    cov[i][j] = acc / static_cast<double>(ok - 1);
                }
        }
        nlohmann::ordered_json entry;
        entry["n"] = cfg.n_list[block];
        entry["eps"] = cfg.eps_for(block);
        entry["replicas"] = cfg.replicas;
        entry["successes"] = ok;
        entry["failures"] = cfg.replicas - ok;
        entry["converged"] = conv;
        entry["boundary_hits"] = bhits;
        entry["clamps_total"] = clamps;
        entry["mean_S"] = {mean[0], mean[1], mean[2]};
        entry["cov_S"] = mat_json(cov);
        entry["median_abs_error"] = {median_of(abserr[0]),
                                     median_of(abserr[1]),
                                     median_of(abserr[2])};
        per_n.push_back(entry);
        median_a3_err.push_back(median_of(abserr[2]));
        if (block + 1 == blocks) {
            cov_largest = cov;
            successes_largest = ok;
            s_largest = svals;
        }
    }
    summary["per_n"] = per_n;
    summary["failure_log"] = failures;

    summary["sigma"] = mat_json(sig.sigma);
    summary["target_cov"] = mat_json(sig.limit_cov);
    summary["sigma_min_eigenvalue"] = sig.min_eigenvalue;
    summary["condition_ok"] = sig.condition_ok;

    // Entrywise error normalized by the target marginal scales
    // sqrt(t_ii t_jj); a raw per-entry ratio would demand thousands of
    // replicas wherever a covariance entry happens to sit near zero.
    double max_rel = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double t = sig.limit_cov[i][j];
            const double denom = std::max(
                std::sqrt(std::fabs(sig.limit_cov[i][i] *
                                    sig.limit_cov[j][j])),
                1e-12);
            max_rel = std::max(max_rel,
                               std::fabs(cov_largest[i][j] - t) / denom);
        }
    summary["cov_max_rel_error"] = max_rel;

    // Log-log rate of the a3 median error against n.
    if (blocks >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const double x = std::log(static_cast<double>(cfg.n_list[b]));
            const double y = std::log(median_a3_err[b]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double nn = static_cast<double>(blocks);
        summary["a3_rate_slope"] =
            (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    }

    nlohmann::ordered_json marginals = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < 3; ++c) {
        nlohmann::ordered_json m;
        const auto& vals = s_largest[c];
        double mu = 0, var = 0, skew = 0, kurt = 0;
        if (successes_largest > 3) {
            for (double v : vals) mu += v;
            mu /= static_cast<double>(vals.size());
            for (double v : vals) var += (v - mu) * (v - mu);
            var /= static_cast<double>(vals.size() - 1);
            const double sd = std::sqrt(var);
            for (double v : vals) {
                const double z = (v - mu) / sd;
                skew += z * z * z;
                kurt += z * z * z * z;
            }
            skew /= static_cast<double>(vals.size());
            kurt = kurt / static_cast<double>(vals.size()) - 3.0;
        }
        m["variance"] = var;
        m["target_variance"] = sig.condition_ok ? sig.limit_cov[c][c] : 0.0;
        m["skewness"] = skew;
        m["excess_kurtosis"] = kurt;
        marginals.push_back(m);
    }
    summary["marginals_at_largest_n"] = marginals;

    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream csv(std::filesystem::path(cfg.out_dir) / "replicas.csv");
        csv << "n,eps,replica,a1_hat,a2_hat,a3_hat,S1,S2,S3,u_value,"
               "converged,boundary_hit,clamps\n";
        for (const ReplicaRow& row : rows) {
            if (row.failed) continue;
            csv << row.n << ',' << fmt(row.eps) << ',' << row.replica << ','
                << fmt(row.theta_hat.a1) << ',' << fmt(row.theta_hat.a2)
                << ',' << fmt(row.theta_hat.a3) << ',' << fmt(row.s[0]) << ','
                << fmt(row.s[1]) << ',' << fmt(row.s[2]) << ','
                << fmt(row.u_value) << ',' << (row.converged ? 1 : 0) << ','
                << (row.boundary_hit ? 1 : 0) << ',' << row.clamps << '\n';
        }
    }
    {
        std::ofstream js(std::filesystem::path(cfg.out_dir) / "summary.json");
        js << summary.dump(2) << '\n';
    }

    McSummary out;
    out.rows = std::move(rows);
    out.json = std::move(summary);
    return out;
}

std::vector<VerifyCheck> verify_suite(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<VerifyCheck> checks;
    auto add = [&](const std::string& name, bool pass, double measured,
                   double tol, const std::string& note = "") {
        checks.push_back({name, pass ? "pass" : "fail", measured, tol, note});
    };
    auto skip = [&](const std::string& name, const std::string& note) {
        checks.push_back({name, "skipped", 0, 0, note});
    };

    const double alpha = cfg.model.alpha;

    // Laplace exponent against the compensated Levy integral.
    {
        const double lambda = 1.0;
        boost::math::quadrature::exp_sinh<double> es;
        const double oracle = es.integrate(
            [&](double z) {
                // (e^{-u} - 1 + u) = u^2/2 * r(u); the ratio form keeps the
                // z -> 0 end finite instead of 0 * inf.
                const double u = lambda * z;
                const double r = u < 1e-8
                                     ? 1.0 - u / 3.0
                                     : (std::expm1(-u) + u) / (0.5 * u * u);
                return 0.5 * lambda * lambda * r * std::pow(z, 1.0 - alpha);
            },
            1e-12);
        const double formula = laplace_exponent(alpha, lambda);
        add("laplace_exponent_quadrature",
            std::fabs(formula / oracle - 1.0) < 1e-6,
            std::fabs(formula / oracle - 1.0), 1e-6);
    }

    const auto [w_lo, w_hi] = cfg.window
                                  ? std::pair{cfg.window->x_lo, cfg.window->x_hi}
                                  : default_window(alpha);
    const std::size_t nodes = cfg.window ? cfg.window->n_nodes : kDefaultNodes;
    std::optional<StableLaw> law;
    try {
        law.emplace(StableLaw::build(alpha, w_lo, w_hi, nodes));
        add("density_normalization", std::fabs(law->total_mass() - 1.0) < 1e-6,
            std::fabs(law->total_mass() - 1.0), 1e-6);
    } catch (const Error& e) {
        add("density_normalization", false,
            std::numeric_limits<double>::quiet_NaN(), 1e-6,
            std::string("density build failed: ") + e.what());
    }
    if (!law) {
        for (const char* name :
             {"density_probe_point", "score_identity_h0",
              "score_identity_xh0", "v3_positive", "cauchy_schwarz",
              "gradient_finite_difference", "sigma_positive_definite",
              "limit_hessian_identity", "limit_criterion_stationary"})
            skip(name, "density build failed");
        return checks;
    }

    {
        const double x = 0.33 + 0.37 * law->grid_dx();
        const double d = std::fabs(law->pdf(x) - stable_pdf_direct(alpha, x));
        add("density_probe_point", d < 1e-6, d, 1e-6);
    }
    {
        const double i0 =
            law->expectation([&](double x) { return law->dlog_p(x); });
        add("score_identity_h0", std::fabs(i0) < 1e-6, std::fabs(i0), 1e-6);
        const double i1 = law->expectation(
            [&](double x) { return x * law->dlog_p(x) + 1.0; });
        add("score_identity_xh0", std::fabs(i1) < 1e-6, std::fabs(i1), 1e-6);
    }
    VIntegrals v{};
    bool have_v = false;
    try {
        v = v_integrals(*law);
        have_v = true;
        add("v3_positive", v.v3 > 0, v.v3, 0);
        add("cauchy_schwarz", v.v2 * v.v2 < v.v1 * v.v3,
            v.v1 * v.v3 - v.v2 * v.v2, 0);
    } catch (const Error& e) {
        add("v3_positive", false, 0, 0, e.what());
        skip("cauchy_schwarz", e.what());
    }

    // Gradient against central finite differences on a short simulated path.
    {
        ModelSpec spec = cfg.model;
        spec.eps = cfg.eps_for(0);
        const std::size_t n_small = 500;
        spec.eps = cfg.m0 * std::pow(static_cast<double>(n_small),
                                     1.0 / alpha - 1.0);
        Rng rng = Rng::for_stream(cfg.master_seed, 9001, 0);
        const ObservedPath path = simulate_path(spec, n_small, cfg.substeps,
                                                rng);
        const ObjectiveContext ctx(path, spec.eps, alpha, cfg.model.q, *law);
        const ParamPoint theta{cfg.model.a1 * 1.07 + 0.05,
                               cfg.model.a2 * 0.93 - 0.04,
                               cfg.model.a3 * 1.11};
        const Vec3 g = ctx.gradient(theta);
        double worst = 0;
        const double h = 1e-6;
        for (int c = 0; c < 3; ++c) {
            ParamPoint up = theta, dn = theta;
            (c == 0 ? up.a1 : c == 1 ? up.a2 : up.a3) += h;
            (c == 0 ? dn.a1 : c == 1 ? dn.a2 : dn.a3) -= h;
            const double fd = (ctx.value(up) - ctx.value(dn)) / (2 * h);
            worst = std::max(
                worst, std::fabs(fd - g[static_cast<std::size_t>(c)]) /
                           std::max(std::fabs(fd), 1.0));
        }
        add("gradient_finite_difference", worst < 1e-4, worst, 1e-4);
    }

    if (!cfg.model.condition_c11()) {
        skip("sigma_positive_definite", "condition violated, check skipped");
        skip("limit_hessian_identity", "condition violated, check skipped");
        skip("limit_criterion_stationary",
             "condition violated, check skipped");
        return checks;
    }
    if (!have_v) {
        for (const char* name :
             {"sigma_positive_definite", "limit_hessian_identity",
              "limit_criterion_stationary"})
            skip(name, "v-integrals unavailable");
        return checks;
    }

    SigmaReport sig;
    try {
        sig = sigma_matrix(cfg.model, *law);
        add("sigma_positive_definite", sig.min_eigenvalue > 0,
            sig.min_eigenvalue, 0);
    } catch (const Error& e) {
        add("sigma_positive_definite", false, 0, 0, e.what());
        skip("limit_hessian_identity", e.what());
        skip("limit_criterion_stationary", e.what());
        return checks;
    }

    const ParamPoint truth{cfg.model.a1, cfg.model.a2, cfg.model.a3};
    {
        const Mat3 V = limit_hessian(truth, cfg.model, *law, cfg.m0);
        double worst = 0;
        const double s = 1.0 / (cfg.model.a3 * cfg.model.a3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                worst = std::max(worst,
                                 std::fabs(V[i][j] + s * sig.sigma[i][j]));
        add("limit_hessian_identity", worst < 1e-4, worst, 1e-4);
    }
    {
        double worst = 0;
        const double h = 1e-4;
        for (int c = 0; c < 3; ++c) {
            ParamPoint up = truth, dn = truth;
            (c == 0 ? up.a1 : c == 1 ? up.a2 : up.a3) += h;
            (c == 0 ? dn.a1 : c == 1 ? dn.a2 : dn.a3) -= h;
            const double fd = (limit_criterion(up, cfg.model, *law, cfg.m0) -
                               limit_criterion(dn, cfg.model, *law, cfg.m0)) /
                              (2 * h);
            worst = std::max(worst, std::fabs(fd));
        }
        add("limit_criterion_stationary", worst < 1e-4, worst, 1e-4);
    }
    return checks;
}

} // namespace scir

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scir/asymptotics.hpp"
#include "scir/errors.hpp"
#include "scir/estimator.hpp"
#include "scir/harness.hpp"

namespace {

using nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

scir::ObservedPath read_path_csv(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw scir::ConfigError("cannot open path file: " + file);
    std::string line;
    if (!std::getline(is, line))
        throw scir::ConfigError("empty path file: " + file);
    scir::ObservedPath path;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string k, t, y;
        if (!std::getline(ss, k, ',') || !std::getline(ss, t, ',') ||
            !std::getline(ss, y, ','))
            throw scir::ConfigError("malformed path row: " + line);
        path.values.push_back(std::stod(y));
    }
    if (path.values.size() < 2)
        throw scir::ConfigError("path file needs at least two rows");
    path.n = path.values.size() - 1;
    return path;
}

ordered_json report_json(const scir::EstimateReport& rep) {
    ordered_json j;
    j["theta_hat"] = {rep.theta_hat.a1, rep.theta_hat.a2, rep.theta_hat.a3};
    j["u_value"] = rep.u_value;
    j["n_starts"] = rep.n_starts;
    j["converged"] = rep.converged;
    j["iterations"] = rep.iterations;
    j["boundary_hit"] = {rep.boundary_hit[0], rep.boundary_hit[1],
                         rep.boundary_hit[2]};
    if (rep.standardized_error)
        j["standardized_error"] = {(*rep.standardized_error)[0],
                                   (*rep.standardized_error)[1],
                                   (*rep.standardized_error)[2]};
    ordered_json locals = ordered_json::array();
    for (const auto& s : rep.start_results)
        locals.push_back({{"theta", {s.theta.a1, s.theta.a2, s.theta.a3}},
                          {"u", s.u},
                          {"iterations", s.iterations},
                          {"converged", s.converged}});
    j["local_maxima"] = locals;
    return j;
}

ordered_json mat_json(const scir::Mat3& m) {
    ordered_json out = ordered_json::array();
    for (const auto& row : m) out.push_back({row[0], row[1], row[2]});
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stable-noise CIR estimation toolkit"};
    app.require_subcommand(1);

    // density
    auto* density = app.add_subcommand(
        "density", "Tabulate the driving-noise density and dump CSV");
    double d_alpha = 1.5, d_lo = 0, d_hi = 0;
    std::size_t d_nodes = scir::kDefaultNodes;
    std::string d_out, d_cache;
    bool d_have_window = false;
    density->add_option("--alpha", d_alpha, "stability index in (1,2)")
        ->required();
    auto* dlo = density->add_option("--x-lo", d_lo, "window left edge");
    density->add_option("--x-hi", d_hi, "window right edge")->needs(dlo);
    density->add_option("--nodes", d_nodes, "grid nodes (>= 4096)");
    density->add_option("--out", d_out, "CSV output path (default stdout)");
    density->add_option("--cache", d_cache,
                        "binary cache file (reused when present)");
    density->callback([&] { d_have_window = dlo->count() > 0; });

    // simulate
    auto* simulate = app.add_subcommand(
        "simulate", "Simulate one observed path and dump CSV");
    scir::ModelSpec s_spec;
    std::size_t s_n = 1000, s_substeps = 8;
    std::uint64_t s_seed = 1;
    std::string s_out;
    simulate->add_option("--a1", s_spec.a1)->required();
    simulate->add_option("--a2", s_spec.a2)->required();
    simulate->add_option("--a3", s_spec.a3)->required();
    simulate->add_option("--q", s_spec.q)->required();
    simulate->add_option("--alpha", s_spec.alpha)->required();
    simulate->add_option("--eps", s_spec.eps)->required();
    simulate->add_option("--x0", s_spec.x0)->required();
    simulate->add_option("--n", s_n, "observation count");
    simulate->add_option("--substeps", s_substeps, "refinement factor");
    simulate->add_option("--seed", s_seed);
    simulate->add_option("--out", s_out, "CSV output path (default stdout)");

    // estimate
    auto* estimate = app.add_subcommand(
        "estimate", "Maximize the criterion on an observed path");
    std::string e_path;
    double e_alpha = 1.5, e_q = 1.5, e_eps = 0;
    std::vector<double> e_box_lo, e_box_hi, e_truth;
    estimate->add_option("--path", e_path, "CSV from `simulate`")->required();
    estimate->add_option("--alpha", e_alpha)->required();
    estimate->add_option("--q", e_q)->required();
    estimate->add_option("--eps", e_eps)->required();
    estimate->add_option("--box-lo", e_box_lo, "a1 a2 a3 lower bounds")
        ->expected(3);
    estimate->add_option("--box-hi", e_box_hi, "a1 a2 a3 upper bounds")
        ->expected(3);
    estimate->add_option("--truth", e_truth,
                         "true a1 a2 a3 (adds standardized error)")
        ->expected(3);

    // asymptotics
    auto* asym = app.add_subcommand(
        "asymptotics", "Limit covariance and diagnostics");
    scir::ModelSpec a_spec;
    a_spec.eps = 1; // unused by the limit objects
    asym->add_option("--a1", a_spec.a1)->required();
    asym->add_option("--a2", a_spec.a2)->required();
    asym->add_option("--a3", a_spec.a3)->required();
    asym->add_option("--q", a_spec.q)->required();
    asym->add_option("--alpha", a_spec.alpha)->required();
    asym->add_option("--x0", a_spec.x0)->required();

    // mc
    auto* mc = app.add_subcommand("mc", "Run the Monte Carlo experiment");
    std::string mc_config;
    mc->add_option("--config", mc_config, "experiment JSON")->required();

    // verify
    auto* verify = app.add_subcommand("verify", "Run the invariant battery");
    std::string v_config;
    verify->add_option("--config", v_config,
                       "experiment JSON (defaults used when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (density->parsed()) {
            if (!d_have_window) {
                const auto [lo, hi] = scir::default_window(d_alpha);
                d_lo = lo;
                d_hi = hi;
            }
            scir::StableLaw law = [&] {
                if (!d_cache.empty() && std::ifstream(d_cache).good())
                    return scir::StableLaw::load(d_cache);
                scir::StableLaw built =
                    scir::StableLaw::build(d_alpha, d_lo, d_hi, d_nodes);
                if (!d_cache.empty()) built.save(d_cache);
                return built;
            }();
            std::ofstream file;
            std::ostream* os = &std::cout;
            if (!d_out.empty()) {
                file.open(d_out);
                os = &file;
            }
            *os << "x,p,dp,log_p\n";
            for (std::size_t i = 0; i < law.size(); ++i)
                *os << fmt(law.node_x(i)) << ',' << fmt(law.node_p(i)) << ','
                    << fmt(law.node_dp(i)) << ',' << fmt(law.node_logp(i))
                    << '\n';
        } else if (simulate->parsed()) {
            scir::Rng rng(s_seed);
            const scir::ObservedPath path =
                scir::simulate_path(s_spec, s_n, s_substeps, rng);
            std::ofstream file;
            std::ostream* os = &std::cout;
            if (!s_out.empty()) {
                file.open(s_out);
                os = &file;
            }
            *os << "k,t,y\n";
            for (std::size_t k = 0; k < path.values.size(); ++k)
                *os << k << ','
                    << fmt(static_cast<double>(k) / static_cast<double>(s_n))
                    << ',' << fmt(path.values[k]) << '\n';
            ordered_json meta;
            meta["spec"] = {{"a1", s_spec.a1},   {"a2", s_spec.a2},
                            {"a3", s_spec.a3},   {"q", s_spec.q},
                            {"alpha", s_spec.alpha}, {"eps", s_spec.eps},
                            {"x0", s_spec.x0}};
            meta["n"] = s_n;
            meta["seed"] = s_seed;
            meta["substeps"] = s_substeps;
            meta["clamp_count"] = path.clamp_count;
            if (!s_out.empty()) {
                std::ofstream mf(s_out + ".json");
                mf << meta.dump(2) << '\n';
            } else {
                std::cerr << meta.dump(2) << '\n';
            }
        } else if (estimate->parsed()) {
            const scir::ObservedPath path = read_path_csv(e_path);
            scir::ParamBox box = scir::default_box();
            if (!e_box_lo.empty())
                box.lo = {e_box_lo[0], e_box_lo[1], e_box_lo[2]};
            if (!e_box_hi.empty())
                box.hi = {e_box_hi[0], e_box_hi[1], e_box_hi[2]};
            const auto [lo, hi] = scir::default_window(e_alpha);
            const scir::StableLaw law =
                scir::StableLaw::build(e_alpha, lo, hi, scir::kDefaultNodes);
            scir::EstimateReport rep =
                scir::maximize(path, box, e_eps, e_alpha, e_q, law);
            if (!e_truth.empty())
                rep.standardized_error = scir::standardize(
                    rep.theta_hat, {e_truth[0], e_truth[1], e_truth[2]},
                    path.n, e_eps, e_alpha);
            std::cout << report_json(rep).dump(2) << '\n';
        } else if (asym->parsed()) {
            const auto [lo, hi] = scir::default_window(a_spec.alpha);
            const scir::StableLaw law = scir::StableLaw::build(
                a_spec.alpha, lo, hi, scir::kDefaultNodes);
            const scir::SigmaReport rep = scir::sigma_matrix(a_spec, law);
            ordered_json j;
            j["condition_ok"] = rep.condition_ok;
            j["v"] = {{"v1", rep.v.v1}, {"v2", rep.v.v2}, {"v3", rep.v.v3}};
            ordered_json moments;
            for (const auto& [key, val] : rep.m)
                moments[std::to_string(key.first) + "," +
                        std::to_string(key.second)] = val;
            j["m"] = moments;
            j["sigma"] = mat_json(rep.sigma);
            j["limit_cov"] = mat_json(rep.limit_cov);
            j["min_eigenvalue"] = rep.min_eigenvalue;
            std::cout << j.dump(2) << '\n';
        } else if (mc->parsed()) {
            const scir::ExperimentConfig cfg = scir::load_config(mc_config);
            const scir::McSummary summary = scir::run_experiment(cfg);
            std::cout << "ran " << summary.rows.size() << " replicas; wrote "
                      << cfg.out_dir << "/replicas.csv and " << cfg.out_dir
                      << "/summary.json\n";
        } else if (verify->parsed()) {
            scir::ExperimentConfig cfg;
            if (!v_config.empty()) {
                cfg = scir::load_config(v_config);
            } else {
                cfg.model = {1.0, 0.5, 0.3, 1.5, 1.5, 0.0, 1.0};
                cfg.n_list = {500};
            }
            const auto checks = scir::verify_suite(cfg);
            ordered_json j = ordered_json::array();
            bool all_ok = true;
            for (const auto& c : checks) {
                j.push_back({{"name", c.name},
                             {"status", c.status},
                             {"measured", c.measured},
                             {"tolerance", c.tolerance},
                             {"note", c.note}});
                if (c.status == "fail") all_ok = false;
            }
            std::cout << j.dump(2) << '\n';
            if (!all_ok) return 3;
        }
    } catch (const scir::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const scir::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "scir/errors.hpp"
#include "scir/harness.hpp"

using namespace scir;
namespace fs = std::filesystem;

namespace {
ExperimentConfig small_config(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.model.a1 = 1.0;
    cfg.model.a2 = 0.5;
    cfg.model.a3 = 0.3;
    cfg.model.q = 1.5;
    cfg.model.alpha = 1.5;
    cfg.model.x0 = 1.0;
    cfg.n_list = {50};
    cfg.replicas = 1;
    cfg.substeps = 2;
    cfg.master_seed = 77;
    cfg.out_dir = out_dir;
    // Coarser grid keeps this test fast; accuracy is tested elsewhere.
    auto [lo, hi] = default_window(1.5);
    cfg.window = DensityWindow{lo, hi, 1u << 14};
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
} // namespace

TEST_CASE("config round-trips through JSON and rejects bad input") {
    const ExperimentConfig cfg = small_config("cfg_rt");
    const nlohmann::ordered_json j = cfg.to_json();
    const ExperimentConfig back = ExperimentConfig::from_json(j);
    CHECK(back.model.a1 == cfg.model.a1);
    CHECK(back.n_list == cfg.n_list);
    CHECK(back.m0 == cfg.m0);
    CHECK(back.master_seed == cfg.master_seed);
    CHECK(back.substeps == cfg.substeps);

    nlohmann::ordered_json bad = j;
    bad["schema"] = 2;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), ConfigError);

    ExperimentConfig zero = cfg;
    zero.replicas = 0;
    CHECK_THROWS_AS(zero.validate(), ConfigError);

    ExperimentConfig mismatched = cfg;
    mismatched.eps_list = {0.1, 0.2}; // n_list has one entry
    CHECK_THROWS_AS(mismatched.validate(), ConfigError);
}

TEST_CASE("epsilon coupling follows m0 n^{1/alpha - 1}") {
    ExperimentConfig cfg = small_config("cfg_eps");
    cfg.n_list = {1000, 4000};
    cfg.m0 = 1.0;
    CHECK(cfg.eps_for(0) ==
          doctest::Approx(std::pow(1000.0, 1.0 / 1.5 - 1.0)).epsilon(1e-14));
    cfg.eps_list = {0.25, 0.125};
    CHECK(cfg.eps_for(1) == 0.125);
}

TEST_CASE("single-replica run matches a hand-built pipeline") {
    const fs::path dir = fs::temp_directory_path() / "scir_single";
    fs::remove_all(dir);
    ExperimentConfig cfg = small_config(dir.string());
    const McSummary sum = run_experiment(cfg);

    REQUIRE(sum.rows.size() == 1);
    const ReplicaRow& row = sum.rows[0];
    CHECK_FALSE(row.failed);

    // Rebuild the same replica step by step.
    ModelSpec spec = cfg.model;
    spec.eps = cfg.eps_for(0);
    Rng rng = Rng::for_stream(cfg.master_seed, 0, 0);
    const ObservedPath path = simulate_path(spec, 50, cfg.substeps, rng);
    const StableLaw law = StableLaw::build(
        cfg.model.alpha, cfg.window->x_lo, cfg.window->x_hi,
        cfg.window->n_nodes);
    const EstimateReport rep =
        maximize(path, cfg.box, spec.eps, spec.alpha, spec.q, law);
    const Vec3 s = standardize(rep.theta_hat, {spec.a1, spec.a2, spec.a3},
                               50, spec.eps, spec.alpha);

    CHECK(row.theta_hat.a1 == rep.theta_hat.a1);
    CHECK(row.theta_hat.a2 == rep.theta_hat.a2);
    CHECK(row.theta_hat.a3 == rep.theta_hat.a3);
    CHECK(row.u_value == rep.u_value);
    CHECK(row.s[0] == s[0]);
    CHECK(row.s[1] == s[1]);
    CHECK(row.s[2] == s[2]);
    CHECK(row.clamps == path.clamp_count);
    fs::remove_all(dir);
}

TEST_CASE("replica conservation and determinism across worker counts") {
    const fs::path dir = fs::temp_directory_path() / "scir_workers";
    fs::remove_all(dir);

    ExperimentConfig cfg = small_config(dir.string());
    cfg.n_list = {50, 100};
    cfg.replicas = 4;
    cfg.workers = 1;
    const McSummary s1 = run_experiment(cfg);
    const std::string summary1 = slurp(dir / "summary.json");
    const std::string csv1 = slurp(dir / "replicas.csv");

    cfg.workers = 3;
    const McSummary s2 = run_experiment(cfg);

    CHECK(s1.rows.size() == 8);
    CHECK(s2.rows.size() == 8);
    std::size_t ok = 0, bad = 0;
    for (const ReplicaRow& r : s1.rows) (r.failed ? bad : ok)++;
    CHECK(ok + bad == 8);
    CHECK(s1.json["per_n"][0]["successes"].get<std::size_t>() +
              s1.json["per_n"][0]["failures"].get<std::size_t>() ==
          4);

    CHECK(slurp(dir / "summary.json") == summary1);
    CHECK(slurp(dir / "replicas.csv") == csv1);
    fs::remove_all(dir);
}

TEST_CASE("verification battery") {
    ExperimentConfig cfg = small_config(
        (fs::temp_directory_path() / "scir_verify").string());
    cfg.window.reset(); // default high-accuracy window

    const auto checks = verify_suite(cfg);
    CHECK(checks.size() >= 8);
    for (const VerifyCheck& c : checks) {
        INFO(c.name, ": ", c.status, " measured=", c.measured);
        CHECK(c.status == "pass");
    }

    // A window that cuts off most of the mass must fail normalization.
    ExperimentConfig truncated = cfg;
    truncated.window = DensityWindow{-2.0, 2.0, 1u << 14};
    bool norm_failed = false;
    for (const VerifyCheck& c : verify_suite(truncated))
        if (c.name == "density_normalization" && c.status == "fail")
            norm_failed = true;
    CHECK(norm_failed);

    // A degenerate start disables the covariance checks instead of
    // failing them.
    ExperimentConfig degen = cfg;
    degen.model.x0 = degen.model.a1 / degen.model.a2;
    bool pd_skipped = false;
    for (const VerifyCheck& c : verify_suite(degen))
        if (c.name == "sigma_positive_definite" && c.status == "skipped")
            pd_skipped = true;
    CHECK(pd_skipped);
}

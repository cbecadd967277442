#ifndef SCIR_HARNESS_HPP
#define SCIR_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scir/asymptotics.hpp"
#include "scir/cir_model.hpp"
#include "scir/estimator.hpp"
#include "scir/stable_law.hpp"

namespace scir {

struct DensityWindow {
    double x_lo = 0;
    double x_hi = 0;
    std::size_t n_nodes = kDefaultNodes;
};

struct ExperimentConfig {
    int schema = 1;
    ModelSpec model; // true parameter values; model.eps is ignored (per-n)
    std::vector<std::size_t> n_list;
    std::vector<double> eps_list; // empty: coupled eps = m0 n^{1/alpha-1}
    double m0 = 1.0;
    std::size_t replicas = 1;
    ParamBox box = default_box();
    std::size_t substeps = 8;
    std::uint64_t master_seed = 1;
    std::string out_dir = ".";
    std::size_t workers = 1;
    std::optional<DensityWindow> window; // default: per-alpha heuristic

    void validate() const; // throws ConfigError
    double eps_for(std::size_t block) const;
    static ExperimentConfig from_json(const nlohmann::ordered_json& j);
    nlohmann::ordered_json to_json() const;
};

ExperimentConfig load_config(const std::string& path);

struct ReplicaRow {
    std::size_t n = 0;
    double eps = 0;
    std::size_t replica = 0;
    ParamPoint theta_hat;
    Vec3 s{0, 0, 0};
    double u_value = 0;
    bool converged = false;
    bool boundary_hit = false;
    std::size_t clamps = 0;
    bool failed = false;
    std::string error;
};

struct McSummary {
    std::vector<ReplicaRow> rows;
    nlohmann::ordered_json json;
};

// Full Monte Carlo fan-out; writes replicas.csv and summary.json into
// cfg.out_dir.  Byte-identical output for identical configs regardless
// of worker count.
McSummary run_experiment(const ExperimentConfig& cfg);

struct VerifyCheck {
    std::string name;
    std::string status; // "pass", "fail", "skipped"
    double measured = 0;
    double tolerance = 0;
    std::string note;
};

// The invariant battery; failures are data, not exceptions.
std::vector<VerifyCheck> verify_suite(const ExperimentConfig& cfg);

} // namespace scir

#endif

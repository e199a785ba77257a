#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptv/bilevel.hpp"
#include "adaptv/partition.hpp"

namespace adaptv {

enum class SchemeRegularizer { tv_fid, tv_reg, tv_reg_mollified, tgv_fid };

std::string to_string(SchemeRegularizer reg);
SchemeRegularizer scheme_regularizer_from_string(const std::string& s);

/// Configuration of the adaptive subdivision scheme. The rho-test
/// (sum of child costs < rho * parent cost) is the default; setting `delta`
/// switches to the additive criterion (parent cost >= child sum + delta).
struct SchemeConfig {
    double rho = 1.0;
    std::optional<double> delta;
    int l_max = 0;
    SchemeRegularizer regularizer = SchemeRegularizer::tv_fid;
    double mollify_k = 8.0;  // only used by tv_reg_mollified
    double alpha0 = 1.0;     // TGV only
    double alpha1 = 1.0;     // TGV only
    BoxConstraint box;
    BilevelConfig bilevel;
    SolverConfig solver;
    int threads = 0;  // 0 = ADAPTIVE_TV_THREADS env var, else hardware concurrency
    bool verbose = false;

    void validate(int height, int width) const;
};

struct CellRecord {
    double lambda = 0.0;
    double cost = 0.0;  // ||clean - u_lambda||^2 on the cell
};

/// One frontier decision of the subdivision loop.
struct LevelDecision {
    DyadicCell cell;
    double parent_cost = 0.0;
    double child_cost_sum = 0.0;
    bool subdivided = false;
};

struct SchemeResult {
    SchemeConfig config;
    int height = 0;
    int width = 0;
    DyadicPartition partition;
    std::map<DyadicCell, CellRecord> cell_params;
    WeightMap weight;
    ImageGrid restored;
    double psnr_value = 0.0;                  // restored vs clean
    std::optional<double> ssim_value;         // absent when the image is smaller than the window
    double l2_value = 0.0;                    // ||clean - restored||^2
    double root_lambda = 0.0;
    double root_cost = 0.0;
    std::vector<std::vector<LevelDecision>> levels;
    std::vector<std::string> warnings;
};

/// Whether a frontier cell gets subdivided, given the parent cost and the sum
/// of its four child costs.
bool subdivision_test(double parent_cost, double child_cost_sum, double rho,
                      const std::optional<double>& delta);

SchemeResult run_scheme(const TrainingPair& pair, const SchemeConfig& cfg);

/// Piecewise constant weight from the per-cell parameters: lambda_L for
/// fidelity modes, 1/lambda_L for regularizer modes.
WeightMap final_weight(const SchemeResult& result, SchemeRegularizer mode);

struct StoppingReport {
    int depth = 0;
    size_t cell_count = 0;
    double min_cell_side = 1.0;  // 2^-depth
    std::vector<std::pair<int, int>> cells_per_level;
    std::vector<DyadicCell> lower_bound_active;
    std::vector<DyadicCell> upper_bound_active;
    bool depth_within_limit = true;
};

StoppingReport stopping_report(const SchemeResult& result);

/// Full report as a JSON string: config, cells, metrics, warnings.
std::string report_json(const SchemeResult& result);

}  // namespace adaptv

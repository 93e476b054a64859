#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nsdyn/dates.hpp"
#include "nsdyn/marketdata.hpp"

namespace nsdyn::marketdata {

/// Per-commodity simulation parameters. Curve betas follow
/// beta_t = beta_{t-1} + d_t with d_t = rho * d_{t-1} + sigma * eps_t,
/// so rho is the AR(1) persistence of the daily beta changes.
struct SimCommodity {
    std::string id;
    Sector sector = Sector::Energy;
    double multiplier = 100.0;
    double tick_size = 0.01;
    double beta_level0 = 60.0;
    double beta_slope0 = -3.0;
    double beta_curv0 = 0.5;
    double rho_level = 0.0;
    double rho_slope = 0.0;
    double rho_curv = 0.0;
    double sigma_level = 0.0;
    double sigma_slope = 0.0;
    double sigma_curv = 0.0;
    double price_noise = 0.0;
    double seasonal_amplitude = 0.0;
    int seasonal_theta = 1;
    double base_oi = 10000.0;
    double oi_decay = 0.7;
    double base_volume = 5000.0;
    double volume_decay = 0.7;
};

/// Synthetic market layout: calendar months with trading days 1..21, one
/// contract per month expiring on the 15th, every trading day covered to
/// `depth` curve locations.
struct SimConfig {
    int start_year = 2000;
    int start_month = 1;
    int months = 24;
    int depth = 13;
    int lambda_depth = 4;
    bool write_cot = false;
    std::vector<SimCommodity> commodities;
};

SimConfig load_sim_config(const std::string& path);

struct TruthRow {
    Date date;
    double beta_level = 0.0;
    double beta_slope = 0.0;
    double beta_curvature = 0.0;
    double beta_seasonal = 0.0;
    int theta = 0;
    double lambda = 0.0;
};

struct SimResult {
    std::vector<ContractChain> chains;
    std::map<std::string, std::vector<TruthRow>> truth;
    std::vector<CotSeries> cot;
};

/// Generates chains whose prices follow the curve model exactly (plus optional
/// i.i.d. price noise), with the ground-truth beta paths attached.
/// Deterministic for a fixed (config, seed).
SimResult simulate_market(const SimConfig& config, std::uint64_t seed);

void write_chain_csv(const ContractChain& chain, const std::string& path);
void write_truth_csv(const SimResult& result, const std::string& path);
void write_cot_csv(const std::vector<CotSeries>& cot, const std::string& path);
void write_spec_json(const SimConfig& config, const std::string& path);

/// Simulates and writes a complete data directory: one price CSV per
/// commodity plus spec.json, truth.csv and (when present) cot.csv.
void write_sim_data(const SimConfig& config, std::uint64_t seed,
                    const std::string& dir);

}  // namespace nsdyn::marketdata

#pragma once

// Synthetic coastal hydrology with known closed-form dynamics, standing in
// for the undistributed well records. Groundwater follows a linear reservoir
// recharged by rainfall and coupled linearly to the tide:
//
//   s[t+1] = recession * s[t] + recharge_coeff * rain[t]
//   gwl[t] = base + s[t] + tidal_coeff * tide[t] + gaussian(0, noise_std)
//
// Rainfall is a Poisson-cluster process: exponential inter-storm gaps,
// exponential durations, exponential intensities.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwcast/numerics.hpp"
#include "gwcast/timeseries.hpp"

namespace gwcast {

inline constexpr double kHoursPerMonth = 730.0;  // 8760 / 12

struct TideConstituent {
    double amplitude_m = 0.0;
    double period_hours = 1.0;
    double phase_rad = 0.0;
};

struct StormProcess {
    double storms_per_month = 4.0;
    double mean_duration_hours = 6.0;
    double mean_intensity_mm = 4.0;
};

struct HydroConfig {
    std::size_t n_hours = 17520;  // two years
    double base_gwl_m = 1.0;
    double recession = 0.98;                 // per-hour retention factor
    double recharge_coeff_m_per_mm = 0.001;  // storage rise per mm of rain
    double tidal_coeff = 1.0;
    std::vector<TideConstituent> constituents = {
        {0.5, 12.42, 0.0},   // semidiurnal
        {0.15, 25.82, 1.0},  // diurnal
    };
    StormProcess storms;
    double noise_std_m = 0.01;
    double initial_storage_m = 0.0;
    std::uint64_t seed = 1;
    std::string well_id = "synth";
};

inline void validate_hydro_config(const HydroConfig& cfg) {
    if (!(cfg.recession > 0.0 && cfg.recession < 1.0))
        throw std::invalid_argument("HydroConfig: recession must lie in (0,1)");
    for (const auto& c : cfg.constituents)
        if (c.amplitude_m < 0.0 || !(c.period_hours > 0.0))
            throw std::invalid_argument("HydroConfig: bad tide constituent");
    if (cfg.noise_std_m < 0.0)
        throw std::invalid_argument("HydroConfig: noise_std must be >= 0");
    if (cfg.n_hours == 0)
        throw std::invalid_argument("HydroConfig: n_hours must be positive");
}

inline double gen_tide(double t_hours, const std::vector<TideConstituent>& constituents) {
    double v = 0.0;
    for (const auto& c : constituents)
        v += c.amplitude_m *
             std::sin(6.283185307179586476925286766559 * t_hours / c.period_hours + c.phase_rad);
    return v;
}

struct RainfallSeries {
    std::vector<double> mm_per_hour;
    std::size_t storm_count = 0;
};

inline RainfallSeries gen_rainfall(const HydroConfig& cfg, Prng& prng) {
    RainfallSeries out;
    out.mm_per_hour.assign(cfg.n_hours, 0.0);
    const double rate = cfg.storms.storms_per_month;
    if (rate <= 0.0) return out;
    const double mean_gap = kHoursPerMonth / rate;

    double t = prng.exponential(mean_gap);
    while (t < static_cast<double>(cfg.n_hours)) {
        ++out.storm_count;
        const double duration = prng.exponential(cfg.storms.mean_duration_hours);
        const double intensity = prng.exponential(cfg.storms.mean_intensity_mm);
        const std::size_t start = static_cast<std::size_t>(t);
        const std::size_t hours = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(duration)));
        for (std::size_t h = start; h < start + hours && h < cfg.n_hours; ++h)
            out.mm_per_hour[h] += intensity;
        t += prng.exponential(mean_gap);
    }
    return out;
}

inline std::vector<double> simulate_gwl(const std::vector<double>& rain,
                                        const std::vector<double>& tide, const HydroConfig& cfg,
                                        Prng& prng) {
    if (rain.size() != tide.size())
        throw std::invalid_argument("simulate_gwl: rain length " + std::to_string(rain.size()) +
                                    " != tide length " + std::to_string(tide.size()));
    std::vector<double> gwl(rain.size());
    double storage = cfg.initial_storage_m;
    for (std::size_t t = 0; t < rain.size(); ++t) {
        const double noise = prng.gaussian(0.0, cfg.noise_std_m);
        gwl[t] = cfg.base_gwl_m + storage + cfg.tidal_coeff * tide[t] + noise;
        storage = cfg.recession * storage + cfg.recharge_coeff_m_per_mm * rain[t];
    }
    return gwl;
}

// Assembles a full frame starting 2010-01-01T00:00:00Z. Same config and seed
// give an identical frame.
inline TimeSeriesFrame generate_frame(const HydroConfig& cfg) {
    validate_hydro_config(cfg);
    Prng prng(cfg.seed);
    const RainfallSeries rain = gen_rainfall(cfg, prng);
    std::vector<double> tide(cfg.n_hours);
    for (std::size_t t = 0; t < cfg.n_hours; ++t)
        tide[t] = gen_tide(static_cast<double>(t), cfg.constituents);
    const std::vector<double> gwl = simulate_gwl(rain.mm_per_hour, tide, cfg, prng);

    TimeSeriesFrame frame;
    frame.well_id = cfg.well_id;
    frame.rows.resize(cfg.n_hours);
    const std::int64_t start_hour = days_from_civil(2010, 1, 1) * 24;
    for (std::size_t t = 0; t < cfg.n_hours; ++t) {
        frame.rows[t].hour = start_hour + static_cast<std::int64_t>(t);
        frame.rows[t].rainfall_mm = rain.mm_per_hour[t];
        frame.rows[t].tide_m = tide[t];
        frame.rows[t].gwl_m = gwl[t];
    }
    return frame;
}

}  // namespace gwcast

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hsz {

// Exogenous price series on a uniform time grid. Energy price may be
// negative; AS capacity prices are nonnegative.
struct MarketSeries {
    double dt_hours = 1.0;
    std::int64_t start_ts = 0; // unix seconds of the first sample
    std::vector<double> lambda_e;
    std::vector<double> lambda_res;
    std::vector<double> lambda_up;
    std::vector<double> lambda_dn;

    std::size_t size() const { return lambda_e.size(); }
    std::int64_t timestamp_at(std::size_t i) const {
        return start_ts + static_cast<std::int64_t>(static_cast<double>(i) * dt_hours * 3600.0);
    }
    void validate() const;
};

// Available PV power on the same grid as the paired MarketSeries. Profiles
// are stored normalized to a reference nameplate; scaling an episode to a
// sampled design is a single multiply by p_pv / nameplate_mw.
struct PvSeries {
    double dt_hours = 1.0;
    std::int64_t start_ts = 0;
    double nameplate_mw = 0.0; // reference nameplate the profile is scaled to
    std::vector<double> p_avail;

    std::size_t size() const { return p_avail.size(); }
    void validate() const;
};

struct SeriesPair {
    MarketSeries market;
    PvSeries pv;
};

// Slice of the series used for one episode, with the factor that scales the
// episode's market revenue to a yearly figure: w_anu = 8760 / (T * dt).
struct EpisodeWindow {
    std::size_t start = 0;
    std::size_t length = 0;
    double w_anu = 1.0;
};

EpisodeWindow episode_window(std::size_t series_len, std::size_t t_intervals,
                             double dt_hours, std::size_t start);

// Column names in the input CSV. One file carries both price and PV columns.
struct CsvSchema {
    std::string ts = "ts";
    std::string lambda_e = "lambda_e";
    std::string lambda_res = "lambda_res";
    std::string lambda_up = "lambda_up";
    std::string lambda_dn = "lambda_dn";
    std::string p_avail = "p_avail";
};

// Loads a CSV with a header row and ISO-8601 timestamps. Rows with missing
// or malformed values are rejected with the offending row index; the grid
// must be strictly increasing with constant spacing.
SeriesPair load_series(const std::filesystem::path& path, const CsvSchema& schema);

// Mean-aggregates both series into dt_target bins and rescales the PV
// profile so its maximum equals pv_nameplate_mw. dt_target must be an
// integer multiple of the source spacing and the length divisible by the
// ratio.
SeriesPair resample_and_scale(const MarketSeries& market, const PvSeries& pv,
                              double dt_target_hours, double pv_nameplate_mw);

// Canonical JSON dump/load (dt_hours, start_ts and value arrays); loading a
// dump reproduces the series exactly.
std::string to_canonical_json(const SeriesPair& series);
SeriesPair from_canonical_json(const std::string& text);

void save_canonical(const SeriesPair& series, const std::filesystem::path& path);
SeriesPair load_canonical(const std::filesystem::path& path);

} // namespace hsz

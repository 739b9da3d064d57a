#pragma once

#include <string>

#include "fcm/types.hpp"

namespace fcm {

// Replay input: external per-seller quantile forecasts plus realizations.
// A missing (timestamp, seller) row means the seller skipped that round.
struct ForecastTable {
    std::vector<std::string> sellers;  // first-appearance order
    Vec quantile_levels;
    std::vector<std::int64_t> timestamps;            // strictly increasing
    std::vector<Matrix> submissions;                 // per round: seller x level
    std::vector<std::vector<std::uint8_t>> missing;  // per round, per seller
    Vec realizations;                                // per round

    std::size_t rounds() const { return timestamps.size(); }
    std::size_t seller_count() const { return sellers.size(); }
};

// Forecast CSV: header "timestamp,seller,horizon,q<level>...", one row per
// (timestamp, seller). Realization CSV: header "timestamp,y". Errors carry
// the offending line number. When expected_levels is nonempty the file's
// quantile columns must match it exactly.
ForecastTable load_forecast_csv(const std::string& forecasts_path,
                                const std::string& realizations_path,
                                const Vec& expected_levels = {});

// Inverse of load_forecast_csv, used for fixtures and round-trip checks.
std::string forecast_table_to_csv(const ForecastTable& table);
std::string realizations_to_csv(const ForecastTable& table);

}  // namespace fcm

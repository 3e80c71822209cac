#pragma once

#include <memory>
#include <vector>

#include "hybridsizer/env.hpp"
#include "hybridsizer/series.hpp"

namespace hsz::testing {

// Builds an in-memory series pair on an hourly grid. The PV profile is kept
// as given (nameplate = its maximum) so a design with p_pv_mw == nameplate
// sees exactly these values.
inline std::shared_ptr<const SeriesPair> make_series(
    std::vector<double> lambda_e, std::vector<double> p_avail,
    std::vector<double> lambda_res = {}, std::vector<double> lambda_up = {},
    std::vector<double> lambda_dn = {}, double dt_hours = 1.0,
    std::int64_t start_ts = 1656633600 /* 2022-07-01T00:00:00Z */) {
    const std::size_t n = lambda_e.size();
    SeriesPair s;
    s.market.dt_hours = dt_hours;
    s.market.start_ts = start_ts;
    s.market.lambda_e = std::move(lambda_e);
    s.market.lambda_res = lambda_res.empty() ? std::vector<double>(n, 0.0) : lambda_res;
    s.market.lambda_up = lambda_up.empty() ? std::vector<double>(n, 0.0) : lambda_up;
    s.market.lambda_dn = lambda_dn.empty() ? std::vector<double>(n, 0.0) : lambda_dn;
    s.pv.dt_hours = dt_hours;
    s.pv.start_ts = start_ts;
    s.pv.p_avail = std::move(p_avail);
    double peak = 0.0;
    for (double v : s.pv.p_avail) peak = std::max(peak, v);
    s.pv.nameplate_mw = peak > 0.0 ? peak : 1.0;
    return std::make_shared<SeriesPair>(std::move(s));
}

} // namespace hsz::testing

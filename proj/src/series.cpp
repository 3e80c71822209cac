#include "hybridsizer/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace hsz {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, std::size_t line_no, const std::string& col) {
    const std::string t = trim(cell);
    if (t.empty()) fail("missing value in column '" + col + "' at line " + std::to_string(line_no));
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        fail("malformed number '" + t + "' in column '" + col + "' at line " +
             std::to_string(line_no));
    return v;
}

// ISO-8601 without timezone, 'T' or space separator; interpreted as UTC.
std::int64_t parse_timestamp(const std::string& cell, std::size_t line_no) {
    const std::string t = trim(cell);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    const int n = std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 3 || (n > 3 && sep != 'T' && sep != ' '))
        fail("malformed timestamp '" + t + "' at line " + std::to_string(line_no));
    std::tm tm{};
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = s;
    const time_t ts = timegm(&tm);
    if (ts == static_cast<time_t>(-1))
        fail("unrepresentable timestamp '" + t + "' at line " + std::to_string(line_no));
    return static_cast<std::int64_t>(ts);
}

void check_uniform_grid(const std::vector<std::int64_t>& ts) {
    if (ts.size() < 2) return;
    const std::int64_t step = ts[1] - ts[0];
    if (step <= 0) fail("non-monotone timestamps at row 2");
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const std::int64_t d = ts[i] - ts[i - 1];
        if (d <= 0) fail("non-monotone timestamps at row " + std::to_string(i + 1));
        if (d != step) fail("non-uniform timestamp spacing at row " + std::to_string(i + 1));
    }
}

std::vector<double> bin_means(const std::vector<double>& src, std::size_t ratio) {
    std::vector<double> out;
    out.reserve(src.size() / ratio);
    for (std::size_t i = 0; i + ratio <= src.size(); i += ratio) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ratio; ++j) acc += src[i + j];
        out.push_back(acc / static_cast<double>(ratio));
    }
    return out;
}

} // namespace

void MarketSeries::validate() const {
    const std::size_t n = lambda_e.size();
    if (n == 0) fail("empty market series");
    if (lambda_res.size() != n || lambda_up.size() != n || lambda_dn.size() != n)
        fail("market series arrays have unequal lengths");
    if (dt_hours <= 0.0) fail("market series dt must be positive");
    for (std::size_t i = 0; i < n; ++i) {
        if (lambda_res[i] < 0.0 || lambda_up[i] < 0.0 || lambda_dn[i] < 0.0)
            fail("negative AS price at row " + std::to_string(i + 1));
        if (!std::isfinite(lambda_e[i])) fail("non-finite energy price at row " + std::to_string(i + 1));
    }
}

void PvSeries::validate() const {
    if (p_avail.empty()) fail("empty PV series");
    if (dt_hours <= 0.0) fail("PV series dt must be positive");
    for (std::size_t i = 0; i < p_avail.size(); ++i)
        if (!(p_avail[i] >= 0.0)) fail("negative or non-finite p_avail at row " + std::to_string(i + 1));
}

EpisodeWindow episode_window(std::size_t series_len, std::size_t t_intervals,
                             double dt_hours, std::size_t start) {
    if (t_intervals < 1) fail("episode length must be >= 1");
    if (dt_hours <= 0.0) fail("dt must be positive");
    if (start + t_intervals > series_len)
        fail("episode window [" + std::to_string(start) + ", " +
             std::to_string(start + t_intervals) + ") exceeds series length " +
             std::to_string(series_len));
    EpisodeWindow w;
    w.start = start;
    w.length = t_intervals;
    w.w_anu = 8760.0 / (static_cast<double>(t_intervals) * dt_hours);
    return w;
}

SeriesPair load_series(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) fail("cannot open data file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) fail("empty data file: " + path.string());
    const auto header = split_csv_line(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;

    auto col_index = [&](const std::string& name) {
        auto it = col.find(name);
        if (it == col.end()) fail("column '" + name + "' not found in " + path.string());
        return it->second;
    };
    const std::size_t c_ts = col_index(schema.ts);
    const std::size_t c_e = col_index(schema.lambda_e);
    const std::size_t c_res = col_index(schema.lambda_res);
    const std::size_t c_up = col_index(schema.lambda_up);
    const std::size_t c_dn = col_index(schema.lambda_dn);
    const std::size_t c_pv = col_index(schema.p_avail);

    SeriesPair out;
    std::vector<std::int64_t> timestamps;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            fail("row at line " + std::to_string(line_no) + " has " +
                 std::to_string(cells.size()) + " cells, expected " +
                 std::to_string(header.size()));
        timestamps.push_back(parse_timestamp(cells[c_ts], line_no));
        out.market.lambda_e.push_back(parse_number(cells[c_e], line_no, schema.lambda_e));
        out.market.lambda_res.push_back(parse_number(cells[c_res], line_no, schema.lambda_res));
        out.market.lambda_up.push_back(parse_number(cells[c_up], line_no, schema.lambda_up));
        out.market.lambda_dn.push_back(parse_number(cells[c_dn], line_no, schema.lambda_dn));
        out.pv.p_avail.push_back(parse_number(cells[c_pv], line_no, schema.p_avail));
    }
    if (timestamps.empty()) fail("no data rows in " + path.string());

    check_uniform_grid(timestamps);
    const double dt = timestamps.size() > 1
                          ? static_cast<double>(timestamps[1] - timestamps[0]) / 3600.0
                          : 1.0;
    out.market.dt_hours = dt;
    out.market.start_ts = timestamps.front();
    out.pv.dt_hours = dt;
    out.pv.start_ts = timestamps.front();
    out.pv.nameplate_mw = *std::max_element(out.pv.p_avail.begin(), out.pv.p_avail.end());

    out.market.validate();
    out.pv.validate();
    return out;
}

SeriesPair resample_and_scale(const MarketSeries& market, const PvSeries& pv,
                              double dt_target_hours, double pv_nameplate_mw) {
    market.validate();
    pv.validate();
    if (market.size() != pv.size()) fail("market and PV series lengths differ");
    if (dt_target_hours <= 0.0) fail("target dt must be positive");
    if (pv_nameplate_mw <= 0.0) fail("PV nameplate must be positive");

    const double ratio_f = dt_target_hours / market.dt_hours;
    const double ratio_round = std::round(ratio_f);
    if (ratio_round < 1.0 || std::abs(ratio_f - ratio_round) > 1e-9 * ratio_f)
        fail("target resolution is not an integer multiple of the source spacing");
    const auto ratio = static_cast<std::size_t>(ratio_round);
    if (market.size() % ratio != 0)
        fail("series length " + std::to_string(market.size()) +
             " is not divisible by the resampling ratio " + std::to_string(ratio));

    SeriesPair out;
    out.market.dt_hours = dt_target_hours;
    out.market.start_ts = market.start_ts;
    out.market.lambda_e = bin_means(market.lambda_e, ratio);
    out.market.lambda_res = bin_means(market.lambda_res, ratio);
    out.market.lambda_up = bin_means(market.lambda_up, ratio);
    out.market.lambda_dn = bin_means(market.lambda_dn, ratio);

    out.pv.dt_hours = dt_target_hours;
    out.pv.start_ts = pv.start_ts;
    out.pv.p_avail = bin_means(pv.p_avail, ratio);
    const double peak = *std::max_element(out.pv.p_avail.begin(), out.pv.p_avail.end());
    // an identically-zero profile (degenerate synthetic data) stays zero;
    // otherwise rescale so the maximum equals the reference nameplate
    if (peak > 0.0) {
        const double scale = pv_nameplate_mw / peak;
        for (double& v : out.pv.p_avail) v *= scale;
    }
    out.pv.nameplate_mw = pv_nameplate_mw;

    out.market.validate();
    out.pv.validate();
    return out;
}

std::string to_canonical_json(const SeriesPair& series) {
    nlohmann::json j;
    j["dt_hours"] = series.market.dt_hours;
    j["start_ts"] = series.market.start_ts;
    j["market"]["lambda_e"] = series.market.lambda_e;
    j["market"]["lambda_res"] = series.market.lambda_res;
    j["market"]["lambda_up"] = series.market.lambda_up;
    j["market"]["lambda_dn"] = series.market.lambda_dn;
    j["pv"]["nameplate_mw"] = series.pv.nameplate_mw;
    j["pv"]["p_avail"] = series.pv.p_avail;
    return j.dump(2);
}

SeriesPair from_canonical_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    SeriesPair out;
    out.market.dt_hours = j.at("dt_hours").get<double>();
    out.market.start_ts = j.at("start_ts").get<std::int64_t>();
    out.market.lambda_e = j.at("market").at("lambda_e").get<std::vector<double>>();
    out.market.lambda_res = j.at("market").at("lambda_res").get<std::vector<double>>();
    out.market.lambda_up = j.at("market").at("lambda_up").get<std::vector<double>>();
    out.market.lambda_dn = j.at("market").at("lambda_dn").get<std::vector<double>>();
    out.pv.dt_hours = out.market.dt_hours;
    out.pv.start_ts = out.market.start_ts;
    out.pv.nameplate_mw = j.at("pv").at("nameplate_mw").get<double>();
    out.pv.p_avail = j.at("pv").at("p_avail").get<std::vector<double>>();
    out.market.validate();
    out.pv.validate();
    return out;
}

void save_canonical(const SeriesPair& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path.string());
    out << to_canonical_json(series) << '\n';
}

SeriesPair load_canonical(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_canonical_json(ss.str());
}

} // namespace hsz

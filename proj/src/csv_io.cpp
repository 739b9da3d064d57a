#include "fcm/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "fcm/io_util.hpp"

namespace fcm {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ValidationError("not a number: '" + std::string(s) + "'");
    return v;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ValidationError("not an integer: '" + std::string(s) + "'");
    return v;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.good()) throw std::runtime_error("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no,
                            const std::string& what) {
    throw ValidationError(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

ForecastTable load_forecast_csv(const std::string& forecasts_path,
                                const std::string& realizations_path,
                                const Vec& expected_levels) {
    ForecastTable table;

    // Realizations define the round sequence.
    {
        std::istringstream in(read_file(realizations_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (line_no == 1) {
                if (fields.size() != 2 || fields[0] != "timestamp" || fields[1] != "y")
                    fail_line(realizations_path, line_no, "expected header 'timestamp,y'");
                continue;
            }
            if (fields.size() != 2)
                fail_line(realizations_path, line_no, "expected 2 fields");
            std::int64_t ts;
            double y;
            try {
                ts = parse_int(fields[0]);
                y = parse_double(fields[1]);
            } catch (const ValidationError& e) {
                fail_line(realizations_path, line_no, e.what());
            }
            if (!table.timestamps.empty() && ts <= table.timestamps.back())
                fail_line(realizations_path, line_no, "timestamps must be strictly increasing");
            if (!std::isfinite(y))
                fail_line(realizations_path, line_no, "realization must be finite");
            table.timestamps.push_back(ts);
            table.realizations.push_back(y);
        }
        if (table.timestamps.empty())
            throw ValidationError(realizations_path + ": no realization rows");
    }

    std::map<std::int64_t, std::size_t> round_of;
    for (std::size_t r = 0; r < table.timestamps.size(); ++r)
        round_of[table.timestamps[r]] = r;

    struct Row {
        std::size_t round;
        Vec values;
    };
    std::vector<std::vector<Row>> rows_by_seller;
    std::map<std::string, std::size_t> seller_index;
    std::vector<std::int64_t> last_ts_of_seller;

    {
        std::istringstream in(read_file(forecasts_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            const auto fields = split_csv_line(line);
            if (line_no == 1) {
                if (fields.size() < 4 || fields[0] != "timestamp" || fields[1] != "seller" ||
                    fields[2] != "horizon")
                    fail_line(forecasts_path, line_no,
                              "expected header 'timestamp,seller,horizon,q<level>...'");
                for (std::size_t j = 3; j < fields.size(); ++j) {
                    if (fields[j].size() < 2 || fields[j][0] != 'q')
                        fail_line(forecasts_path, line_no,
                                  "quantile columns must be named q<level>");
                    double tau;
                    try {
                        tau = parse_double(fields[j].substr(1));
                    } catch (const ValidationError& e) {
                        fail_line(forecasts_path, line_no, e.what());
                    }
                    if (!(tau > 0.0 && tau < 1.0))
                        fail_line(forecasts_path, line_no, "quantile levels must lie in (0,1)");
                    if (!table.quantile_levels.empty() && tau <= table.quantile_levels.back())
                        fail_line(forecasts_path, line_no,
                                  "quantile columns must be strictly increasing");
                    table.quantile_levels.push_back(tau);
                }
                if (!expected_levels.empty() && table.quantile_levels != expected_levels)
                    fail_line(forecasts_path, line_no,
                              "quantile columns differ from the configured levels");
                continue;
            }
            if (table.quantile_levels.empty())
                fail_line(forecasts_path, line_no, "missing header row");
            if (fields.size() != 3 + table.quantile_levels.size())
                fail_line(forecasts_path, line_no,
                          "expected " + std::to_string(3 + table.quantile_levels.size()) +
                              " fields");

            std::int64_t ts, horizon;
            Vec values(table.quantile_levels.size());
            try {
                ts = parse_int(fields[0]);
                horizon = parse_int(fields[2]);
                for (std::size_t j = 0; j < values.size(); ++j)
                    values[j] = parse_double(fields[3 + j]);
            } catch (const ValidationError& e) {
                fail_line(forecasts_path, line_no, e.what());
            }
            const std::string& seller = fields[1];
            if (seller.empty()) fail_line(forecasts_path, line_no, "empty seller id");
            if (horizon != 1)
                fail_line(forecasts_path, line_no,
                          "replay supports a single lead time; split multi-horizon data per "
                          "lead time");
            auto it = round_of.find(ts);
            if (it == round_of.end())
                fail_line(forecasts_path, line_no,
                          "timestamp has no matching realization row");
            for (std::size_t j = 1; j < values.size(); ++j)
                if (values[j] < values[j - 1])
                    fail_line(forecasts_path, line_no,
                              "quantile forecasts must be nondecreasing across levels");
            for (double v : values)
                if (!std::isfinite(v)) fail_line(forecasts_path, line_no, "values must be finite");

            auto [sit, inserted] = seller_index.try_emplace(seller, table.sellers.size());
            if (inserted) {
                table.sellers.push_back(seller);
                rows_by_seller.emplace_back();
                last_ts_of_seller.push_back(std::numeric_limits<std::int64_t>::min());
            }
            const std::size_t si = sit->second;
            if (ts <= last_ts_of_seller[si]) {
                if (std::any_of(rows_by_seller[si].begin(), rows_by_seller[si].end(),
                                [&](const Row& r) { return r.round == it->second; }))
                    throw ConflictError(forecasts_path + ":" + std::to_string(line_no) +
                                        ": duplicate (timestamp, seller) row");
                fail_line(forecasts_path, line_no,
                          "timestamps must be strictly increasing per seller");
            }
            last_ts_of_seller[si] = ts;
            rows_by_seller[si].push_back({it->second, std::move(values)});
        }
    }
    if (table.sellers.empty())
        throw ValidationError(forecasts_path + ": no forecast rows");

    const std::size_t n = table.sellers.size();
    const std::size_t m = table.quantile_levels.size();
    table.submissions.assign(table.rounds(), Matrix(n, m));
    table.missing.assign(table.rounds(), std::vector<std::uint8_t>(n, 1));
    for (std::size_t si = 0; si < n; ++si) {
        for (const Row& row : rows_by_seller[si]) {
            table.missing[row.round][si] = 0;
            for (std::size_t j = 0; j < m; ++j) table.submissions[row.round](si, j) = row.values[j];
        }
    }
    return table;
}

std::string forecast_table_to_csv(const ForecastTable& table) {
    std::string out = "timestamp,seller,horizon";
    for (double tau : table.quantile_levels) out += ",q" + format_double(tau);
    out += '\n';
    for (std::size_t r = 0; r < table.rounds(); ++r) {
        for (std::size_t i = 0; i < table.seller_count(); ++i) {
            if (table.missing[r][i]) continue;
            out += std::to_string(table.timestamps[r]) + "," + table.sellers[i] + ",1";
            for (std::size_t j = 0; j < table.quantile_levels.size(); ++j)
                out += "," + format_double(table.submissions[r](i, j));
            out += '\n';
        }
    }
    return out;
}

std::string realizations_to_csv(const ForecastTable& table) {
    std::string out = "timestamp,y\n";
    for (std::size_t r = 0; r < table.rounds(); ++r)
        out += std::to_string(table.timestamps[r]) + "," + format_double(table.realizations[r]) +
               '\n';
    return out;
}

}  // namespace fcm

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "chemowave/error.hpp"
#include "chemowave/grid.hpp"
#include "chemowave/profile.hpp"

namespace chemowave::io {

using Json = nlohmann::ordered_json;

class IoError : public Error {
public:
    using Error::Error;
};

/// Locale-independent rendering with 17 significant digits.
inline std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    if (text == "nan") {
        return std::nan("");
    }
    if (text == "inf") {
        return HUGE_VAL;
    }
    if (text == "-inf") {
        return -HUGE_VAL;
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw IoError("cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

/// snap_t{time with 4 decimals}.csv
inline std::string snapshot_filename(double t) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), t, std::chars_format::fixed, 4);
    return "snap_t" + std::string(buf, res.ptr) + ".csv";
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }

    const std::vector<double>& column(std::string_view name) const {
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) {
                return columns[k];
            }
        }
        throw IoError("CSV has no column '" + std::string(name) + "'");
    }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Comma-separated, one header row, LF line endings.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::span<const double>>& columns) {
    if (header.size() != columns.size()) {
        throw IoError("write_csv: header and column counts differ");
    }
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) {
            throw IoError("write_csv: ragged columns");
        }
    }
    std::string text;
    text.reserve(rows * columns.size() * 24 + 64);
    for (std::size_t k = 0; k < header.size(); ++k) {
        text += header[k];
        text += (k + 1 == header.size()) ? '\n' : ',';
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) {
            text += format_double(columns[k][r]);
            text += (k + 1 == columns.size()) ? '\n' : ',';
        }
    }
    write_text(path, text);
}

inline Table read_csv(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    Table table;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (first) {
            for (auto f : fields) {
                table.header.emplace_back(f);
            }
            table.columns.resize(fields.size());
            first = false;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw IoError(path.string() + ": row has " + std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(table.header.size()));
        }
        for (std::size_t k = 0; k < fields.size(); ++k) {
            table.columns[k].push_back(parse_double(fields[k]));
        }
    }
    if (first) {
        throw IoError(path.string() + ": empty CSV");
    }
    return table;
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const std::filesystem::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_profile_csv(const std::filesystem::path& path, const WaveProfile& profile) {
    write_csv(path, {"z", "U", "V", "W"}, {profile.z, profile.U, profile.V, profile.W});
}

inline void write_snapshot_csv(const std::filesystem::path& path, const Grid1D& grid, const State& state) {
    const auto x = grid.nodes();
    write_csv(path, {"x", "u", "v"}, {x, state.u, state.v});
}

inline State read_snapshot_csv(const std::filesystem::path& path, double t) {
    const Table table = read_csv(path);
    State st;
    st.t = t;
    st.u = table.column("u");
    st.v = table.column("v");
    return st;
}

inline Json params_json(const WaveParams& p) {
    Json j;
    j["p"] = p.p;
    j["chi"] = p.chi;
    j["u_minus"] = p.u_minus;
    j["w_plus"] = p.w_plus;
    j["s"] = p.s;
    j["v_minus"] = p.v_minus;
    return j;
}

inline Json tails_json(const TailModel& t) {
    Json j;
    j["algebraic_exponent"] = t.algebraic_exponent;
    j["algebraic_exponent_target"] = t.target_exponent;
    j["algebraic_prefactor"] = t.algebraic_prefactor;
    j["right_window"] = {t.right_window.first, t.right_window.second};
    j["exp_rate"] = t.exp_rate;
    j["exp_rate_target"] = t.target_rate;
    j["exp_prefactor"] = t.exp_prefactor;
    j["left_window"] = {t.left_window.first, t.left_window.second};
    return j;
}

inline Json grid_json(const Grid1D& g) {
    Json j;
    j["x_left"] = g.x_left;
    j["x_right"] = g.x_right;
    j["nx"] = g.nx;
    j["h"] = g.h;
    return j;
}

}  // namespace chemowave::io

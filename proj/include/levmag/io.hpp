#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "levmag/axion_reach.hpp"
#include "levmag/errors.hpp"
#include "levmag/field_response.hpp"
#include "levmag/param_inversion.hpp"
#include "levmag/signal_analysis.hpp"
#include "levmag/types.hpp"

// File formats: small CSV readers/writers and the compact binary time-series
// format (16-byte header: magic "FLTS", u32 version, f64 sample rate; then
// little-endian f64 samples).
namespace levmag::io {

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

inline double parse_number(const std::string& s, const std::string& file, std::size_t lineno) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw parse_error(file + ":" + std::to_string(lineno) + ": not a number: '" + s + "'");
    return v;
}

/// Read all non-empty rows; returns (lineno, cells). An optional header row
/// naming the expected first column is skipped.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_rows(
    const std::string& path, const std::string& header_first_col) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool maybe_header = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto cells = split_csv(t);
        if (maybe_header && !cells.empty() && cells[0] == header_first_col) {
            maybe_header = false;
            continue;
        }
        maybe_header = false;
        rows.emplace_back(lineno, std::move(cells));
    }
    return rows;
}

static_assert(std::endian::native == std::endian::little,
              "binary time-series format assumes a little-endian host");

} // namespace detail

// --- time series ---

inline void write_timeseries_csv(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out.precision(17);
    out << "time_s,value\n";
    for (std::size_t i = 0; i < ts.samples.size(); ++i)
        out << ts.time_at(i) << "," << ts.samples[i] << "\n";
}

inline TimeSeries read_timeseries_csv(const std::string& path) {
    const auto rows = detail::read_rows(path, "time_s");
    if (rows.size() < 2) throw parse_error(path + ": need at least two samples");
    TimeSeries ts;
    std::vector<double> t;
    for (const auto& [lineno, cells] : rows) {
        if (cells.size() < 2)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected t,value");
        t.push_back(detail::parse_number(cells[0], path, lineno));
        ts.samples.push_back(detail::parse_number(cells[1], path, lineno));
    }
    ts.start_time_s = t.front();
    ts.sample_rate_hz = (t.size() - 1) / (t.back() - t.front());
    return ts;
}

inline constexpr std::uint32_t flts_version = 1;

inline void write_flts(const std::string& path, const TimeSeries& ts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out.write("FLTS", 4);
    const std::uint32_t ver = flts_version;
    out.write(reinterpret_cast<const char*>(&ver), 4);
    out.write(reinterpret_cast<const char*>(&ts.sample_rate_hz), 8);
    out.write(reinterpret_cast<const char*>(ts.samples.data()),
              static_cast<std::streamsize>(ts.samples.size() * sizeof(double)));
    if (!out) throw io_error("short write to " + path);
}

inline TimeSeries read_flts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    char magic[4];
    std::uint32_t ver = 0;
    TimeSeries ts;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&ver), 4);
    in.read(reinterpret_cast<char*>(&ts.sample_rate_hz), 8);
    if (!in || std::memcmp(magic, "FLTS", 4) != 0)
        throw parse_error(path + ": not a FLTS file");
    if (ver != flts_version)
        throw parse_error(path + ": unsupported FLTS version " + std::to_string(ver));
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<std::size_t>(in.tellg()) - 16;
    in.seekg(16);
    if (bytes % sizeof(double) != 0) throw parse_error(path + ": truncated sample data");
    ts.samples.resize(bytes / sizeof(double));
    in.read(reinterpret_cast<char*>(ts.samples.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw io_error("short read from " + path);
    return ts;
}

// --- measurement tables ---

/// freq_pairs.csv: f_alpha_hz, f_beta_prime_hz, sigma_hz
inline std::vector<inversion::QuadraturePoint> read_freq_pairs_csv(const std::string& path) {
    std::vector<inversion::QuadraturePoint> out;
    for (const auto& [lineno, cells] : detail::read_rows(path, "f_alpha_hz")) {
        if (cells.size() < 2)
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected f_alpha_hz,f_beta_prime_hz[,sigma_hz]");
        inversion::QuadraturePoint p;
        p.f_alpha_hz = detail::parse_number(cells[0], path, lineno);
        p.f_shifted_hz = detail::parse_number(cells[1], path, lineno);
        p.sigma_hz = cells.size() > 2 ? detail::parse_number(cells[2], path, lineno) : 1.0;
        out.push_back(p);
    }
    return out;
}

/// coil_sweep.csv: coil_id, current_a, f_alpha_hz, sigma_hz (optional)
inline std::vector<field::CoilSweepPoint> read_coil_sweep_csv(const std::string& path) {
    std::vector<field::CoilSweepPoint> out;
    for (const auto& [lineno, cells] : detail::read_rows(path, "coil_id")) {
        if (cells.size() < 3)
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected coil_id,current_a,f_alpha_hz[,sigma_hz]");
        field::CoilSweepPoint p;
        p.coil_id = static_cast<int>(detail::parse_number(cells[0], path, lineno));
        p.current_a = detail::parse_number(cells[1], path, lineno);
        p.f_alpha_hz = detail::parse_number(cells[2], path, lineno);
        if (cells.size() > 3) p.sigma_hz = detail::parse_number(cells[3], path, lineno);
        out.push_back(p);
    }
    return out;
}

/// current_a, amplitude rows for the SNR=1 crossing.
inline std::vector<signal::CrossingPoint> read_crossing_csv(const std::string& path) {
    std::vector<signal::CrossingPoint> out;
    for (const auto& [lineno, cells] : detail::read_rows(path, "current_a")) {
        if (cells.size() < 2)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected current_a,amplitude");
        out.push_back({detail::parse_number(cells[0], path, lineno),
                       detail::parse_number(cells[1], path, lineno)});
    }
    return out;
}

inline void write_psd_csv(const std::string& path, const signal::Psd& psd) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out.precision(12);
    out << "frequency_hz,power\n";
    for (std::size_t i = 0; i < psd.frequency_hz.size(); ++i)
        out << psd.frequency_hz[i] << "," << psd.power[i] << "\n";
}

inline std::pair<std::vector<double>, std::vector<double>> read_psd_csv(const std::string& path) {
    std::vector<double> f, p;
    for (const auto& [lineno, cells] : detail::read_rows(path, "frequency_hz")) {
        if (cells.size() < 2)
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected frequency_hz,power");
        f.push_back(detail::parse_number(cells[0], path, lineno));
        p.push_back(detail::parse_number(cells[1], path, lineno));
    }
    return {std::move(f), std::move(p)};
}

inline void write_reach_csv(const std::string& path, const axion::ReachCurve& curve,
                            const std::string& label = "") {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out.precision(12);
    out << "frequency_hz,mass_ev,g_limit" << (label.empty() ? "" : ",label") << "\n";
    for (std::size_t i = 0; i < curve.frequency_hz.size(); ++i) {
        out << curve.frequency_hz[i] << "," << curve.mass_ev[i] << "," << curve.g_limit[i];
        if (!label.empty()) out << "," << label;
        out << "\n";
    }
}

/// Reference exclusion bounds for overlay: frequency_hz, g_limit, label.
/// Curves keep their first-appearance order; rows must be well formed.
inline std::vector<axion::ReferenceBound> load_reference_bounds(const std::string& path) {
    std::vector<axion::ReferenceBound> out;
    for (const auto& [lineno, cells] : detail::read_rows(path, "frequency_hz")) {
        if (cells.size() < 3)
            throw parse_error(path + ":" + std::to_string(lineno) +
                              ": expected frequency_hz,g_limit,label");
        const double f = detail::parse_number(cells[0], path, lineno);
        const double g = detail::parse_number(cells[1], path, lineno);
        const std::string& label = cells[2];
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const auto& b) { return b.label == label; });
        if (it == out.end()) {
            out.push_back({label, {}, {}});
            it = out.end() - 1;
        }
        it->frequency_hz.push_back(f);
        it->g_limit.push_back(g);
    }
    return out;
}

} // namespace levmag::io

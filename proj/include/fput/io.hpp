#ifndef FPUT_IO_HPP
#define FPUT_IO_HPP

/** @file
 * CSV output. Numbers are written with std::to_chars in shortest round-trip
 * form, so parsing a file gives back the exact doubles and nothing depends
 * on the process locale.
 */

#include "fput/chaos.hpp"
#include "fput/experiments.hpp"
#include "fput/integrators.hpp"
#include "fput/two_mode.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace fput::io {

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

/// Inverse of format_double, also locale independent.
inline double parse_double(const std::string& s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("parse_double: not a number: '" + s + "'");
    return v;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(&os) {}

    void header(const std::vector<std::string>& cols)
    {
        for (std::size_t i = 0; i < cols.size(); ++i)
            *os_ << (i ? "," : "") << cols[i];
        *os_ << '\n';
    }

    CsvWriter& field(double v) { return raw(format_double(v)); }
    CsvWriter& field(long long v) { return raw(std::to_string(v)); }
    CsvWriter& field(std::size_t v) { return raw(std::to_string(v)); }
    CsvWriter& field(int v) { return raw(std::to_string(v)); }
    CsvWriter& field(const std::string& s) { return raw(s); }
    CsvWriter& field(const char* s) { return raw(s); }

    void end_row()
    {
        *os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s)
    {
        if (!first_)
            *os_ << ',';
        *os_ << s;
        first_ = false;
        return *this;
    }

    std::ostream* os_;
    bool first_ = true;
};

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open output file " + path);
    return f;
}

/// t, x_1..x_N, p_1..p_N
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::size_t n)
{
    CsvWriter w(os);
    std::vector<std::string> cols{"t"};
    for (std::size_t j = 1; j <= n; ++j)
        cols.push_back("x_" + std::to_string(j));
    for (std::size_t j = 1; j <= n; ++j)
        cols.push_back("p_" + std::to_string(j));
    w.header(cols);
    for (const auto& s : tr.samples) {
        w.field(s.t);
        for (Eigen::Index i = 0; i < s.y.size(); ++i)
            w.field(s.y[i]);
        w.end_row();
    }
}

/// t, E_1..E_k
inline void write_mode_energies_csv(std::ostream& os, const std::vector<double>& times,
                                    const std::vector<Eigen::VectorXd>& energies)
{
    CsvWriter w(os);
    std::vector<std::string> cols{"t"};
    const auto k = energies.empty() ? 0 : energies.front().size();
    for (Eigen::Index j = 1; j <= k; ++j)
        cols.push_back("E_" + std::to_string(j));
    w.header(cols);
    for (std::size_t i = 0; i < times.size(); ++i) {
        w.field(times[i]);
        for (Eigen::Index j = 0; j < energies[i].size(); ++j)
            w.field(energies[i][j]);
        w.end_row();
    }
}

inline void write_series_csv(std::ostream& os, const IndicatorSeries& s)
{
    CsvWriter w(os);
    w.header({"t", "value"});
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        w.field(s.times[i]).field(s.values[i]);
        w.end_row();
    }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    CsvWriter w(os);
    w.header({"tau", "mean_A", "sd_A", "mean_B", "sd_B"});
    for (const auto& r : rows) {
        w.field(r.tau).field(r.mean_a).field(r.sd_a).field(r.mean_b).field(r.sd_b);
        w.end_row();
    }
}

inline void write_chaos_fraction_csv(std::ostream& os, const std::vector<ChaosFractionRow>& rows)
{
    CsvWriter w(os);
    w.header({"N", "percent_chaotic", "percent_undetermined"});
    for (const auto& r : rows) {
        w.field(r.n).field(r.percent_chaotic).field(r.percent_undetermined);
        w.end_row();
    }
}

inline void write_portrait_csv(std::ostream& os, const PhasePortrait& pp)
{
    CsvWriter w(os);
    w.header({"theta", "delta", "dtheta", "ddelta", "in_region"});
    for (const auto& c : pp.cells) {
        w.field(c.theta).field(c.delta).field(c.dtheta).field(c.ddelta).field(c.in_region ? 1 : 0);
        w.end_row();
    }
}

inline void write_reduced_trajectory_csv(std::ostream& os, const ReducedTrajectory& tr)
{
    CsvWriter w(os);
    w.header({"T", "delta", "theta"});
    for (const auto& s : tr.samples) {
        w.field(s.T).field(s.delta).field(s.theta);
        w.end_row();
    }
}

} // namespace fput::io

#endif // FPUT_IO_HPP

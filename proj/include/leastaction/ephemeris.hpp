#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "leastaction/errors.hpp"
#include "leastaction/integrator.hpp"
#include "leastaction/io.hpp"
#include "leastaction/path.hpp"
#include "leastaction/systems.hpp"

namespace leastaction {

// Canonical ephemeris CSV contract. Positions in meters, velocities in m/s,
// solar-system-barycenter coordinates, one-day sampling.
inline constexpr const char* kEphemerisHeader =
    "body,t_days,x_m,y_m,z_m,vx_ms,vy_ms,vz_ms,mass_kg";

struct EphemerisBody {
    std::string name;
    double mass_kg = 0.0;
};

struct EphemerisSample {
    double t_days = 0.0;
    std::array<double, 3> position{};  // m
    std::array<double, 3> velocity{};  // m/s
};

struct EphemerisTable {
    std::vector<EphemerisBody> bodies;                 // first-appearance order
    std::vector<std::vector<EphemerisSample>> series;  // per body, shared timestamps
    std::optional<double> epoch_jd;

    std::size_t body_index(std::string_view name) const {
        for (std::size_t i = 0; i < bodies.size(); ++i) {
            if (bodies[i].name == name) return i;
        }
        throw ConfigError("ephemeris table has no body named " + std::string(name));
    }
};

namespace detail {

inline bool known_ephemeris_body(std::string_view name) {
    static constexpr std::string_view allowed[] = {"sun", "mercury", "venus", "earth", "mars"};
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return std::find(std::begin(allowed), std::end(allowed), lower) != std::end(allowed);
}

inline double parse_number(const std::string& field, std::size_t line_no) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        if (consumed != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError("not a number: '" + field + "'", line_no);
    }
}

}  // namespace detail

inline EphemerisTable parse_ephemeris(std::string_view content) {
    if (content.empty()) throw ParseError("empty ephemeris file");
    EphemerisTable table;
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# epoch=JD", 0) == 0) {
                table.epoch_jd = detail::parse_number(line.substr(10), line_no);
            }
            continue;
        }
        if (!header_seen) {
            if (line != kEphemerisHeader) {
                if (line.find("km") != std::string::npos) {
                    throw ParseError("non-SI units in header; expected meters and m/s (" +
                                         std::string(kEphemerisHeader) + ")",
                                     line_no);
                }
                throw ParseError("bad header; expected " + std::string(kEphemerisHeader), line_no);
            }
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 9) {
            throw ParseError("expected 9 fields, got " + std::to_string(fields.size()), line_no);
        }
        const std::string& name = fields[0];
        if (!detail::known_ephemeris_body(name)) {
            throw ParseError("unknown body '" + name + "'", line_no);
        }
        const double mass = detail::parse_number(fields[8], line_no);
        std::size_t body = table.bodies.size();
        for (std::size_t i = 0; i < table.bodies.size(); ++i) {
            if (table.bodies[i].name == name) {
                body = i;
                break;
            }
        }
        if (body == table.bodies.size()) {
            table.bodies.push_back(EphemerisBody{name, mass});
            table.series.emplace_back();
        } else if (table.bodies[body].mass_kg != mass) {
            throw ParseError("body '" + name + "' mass changed mid-file", line_no);
        }
        EphemerisSample sample;
        sample.t_days = detail::parse_number(fields[1], line_no);
        for (int k = 0; k < 3; ++k) sample.position[k] = detail::parse_number(fields[2 + k], line_no);
        for (int k = 0; k < 3; ++k) sample.velocity[k] = detail::parse_number(fields[5 + k], line_no);
        auto& series = table.series[body];
        if (!series.empty()) {
            if (sample.t_days <= series.back().t_days) {
                throw ParseError("non-monotone timestamp for body '" + name + "'", line_no);
            }
            const double spacing = sample.t_days - series.back().t_days;
            if (std::abs(spacing - 1.0) > 1e-9) {
                throw ParseError("sampling must be one day, got " + std::to_string(spacing) +
                                     " days for body '" + name + "'",
                                 line_no);
            }
        }
        series.push_back(sample);
    }
    if (!header_seen) throw ParseError("missing header row");
    if (table.bodies.empty()) throw ParseError("no data rows");
    for (std::size_t i = 1; i < table.series.size(); ++i) {
        if (table.series[i].size() != table.series[0].size()) {
            throw ParseError("bodies have ragged timestamp sets ('" + table.bodies[i].name + "')");
        }
        for (std::size_t s = 0; s < table.series[i].size(); ++s) {
            if (table.series[i][s].t_days != table.series[0][s].t_days) {
                throw ParseError("bodies disagree on timestamps ('" + table.bodies[i].name + "')");
            }
        }
    }
    return table;
}

// Canonical form: optional epoch comment, header, then rows grouped by body
// in table order. parse -> serialize on a canonical file is byte-identical.
inline std::string serialize_ephemeris(const EphemerisTable& table) {
    std::string out;
    if (table.epoch_jd) out += "# epoch=JD" + fmt_double(*table.epoch_jd) + "\n";
    out += kEphemerisHeader;
    out += "\n";
    for (std::size_t b = 0; b < table.bodies.size(); ++b) {
        for (const EphemerisSample& s : table.series[b]) {
            out += table.bodies[b].name;
            out += "," + fmt_double(s.t_days);
            for (double v : s.position) out += "," + fmt_double(v);
            for (double v : s.velocity) out += "," + fmt_double(v);
            out += "," + fmt_double(table.bodies[b].mass_kg);
            out += "\n";
        }
    }
    return out;
}

struct EphemerisExperiment {
    Path reference;                        // 2-D projection, SI units, dt = 86400 s
    InitialState initial;
    System system;
    std::vector<std::size_t> pinned_cols;  // the Sun's coordinate columns
    std::vector<std::string> body_names;
};

// Builds the reference path and system for a day window [start_day, end_day]
// (inclusive). The z components are dropped; the Sun's columns are reported
// as permanently pinned so it is never perturbed or optimized.
inline EphemerisExperiment to_experiment(const EphemerisTable& table, double start_day,
                                         double end_day) {
    const auto& times = table.series.at(0);
    if (end_day < start_day || start_day < times.front().t_days - 1e-9 ||
        end_day > times.back().t_days + 1e-9) {
        throw ConfigError("ephemeris window [" + std::to_string(start_day) + ", " +
                          std::to_string(end_day) + "] is outside the table range");
    }
    std::size_t i0 = 0;
    while (i0 < times.size() && times[i0].t_days < start_day - 1e-9) ++i0;
    std::size_t i1 = times.size() - 1;
    while (i1 > i0 && times[i1].t_days > end_day + 1e-9) --i1;
    const std::size_t n = i1 - i0 + 1;
    if (n < 3) throw ConfigError("ephemeris window spans fewer than 3 days");

    const std::size_t n_bodies = table.bodies.size();
    std::vector<double> masses(n_bodies);
    std::vector<std::string> names(n_bodies);
    for (std::size_t b = 0; b < n_bodies; ++b) {
        masses[b] = table.bodies[b].mass_kg;
        names[b] = table.bodies[b].name;
    }

    Path reference{Mat(n, 2 * n_bodies), 86400.0, times[i0].t_days * 86400.0};
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t b = 0; b < n_bodies; ++b) {
            reference.coords(s, 2 * b) = table.series[b][i0 + s].position[0];
            reference.coords(s, 2 * b + 1) = table.series[b][i0 + s].position[1];
        }
    }
    InitialState initial;
    initial.x0.resize(2 * n_bodies);
    initial.v0.resize(2 * n_bodies);
    for (std::size_t b = 0; b < n_bodies; ++b) {
        initial.x0[2 * b] = table.series[b][i0].position[0];
        initial.x0[2 * b + 1] = table.series[b][i0].position[1];
        initial.v0[2 * b] = table.series[b][i0].velocity[0];
        initial.v0[2 * b + 1] = table.series[b][i0].velocity[1];
    }

    const std::size_t sun = table.body_index("sun");
    return EphemerisExperiment{std::move(reference), std::move(initial), make_ephemeris(masses),
                               {2 * sun, 2 * sun + 1}, std::move(names)};
}

}  // namespace leastaction

#pragma once

#include <iosfwd>
#include <string>

#include "collspin/experiments.hpp"
#include "collspin/sector_oracle.hpp"
#include "collspin/timeseries.hpp"

namespace collspin {

// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double v);

// Scenario files: '#' comments, [section] headers, key = value lines.
// Unknown keys and sections are rejected with the offending name.
Scenario parse_scenario(std::istream& in);
Scenario parse_scenario_file(const std::string& path);

// Canonical form; parse(serialize(parse(f))) == parse(f).
std::string serialize_scenario(const Scenario& sc);

// Applies a "key=value" override using the flat key names of the file
// schema (n1, config, temperature_mk, ...).
void apply_override(Scenario& sc, const std::string& key_value);

// CSV with a metadata comment header; absent observables (closure trace,
// jtot2) serialize as empty fields.
void write_timeseries_csv(std::ostream& out, const TimeSeries& series);
TimeSeries read_timeseries_csv(std::istream& in);

// Sector table and composed steady values, human-readable or CSV.
void write_oracle_report(std::ostream& out, SpinDomain d1, SpinDomain d2,
                         const InitialState& init, const ReservoirSpec& res,
                         bool csv);

} // namespace collspin

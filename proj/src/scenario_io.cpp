#include "collspin/scenario_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace collspin {

std::string to_string(InitialConfig c)
{
    switch (c) {
    case InitialConfig::parallel: return "parallel";
    case InitialConfig::antiparallel: return "antiparallel";
    case InitialConfig::custom: return "custom";
    }
    return "?";
}

std::string to_string(Method m)
{
    switch (m) {
    case Method::exact: return "exact";
    case Method::closure: return "closure";
    case Method::both: return "both";
    }
    return "?";
}

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ScenarioError(key + ": not a number: '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ScenarioError(key + ": not an integer: '" + v + "'");
    }
}

// Setter table shared by the file parser and --override.
void apply_key(Scenario& sc, const std::string& section, const std::string& key,
               const std::string& value, bool& saw_m1, bool& saw_m2)
{
    const std::string where = section.empty() ? key : section + "." + key;
    if (section.empty() && key == "schema_version") {
        sc.schema_version = parse_int(where, value);
        if (sc.schema_version != 1) {
            throw ScenarioError("schema_version: unsupported version " + value);
        }
        return;
    }
    if (section == "domains") {
        if (key == "n1") { sc.n1 = parse_int(where, value); return; }
        if (key == "n2") { sc.n2 = parse_int(where, value); return; }
    } else if (section == "initial") {
        if (key == "config") {
            if (value == "parallel") sc.init.kind = InitialConfig::parallel;
            else if (value == "antiparallel") sc.init.kind = InitialConfig::antiparallel;
            else if (value == "custom") sc.init.kind = InitialConfig::custom;
            else throw ScenarioError("initial.config: unknown value '" + value + "'");
            return;
        }
        if (key == "m1") {
            sc.init.m1 = HalfInt::from_double(parse_number(where, value));
            saw_m1 = true;
            return;
        }
        if (key == "m2") {
            sc.init.m2 = HalfInt::from_double(parse_number(where, value));
            saw_m2 = true;
            return;
        }
    } else if (section == "reservoir") {
        if (key == "temperature_mk") { sc.temperature_mk = parse_number(where, value); return; }
        if (key == "gamma_hz") { sc.gamma_hz = parse_number(where, value); return; }
        if (key == "spin_frequency_hz") { sc.spin_frequency_hz = parse_number(where, value); return; }
    } else if (section == "integration") {
        if (key == "method") {
            if (value == "exact") sc.method = Method::exact;
            else if (value == "closure") sc.method = Method::closure;
            else if (value == "both") sc.method = Method::both;
            else throw ScenarioError("integration.method: unknown value '" + value + "'");
            return;
        }
        if (key == "t_max_s") { sc.t_max_s = parse_number(where, value); return; }
        if (key == "sample_count") { sc.sample_count = parse_int(where, value); return; }
        if (key == "rel_tol") { sc.tol.rel = parse_number(where, value); return; }
        if (key == "abs_tol") { sc.tol.abs = parse_number(where, value); return; }
    } else if (section == "sweep") {
        if (!sc.sweep) sc.sweep = SweepRange{};
        if (key == "n_start") { sc.sweep->n_start = parse_int(where, value); return; }
        if (key == "n_stop") { sc.sweep->n_stop = parse_int(where, value); return; }
        if (key == "n_step") { sc.sweep->n_step = parse_int(where, value); return; }
    }
    throw ScenarioError(where + ": unknown key");
}

const std::map<std::string, std::string>& flat_key_sections()
{
    static const std::map<std::string, std::string> table = {
        {"schema_version", ""},
        {"n1", "domains"},         {"n2", "domains"},
        {"config", "initial"},     {"m1", "initial"},      {"m2", "initial"},
        {"temperature_mk", "reservoir"}, {"gamma_hz", "reservoir"},
        {"spin_frequency_hz", "reservoir"},
        {"method", "integration"}, {"t_max_s", "integration"},
        {"sample_count", "integration"}, {"rel_tol", "integration"},
        {"abs_tol", "integration"},
        {"n_start", "sweep"}, {"n_stop", "sweep"}, {"n_step", "sweep"},
    };
    return table;
}

} // namespace

Scenario parse_scenario(std::istream& in)
{
    Scenario sc;
    sc.t_max_s = 0.0;
    bool saw_m1 = false, saw_m2 = false;
    bool saw_n1 = false, saw_n2 = false, saw_config = false, saw_tmax = false;

    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ScenarioError("line " + std::to_string(lineno) +
                                    ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ScenarioError("line " + std::to_string(lineno) +
                                ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        apply_key(sc, section, key, value, saw_m1, saw_m2);
        if (section == "domains" && key == "n1") saw_n1 = true;
        if (section == "domains" && key == "n2") saw_n2 = true;
        if (section == "initial" && key == "config") saw_config = true;
        if (section == "integration" && key == "t_max_s") saw_tmax = true;
    }

    if (!saw_n1) throw ScenarioError("domains.n1: missing required key");
    if (!saw_n2) throw ScenarioError("domains.n2: missing required key");
    if (!saw_config) throw ScenarioError("initial.config: missing required key");
    if (!saw_tmax) throw ScenarioError("integration.t_max_s: missing required key");
    if (sc.init.kind == InitialConfig::custom && (!saw_m1 || !saw_m2)) {
        throw ScenarioError("initial.m1: custom config requires m1 and m2");
    }
    return sc;
}

Scenario parse_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    return parse_scenario(in);
}

std::string serialize_scenario(const Scenario& sc)
{
    std::ostringstream out;
    out << "schema_version = " << sc.schema_version << "\n\n";
    out << "[domains]\n";
    out << "n1 = " << sc.n1 << "\n";
    out << "n2 = " << sc.n2 << "\n\n";
    out << "[initial]\n";
    out << "config = " << to_string(sc.init.kind) << "\n";
    if (sc.init.kind == InitialConfig::custom) {
        out << "m1 = " << format_double(sc.init.m1.value()) << "\n";
        out << "m2 = " << format_double(sc.init.m2.value()) << "\n";
    }
    out << "\n[reservoir]\n";
    out << "temperature_mk = " << format_double(sc.temperature_mk) << "\n";
    out << "gamma_hz = " << format_double(sc.gamma_hz) << "\n";
    out << "spin_frequency_hz = " << format_double(sc.spin_frequency_hz) << "\n";
    out << "\n[integration]\n";
    out << "method = " << to_string(sc.method) << "\n";
    out << "t_max_s = " << format_double(sc.t_max_s) << "\n";
    out << "sample_count = " << sc.sample_count << "\n";
    out << "rel_tol = " << format_double(sc.tol.rel) << "\n";
    out << "abs_tol = " << format_double(sc.tol.abs) << "\n";
    if (sc.sweep) {
        out << "\n[sweep]\n";
        out << "n_start = " << sc.sweep->n_start << "\n";
        out << "n_stop = " << sc.sweep->n_stop << "\n";
        out << "n_step = " << sc.sweep->n_step << "\n";
    }
    return out.str();
}

void apply_override(Scenario& sc, const std::string& key_value)
{
    const auto eq = key_value.find('=');
    if (eq == std::string::npos) {
        throw ScenarioError("override: expected key=value, got '" + key_value + "'");
    }
    const std::string key = trim(key_value.substr(0, eq));
    const std::string value = trim(key_value.substr(eq + 1));
    const auto& table = flat_key_sections();
    const auto it = table.find(key);
    if (it == table.end()) throw ScenarioError(key + ": unknown key");
    bool saw_m1 = false, saw_m2 = false;
    apply_key(sc, it->second, key, value, saw_m1, saw_m2);
}

void write_timeseries_csv(std::ostream& out, const TimeSeries& series)
{
    const Scenario& sc = series.scenario;
    out << "# schema_version=" << sc.schema_version << "\n";
    out << "# method=" << series.method << "\n";
    out << "# n1=" << sc.n1 << "\n";
    out << "# n2=" << sc.n2 << "\n";
    out << "# config=" << to_string(sc.init.kind) << "\n";
    if (sc.init.kind == InitialConfig::custom) {
        out << "# m1=" << format_double(sc.init.m1.value()) << "\n";
        out << "# m2=" << format_double(sc.init.m2.value()) << "\n";
    }
    out << "# temperature_mk=" << format_double(sc.temperature_mk) << "\n";
    out << "# gamma_hz=" << format_double(sc.gamma_hz) << "\n";
    out << "# spin_frequency_hz=" << format_double(sc.spin_frequency_hz) << "\n";
    out << "# nbar=" << format_double(sc.reservoir().nbar()) << "\n";
    out << "# rotating_frame=true\n";
    out << "# converged=" << (series.converged ? "true" : "false") << "\n";
    if (series.converged) {
        out << "# t_converged_s=" << format_double(series.t_converged_s) << "\n";
    }
    out << "t_s,jz1,jz2,jz_sum,a12,jz1jz2,trace,jtot2,method\n";
    const bool has_trace = !series.trace.empty();
    const bool has_jtot2 = !series.jtot2.empty();
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_double(series.t_s[i]) << ',' << format_double(series.jz1[i])
            << ',' << format_double(series.jz2[i]) << ','
            << format_double(series.jz_sum[i]) << ',' << format_double(series.a12[i])
            << ',' << format_double(series.jz1jz2[i]) << ',';
        if (has_trace) out << format_double(series.trace[i]);
        out << ',';
        if (has_jtot2) out << format_double(series.jtot2[i]);
        out << ',' << series.method << "\n";
    }
}

TimeSeries read_timeseries_csv(std::istream& in)
{
    TimeSeries series;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                const std::string key = trim(line.substr(1, eq - 1));
                const std::string value = trim(line.substr(eq + 1));
                if (key == "converged") series.converged = (value == "true");
                if (key == "t_converged_s") series.t_converged_s = std::stod(value);
            }
            continue;
        }
        if (!header_seen) {
            if (line != "t_s,jz1,jz2,jz_sum,a12,jz1jz2,trace,jtot2,method") {
                throw std::runtime_error("unexpected CSV header: " + line);
            }
            header_seen = true;
            continue;
        }
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() < 8) throw std::runtime_error("short CSV row: " + line);
        series.t_s.push_back(std::stod(fields[0]));
        series.jz1.push_back(std::stod(fields[1]));
        series.jz2.push_back(std::stod(fields[2]));
        series.jz_sum.push_back(std::stod(fields[3]));
        series.a12.push_back(std::stod(fields[4]));
        series.jz1jz2.push_back(std::stod(fields[5]));
        if (!fields[6].empty()) series.trace.push_back(std::stod(fields[6]));
        if (fields.size() > 7 && !fields[7].empty()) {
            series.jtot2.push_back(std::stod(fields[7]));
        }
        if (fields.size() > 8) series.method = fields[8];
    }
    if (!header_seen) throw std::runtime_error("CSV header row missing");
    return series;
}

void write_oracle_report(std::ostream& out, SpinDomain d1, SpinDomain d2,
                         const InitialState& init, const ReservoirSpec& res,
                         bool csv)
{
    const SectorDecomposition dec = decompose(d1, d2, init);
    const SteadyStateValues ss = oracle_steady_state(d1, d2, init, res);
    const double x = res.beta_hbar_omega();

    if (csv) {
        out << "J,p,jz1,jz2\n";
    } else {
        out << "sector decomposition (j1=" << d1.j().str() << ", j2=" << d2.j().str()
            << ", T=" << format_double(res.temperature_k * 1e3) << " mK)\n";
        out << "   J          p_J        jz1_ss       jz2_ss\n";
    }
    for (const auto& sw : dec.sectors) {
        double jz1 = 0.0, jz2 = 0.0;
        if (sw.J.twice() > 0) {
            const double mean_m =
                std::isinf(x) ? -sw.J.value() : [&] {
                    double z = 0.0, zm = 0.0;
                    for (int tm = -sw.J.twice(); tm <= sw.J.twice(); tm += 2) {
                        const double M = 0.5 * tm;
                        const double w = std::exp(-x * (M + sw.J.value()));
                        z += w;
                        zm += w * M;
                    }
                    return zm / z;
                }();
            jz1 = sector_jz(sw.J, sw.J, d1.j(), d2.j(), DomainSelector::domain1) /
                  sw.J.value() * mean_m;
            jz2 = sector_jz(sw.J, sw.J, d1.j(), d2.j(), DomainSelector::domain2) /
                  sw.J.value() * mean_m;
        }
        if (csv) {
            out << format_double(sw.J.value()) << ',' << format_double(sw.p) << ','
                << format_double(jz1) << ',' << format_double(jz2) << "\n";
        } else {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%6s  %12.8f  %12.8f %12.8f\n",
                          sw.J.str().c_str(), sw.p, jz1, jz2);
            out << buf;
        }
    }
    if (csv) {
        out << "steady,," << format_double(ss.jz1) << ',' << format_double(ss.jz2)
            << "\n";
    } else {
        out << "steady state: jz1 = " << format_double(ss.jz1)
            << ", jz2 = " << format_double(ss.jz2) << "\n";
    }
}

} // namespace collspin

#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dyson_ldp/dbm.hpp"
#include "dyson_ldp/grid.hpp"
#include "dyson_ldp/sampler.hpp"
#include "dyson_ldp/variational.hpp"

namespace dyson_ldp {

using json = nlohmann::json;

/// Shortest text that round-trips a double (17 significant digits).
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Finite values as numbers, infinities and NaN as null.
inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

namespace detail {

inline void write_comment(std::ostream& os, const json& config) {
    if (!config.is_null()) os << "# config: " << config.dump() << '\n';
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::ofstream open_out(const std::string& file) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file + " for writing");
    return os;
}

}  // namespace detail

/// Writes `t,<name>[,d<name>]`; a `# config:` line is prepended when `config` is not null.
inline void write_path_csv(std::ostream& os, const ScalarPath& p, const std::string& name = "phi",
                           const json& config = nullptr) {
    detail::write_comment(os, config);
    os << "t," << name << '\n';
    for (std::size_t i = 0; i < p.size(); ++i) os << format_double(p.grid[i]) << ',' << format_double(p[i]) << '\n';
}

inline void write_path_csv(const std::string& file, const ScalarPath& p, const std::string& name = "phi",
                           const json& config = nullptr) {
    auto os = detail::open_out(file);
    write_path_csv(os, p, name, config);
}

/// Reads a two-column `t,value` CSV (header line required, `#` lines skipped).
inline ScalarPath read_path_csv(std::istream& is) {
    std::string line;
    bool header = false;
    std::vector<double> t, v;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        const auto cells = detail::split_csv(line);
        if (cells.size() < 2) throw InvalidParameter("path CSV rows need two columns: " + line);
        try {
            t.push_back(std::stod(cells[0]));
            v.push_back(std::stod(cells[1]));
        } catch (const std::exception&) {
            throw InvalidParameter("malformed number in path CSV: " + line);
        }
    }
    if (t.size() < 2) throw InvalidParameter("path CSV needs at least two rows");
    return ScalarPath(TimeGrid(std::move(t)), std::move(v));
}

inline ScalarPath read_path_csv(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw InvalidParameter("cannot open " + file);
    return read_path_csv(is);
}

/// One replica as `t,lambda_1,...,lambda_N` (descending order).
inline void write_ensemble_csv(std::ostream& os, const EnsemblePath& e, const json& config = nullptr) {
    detail::write_comment(os, config);
    os << 't';
    for (std::size_t i = 1; i <= e.n(); ++i) os << ",lambda_" << i;
    os << '\n';
    for (std::size_t k = 0; k < e.grid().size(); ++k) {
        os << format_double(e.grid()[k]);
        for (double v : e.row(k)) os << ',' << format_double(v);
        os << '\n';
    }
}

/// Several replicas in long format: `replica,t,lambda_1,...`.
inline void write_ensembles_long_csv(std::ostream& os, const std::vector<EnsemblePath>& es,
                                     const json& config = nullptr) {
    detail::write_comment(os, config);
    if (es.empty()) return;
    os << "replica,t";
    for (std::size_t i = 1; i <= es.front().n(); ++i) os << ",lambda_" << i;
    os << '\n';
    for (const auto& e : es)
        for (std::size_t k = 0; k < e.grid().size(); ++k) {
            os << e.replica_id() << ',' << format_double(e.grid()[k]);
            for (double v : e.row(k)) os << ',' << format_double(v);
            os << '\n';
        }
}

inline json to_json(const EstimateReport& r) {
    return json{{"p_hat", json_number(r.p_hat)},
                {"stderr", json_number(r.stderr_)},
                {"n_replicas", r.n_replicas},
                {"N", r.N},
                {"minus_log_rate", json_number(r.minus_log_rate)},
                {"target_rate", json_number(r.target_rate)},
                {"hit_fraction", r.hit_fraction},
                {"hits", r.hits},
                {"flags", r.flags}};
}

inline json to_json(const TightnessReport& r) {
    return json{{"eta", r.eta},           {"delta", r.delta},         {"p", r.p},
                {"windows", r.windows},   {"exceedances", r.exceedances}, {"frequency", r.frequency},
                {"bound", r.bound},       {"pass", r.pass}};
}

inline json to_json(const VarResult& r) {
    json trace = json::array();
    for (const auto& row : r.trace) trace.push_back({{"iter", row.iter}, {"objective", row.objective}, {"step", row.step}});
    return json{{"objective", json_number(r.objective)},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"trace", trace}};
}

}  // namespace dyson_ldp

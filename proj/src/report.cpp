#include "plap/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace plap {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double EstimateReport::rhs_total() const {
    double s = 0.0;
    for (const auto& [name, v] : rhs_terms) s += v;
    return s;
}

std::string estimate_kind_name(EstimateReport::Kind k) {
    switch (k) {
        case EstimateReport::Kind::energy_uniform: return "energy_uniform";
        case EstimateReport::Kind::sobolev_uniform: return "sobolev_uniform";
        case EstimateReport::Kind::sobolev_local: return "sobolev_local";
        case EstimateReport::Kind::negative_norm: return "negative_norm";
    }
    return "";
}

nlohmann::json EstimateReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["which"] = estimate_kind_name(which);
    j["lhs"] = lhs;
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& [name, v] : rhs_terms) terms[name] = v;
    j["rhs_terms"] = terms;
    j["rhs_total"] = rhs_total();
    j["implied_constant"] = implied_constant;
    j["degenerate"] = degenerate;
    j["converged"] = converged;
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, v] : parameters) params[name] = v;
    j["parameters"] = params;
    return j;
}

EstimateReport make_estimate_report(EstimateReport::Kind which, double lhs,
                                    std::vector<std::pair<std::string, double>> rhs_terms,
                                    std::vector<std::pair<std::string, double>> parameters) {
    EstimateReport r;
    r.which = which;
    r.lhs = lhs;
    r.rhs_terms = std::move(rhs_terms);
    r.parameters = std::move(parameters);
    const double total = r.rhs_total();
    if (total > 0.0) {
        r.implied_constant = lhs / total;
    } else if (lhs == 0.0) {
        r.implied_constant = 0.0;
        r.degenerate = true;
    } else {
        r.implied_constant = std::numeric_limits<double>::infinity();
        r.degenerate = true;
    }
    return r;
}

OrderResult observed_order(const RefinementStudy& study, std::optional<double> reference) {
    const auto& lv = study.levels;
    if (lv.size() < 3) throw std::invalid_argument("observed_order needs at least 3 levels");
    for (std::size_t i = 1; i < lv.size(); ++i)
        if (!(lv[i].first < lv[i - 1].first))
            throw std::invalid_argument("levels must be sorted by decreasing spacing");

    OrderResult out;
    std::vector<double> seq;  // error (with reference) or increment magnitudes
    if (reference) {
        for (const auto& [h, v] : lv) seq.push_back(std::abs(v - *reference));
    } else {
        for (std::size_t i = 0; i + 1 < lv.size(); ++i)
            seq.push_back(std::abs(lv[i + 1].second - lv[i].second));
    }
    double acc = 0.0;
    int n = 0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const double num = seq[i], den = seq[i + 1];
        const double hr = lv[i].first / lv[i + 1].first;
        if (den <= 0.0 || num <= 0.0) {
            out.warning = true;
            continue;
        }
        if (num <= den) out.warning = true;  // non-decreasing errors
        acc += std::log(num / den) / std::log(hr);
        ++n;
    }
    out.order = n > 0 ? acc / n : 0.0;
    if (n == 0) out.warning = true;
    return out;
}

FitResult linear_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("fit needs at least 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(points.size());
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    FitResult f;
    if (denom == 0.0) throw std::invalid_argument("degenerate abscissae in fit");
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / n;
    for (const auto& [x, y] : points) {
        const double r = y - (f.slope * x + f.intercept);
        ss_res += r * r;
        ss_tot += (y - ymean) * (y - ymean);
    }
    f.r_squared = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return f;
}

FitResult loglog_fit(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::invalid_argument("loglog_fit needs at least 3 points");
    std::vector<std::pair<double, double>> lp;
    lp.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!(x > 0.0) || !(y > 0.0))
            throw std::invalid_argument("loglog_fit requires positive coordinates");
        lp.emplace_back(std::log(x), std::log(y));
    }
    return linear_fit(lp);
}

void CsvTable::add_row(const std::vector<double>& vals) {
    std::vector<std::string> row;
    row.reserve(vals.size());
    for (double v : vals) row.push_back(format_double(v));
    rows.push_back(std::move(row));
}

void CsvTable::add_row(std::vector<std::string> vals) { rows.push_back(std::move(vals)); }

std::string CsvTable::body() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_field_csv(const ScalarField& field, const std::string& path) {
    CsvTable t;
    for (int d = 0; d < field.grid.dim; ++d) t.header.push_back("x" + std::to_string(d + 1));
    t.header.push_back("value");
    const std::int64_t n = field.size();
    for (std::int64_t lin = 0; lin < n; ++lin) {
        Point x = field.point_of(lin);
        std::vector<double> row;
        for (int d = 0; d < field.grid.dim; ++d) row.push_back(x[d]);
        row.push_back(field.values[static_cast<std::size_t>(lin)]);
        t.add_row(row);
    }
    write_text_file(path, t.body());
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace plap

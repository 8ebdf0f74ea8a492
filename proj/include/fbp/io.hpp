#ifndef FBP_IO_HPP
#define FBP_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbp/experiment.hpp"

namespace fbp {

inline Method method_from_name(const std::string& s) {
    if (s == "qbvm") return Method::qbvm;
    if (s == "mqbvm") return Method::mqbvm;
    if (s == "ftm") return Method::ftm;
    throw std::invalid_argument("unknown method: " + s);
}

inline ChoiceRule rule_from_name(const std::string& s) {
    if (s == "apriori") return ChoiceRule::apriori;
    if (s == "aposteriori") return ChoiceRule::aposteriori;
    throw std::invalid_argument("unknown rule: " + s);
}

inline std::string plain_method_name(Method m) {
    switch (m) {
        case Method::qbvm: return "qbvm";
        case Method::mqbvm: return "mqbvm";
        case Method::ftm: return "ftm";
    }
    return "?";
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    ExperimentSpec spec;
    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        spec.dim = d.value("dim", spec.dim);
        if (d.contains("side_lengths"))
            spec.side_lengths = d.at("side_lengths").get<std::vector<double>>();
        spec.n_modes = d.value("n_modes", spec.n_modes);
    }
    spec.alpha = j.value("alpha", spec.alpha);
    spec.tau = j.value("tau", spec.tau);
    spec.p = j.value("p", spec.p);
    spec.rho = j.value("rho", spec.rho);
    if (j.contains("methods")) {
        spec.methods.clear();
        for (const auto& m : j.at("methods")) {
            MethodSpec ms;
            ms.method = method_from_name(m.at("method").get<std::string>());
            ms.q = m.value("q", ms.method == Method::mqbvm ? 1 : 0);
            spec.methods.push_back(ms);
        }
    }
    if (j.contains("rules")) {
        spec.rules.clear();
        for (const auto& r : j.at("rules"))
            spec.rules.push_back(rule_from_name(r.get<std::string>()));
    }
    spec.delta_grid = j.contains("delta_grid")
                          ? j.at("delta_grid").get<std::vector<double>>()
                          : ExperimentSpec::default_delta_grid();
    spec.trials = j.value("trials", spec.trials);
    spec.noise_split = j.value("noise_split", spec.noise_split);
    if (j.contains("discrepancy")) {
        const auto& d = j.at("discrepancy");
        spec.discrepancy.xi = d.value("xi", spec.discrepancy.xi);
        spec.discrepancy.mu = d.value("mu", spec.discrepancy.mu);
        spec.discrepancy.nu = d.value("nu", spec.discrepancy.nu);
        spec.discrepancy.root_tol = d.value("root_tol", spec.discrepancy.root_tol);
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        spec.records_csv = o.value("records_csv", spec.records_csv);
        spec.fits_csv = o.value("fits_csv", spec.fits_csv);
        spec.svg_path = o.value("svg", spec.svg_path);
    }
    return spec;
}

inline nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec) {
    nlohmann::json j;
    j["domain"] = {{"dim", spec.dim},
                   {"side_lengths", spec.side_lengths},
                   {"n_modes", spec.n_modes}};
    j["alpha"] = spec.alpha;
    j["tau"] = spec.tau;
    j["p"] = spec.p;
    j["rho"] = spec.rho;
    j["methods"] = nlohmann::json::array();
    for (const auto& m : spec.methods)
        j["methods"].push_back({{"method", plain_method_name(m.method)}, {"q", m.q}});
    j["rules"] = nlohmann::json::array();
    for (auto r : spec.rules) j["rules"].push_back(rule_name(r));
    j["delta_grid"] = spec.delta_grid;
    j["trials"] = spec.trials;
    j["noise_split"] = spec.noise_split;
    j["discrepancy"] = {{"xi", spec.discrepancy.xi},
                        {"mu", spec.discrepancy.mu},
                        {"nu", spec.discrepancy.nu},
                        {"root_tol", spec.discrepancy.root_tol}};
    j["outputs"] = {{"records_csv", spec.records_csv},
                    {"fits_csv", spec.fits_csv},
                    {"svg", spec.svg_path}};
    return j;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    nlohmann::json j;
    in >> j;
    return experiment_spec_from_json(j);
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
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

}  // namespace detail

inline const char* records_csv_header() {
    return "method,rule,q,p,delta,seed,param,error,residual,wall_ms";
}

inline std::string records_to_csv(const std::vector<RateRecord>& records) {
    std::ostringstream os;
    os << records_csv_header() << "\n";
    for (const auto& r : records) {
        os << plain_method_name(r.method) << ',' << rule_name(r.rule) << ',' << r.q << ','
           << detail::fmt_double(r.p) << ',' << detail::fmt_double(r.delta) << ',' << r.seed << ','
           << detail::fmt_double(r.param) << ',' << detail::fmt_double(r.error) << ','
           << detail::fmt_double(r.residual) << ',' << detail::fmt_double(r.wall_ms) << "\n";
    }
    return os.str();
}

inline std::vector<RateRecord> records_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || detail::split_csv_line(line).size() != 10)
        throw std::runtime_error("records CSV: bad header");
    std::vector<RateRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 10) throw std::runtime_error("records CSV: bad row: " + line);
        RateRecord r;
        r.method = method_from_name(f[0]);
        r.rule = rule_from_name(f[1]);
        r.q = std::atoi(f[2].c_str());
        r.p = std::strtod(f[3].c_str(), nullptr);
        r.delta = std::strtod(f[4].c_str(), nullptr);
        r.seed = std::strtoull(f[5].c_str(), nullptr, 10);
        r.param = std::strtod(f[6].c_str(), nullptr);
        r.error = std::strtod(f[7].c_str(), nullptr);
        r.residual = std::strtod(f[8].c_str(), nullptr);
        r.wall_ms = std::strtod(f[9].c_str(), nullptr);
        r.failed = !(r.error == r.error);  // NaN error marks a failed cell
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string fits_to_csv(const std::vector<SlopeFit>& fits) {
    std::ostringstream os;
    os << "method,rule,q,p,slope,intercept,r2,theoretical,n_points\n";
    for (const auto& f : fits) {
        os << plain_method_name(f.method) << ',' << rule_name(f.rule) << ',' << f.q << ','
           << detail::fmt_double(f.p) << ',' << detail::fmt_double(f.slope) << ','
           << detail::fmt_double(f.intercept) << ',' << detail::fmt_double(f.r2) << ','
           << detail::fmt_double(f.theoretical) << ',' << f.n_points << "\n";
    }
    return os.str();
}

// Log-log error vs delta: one polyline of per-delta median errors for every
// (method, rule, q, p) key, plus a dashed guide line at the theoretical slope
// anchored at each key's smallest-delta point.
inline std::string render_rates_svg(const std::vector<RateRecord>& records,
                                    const std::vector<SlopeFit>& fits) {
    struct Key {
        Method m;
        ChoiceRule r;
        int q;
        double p;
        bool operator<(const Key& o) const {
            if (m != o.m) return m < o.m;
            if (r != o.r) return r < o.r;
            if (q != o.q) return q < o.q;
            return p < o.p;
        }
    };
    std::map<Key, std::map<double, std::vector<double>>> cells;
    for (const auto& r : records) {
        if (r.failed || !(r.error > 0.0)) continue;
        cells[{r.method, r.rule, r.q, r.p}][r.delta].push_back(r.error);
    }
    std::map<Key, std::vector<std::pair<double, double>>> series;  // (log10 d, log10 med)
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto& [key, by_delta] : cells) {
        for (auto& [delta, errs] : by_delta) {
            std::sort(errs.begin(), errs.end());
            double med = errs.size() % 2 ? errs[errs.size() / 2]
                                         : 0.5 * (errs[errs.size() / 2 - 1] + errs[errs.size() / 2]);
            double x = std::log10(delta), y = std::log10(med);
            series[key].emplace_back(x, y);
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    const double W = 720, H = 520, ml = 70, mr = 20, mt = 20, mb = 50;
    if (series.empty()) {
        xmin = -7;
        xmax = -2;
        ymin = -5;
        ymax = 0;
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">log10 delta</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 " << H / 2
       << ")\">log10 error</text>\n";
    int ci = 0, legend_y = 30;
    for (auto& [key, pts] : series) {
        auto sorted = pts;
        std::sort(sorted.begin(), sorted.end());
        const char* color = palette[ci++ % 8];
        std::string label = method_name(key.m, key.q) + " " + rule_name(key.r) +
                            " p=" + std::to_string(key.p).substr(0, 4);
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : sorted) os << px(x) << ',' << py(y) << ' ';
        os << "\"/>\n";
        for (auto [x, y] : sorted)
            os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\""
               << color << "\"/>\n";
        // theoretical guide through the smallest-delta point
        for (const auto& f : fits) {
            if (f.method != key.m || f.rule != key.r || f.q != key.q || f.p != key.p) continue;
            auto [x0, y0] = sorted.front();
            double x1 = sorted.back().first;
            os << "<line x1=\"" << px(x0) << "\" y1=\"" << py(y0) << "\" x2=\"" << px(x1)
               << "\" y2=\"" << py(y0 + f.theoretical * (x1 - x0)) << "\" stroke=\"" << color
               << "\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
        }
        os << "<text x=\"" << ml + 10 << "\" y=\"" << legend_y << "\" font-size=\"12\" fill=\""
           << color << "\">" << label << "</text>\n";
        legend_y += 16;
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void emit_outputs(const std::vector<RateRecord>& records, const std::vector<SlopeFit>& fits,
                         const std::string& records_path, const std::string& fits_path,
                         const std::string& svg_path) {
    write_file(records_path, records_to_csv(records));
    write_file(fits_path, fits_to_csv(fits));
    write_file(svg_path, render_rates_svg(records, fits));
}

}  // namespace fbp

#endif

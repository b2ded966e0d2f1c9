#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "checks.hpp"
#include "common.hpp"
#include "kernels.hpp"
#include "simulate.hpp"
#include "space.hpp"

namespace auxheat {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw config_error("unknown key \"" + it.key() + "\" in " + where);
    }
}

inline ScaleFunction parse_phi(const json& j) {
    if (!j.is_object()) throw config_error("phi must be an object");
    std::string type = j.value("type", "power");
    if (type == "power") {
        reject_unknown_keys(j, {"type", "alpha"}, "phi");
        return ScaleFunction::power(j.value("alpha", 2.0));
    }
    if (type == "table") {
        reject_unknown_keys(j, {"type", "r", "phi", "beta1", "beta2", "c1", "c2"}, "phi");
        return ScaleFunction::tabulated(j.at("r").get<std::vector<double>>(),
                                        j.at("phi").get<std::vector<double>>(),
                                        j.value("beta1", 0.5), j.value("beta2", 4.0),
                                        j.value("c1", 0.5), j.value("c2", 2.0));
    }
    throw config_error("phi type must be \"power\" or \"table\"");
}

// explicit space definition file
inline AtomicSpace parse_space_file(const json& j) {
    reject_unknown_keys(j, {"points", "metric", "mu", "kernel", "phi"}, "space file");
    ScaleFunction phi = parse_phi(j.at("phi"));
    std::vector<double> mu = j.at("mu").get<std::vector<double>>();
    std::size_t n = mu.size();

    const json& pts = j.at("points");
    if (!pts.is_array() || pts.size() != n)
        throw config_error("points and mu must be arrays of equal length");

    std::vector<std::string> labels;
    std::vector<std::vector<double>> coords;
    for (const auto& p : pts) {
        if (p.is_string()) {
            labels.push_back(p.get<std::string>());
        } else if (p.is_number()) {
            coords.push_back({p.get<double>()});
            labels.push_back(p.dump());
        } else if (p.is_array()) {
            coords.push_back(p.get<std::vector<double>>());
            labels.push_back(p.dump());
        } else {
            throw config_error("points must be labels, numbers, or coordinate arrays");
        }
    }

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    const json& metric = j.at("metric");
    if (metric.is_string()) {
        std::string m = metric.get<std::string>();
        if (m != "euclidean" && m != "l1") throw config_error("metric must be euclidean, l1, or a matrix");
        if (coords.size() != n) throw config_error("coordinate metric needs coordinate points");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                double d = 0.0;
                for (std::size_t c = 0; c < coords[i].size(); ++c) {
                    double diff = std::abs(coords[i][c] - coords[k][c]);
                    d += m == "l1" ? diff : diff * diff;
                }
                dist[i][k] = m == "l1" ? d : std::sqrt(d);
            }
    } else if (metric.is_object()) {
        reject_unknown_keys(metric, {"matrix"}, "metric");
        dist = metric.at("matrix").get<std::vector<std::vector<double>>>();
    } else {
        throw config_error("metric must be a string or {\"matrix\": ...}");
    }

    const json& kj = j.at("kernel");
    reject_unknown_keys(kj, {"type", "c", "J"}, "kernel");
    std::string ktype = kj.at("type").get<std::string>();
    KernelSpec kernel;
    if (ktype == "jphi")
        kernel = JPhiKernel{kj.value("c", 1.0)};
    else if (ktype == "matrix")
        kernel = MatrixKernel{kj.at("J").get<std::vector<std::vector<double>>>()};
    else
        throw config_error("kernel type must be \"jphi\" or \"matrix\"");

    return AtomicSpace::explicit_space(std::move(dist), std::move(mu), std::move(kernel), phi,
                                       std::move(labels));
}

struct ExperimentConfig {
    std::string space = "z1"; // z1 | z2-euclid | z2-l1 | file path
    std::string space_file;
    int window = 32;
    double spacing = 1.0;
    double mass = 1.0;
    double kernel_c = 1.0;
    json phi = json{{"type", "power"}, {"alpha", 1.5}};
    int max_depth = kDefaultMaxDepth;
    double tail_tol = 1e-10;
    double kernel_tol = 1e-10;
    std::uint64_t seed = 1;
    std::optional<std::vector<double>> radii;
    std::optional<std::vector<double>> times;
    std::string raw; // canonical dump, for hashing
};

inline ExperimentConfig parse_config(const json& j) {
    reject_unknown_keys(j,
                        {"space", "window", "spacing", "mass", "kernel_c", "phi", "max_depth",
                         "tail_tol", "kernel_tol", "seed", "radii", "times"},
                        "config");
    ExperimentConfig c;
    if (j.contains("space")) {
        const json& s = j.at("space");
        if (s.is_string()) {
            c.space = s.get<std::string>();
            if (c.space != "z1" && c.space != "z2-euclid" && c.space != "z2-l1")
                throw config_error("space must be z1, z2-euclid, z2-l1, or {\"file\": path}");
        } else if (s.is_object()) {
            reject_unknown_keys(s, {"file"}, "space");
            c.space = "file";
            c.space_file = s.at("file").get<std::string>();
        } else {
            throw config_error("space must be a name or {\"file\": path}");
        }
    }
    c.window = j.value("window", c.window);
    if (c.window < 1 || c.window > 4096) throw config_error("window must be in [1, 4096]");
    c.spacing = j.value("spacing", c.spacing);
    c.mass = j.value("mass", c.mass);
    c.kernel_c = j.value("kernel_c", c.kernel_c);
    if (j.contains("phi")) c.phi = j.at("phi");
    parse_phi(c.phi); // validate now
    c.max_depth = j.value("max_depth", c.max_depth);
    if (c.max_depth < 1 || c.max_depth > 62) throw config_error("max_depth must be in [1, 62]");
    c.tail_tol = j.value("tail_tol", c.tail_tol);
    c.kernel_tol = j.value("kernel_tol", c.kernel_tol);
    c.seed = j.value("seed", c.seed);
    if (j.contains("radii")) c.radii = j.at("radii").get<std::vector<double>>();
    if (j.contains("times")) c.times = j.at("times").get<std::vector<double>>();
    c.raw = j.dump();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline AtomicSpace build_space(const ExperimentConfig& c) {
    ScaleFunction phi = parse_phi(c.phi);
    if (c.space == "z1")
        return AtomicSpace::lattice_z1(c.window, phi, c.kernel_c, c.spacing, c.mass, c.tail_tol);
    if (c.space == "z2-euclid")
        return AtomicSpace::lattice_z2(c.window, phi, false, c.kernel_c, c.spacing, c.mass, c.tail_tol);
    if (c.space == "z2-l1")
        return AtomicSpace::lattice_z2(c.window, phi, true, c.kernel_c, c.spacing, c.mass, c.tail_tol);
    std::ifstream in(c.space_file);
    if (!in) throw config_error("cannot open space file: " + c.space_file);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error(std::string("space file is not valid JSON: ") + e.what());
    }
    return parse_space_file(j);
}

inline std::string config_hash(const ExperimentConfig& c) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(hash_name(c.raw)));
    return buf;
}

// fixed shortest-roundtrip formatting so reruns are byte-identical
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string word_prefix(const LazyWord& w, int bits = 16) {
    std::string s;
    for (int i = 1; i <= bits; ++i) s += static_cast<char>('0' + w.bit(i));
    return s;
}

inline void write_trajectory_csv(std::ostream& out, const AtomicSpace& s, const Trajectory& traj) {
    out << "t,fiber,word_prefix,event\n";
    for (const auto& e : traj.events)
        out << fmt(e.t) << "," << s.label(e.x) << ","
            << (e.has_word ? word_prefix(e.word) : std::string()) << ","
            << event_kind_name(e.kind) << "\n";
}

inline json report_to_json(const CheckReport& rep) {
    json j;
    j["condition"] = rep.condition;
    j["constants"] = rep.constants;
    j["grid"] = rep.grid;
    j["pass"] = rep.pass;
    j["worst"] = rep.worst;
    j["notes"] = rep.notes;
    return j;
}

inline std::string report_to_table(const CheckReport& rep) {
    std::ostringstream os;
    os << rep.condition << ": " << (rep.pass ? "pass" : "FAIL") << "\n";
    for (const auto& [k, v] : rep.constants) os << "  " << k << " = " << fmt(v) << "\n";
    if (!rep.worst.empty()) os << "  worst: " << rep.worst << "\n";
    for (const auto& n : rep.notes) os << "  note: " << n << "\n";
    os << "  (" << rep.grid << ")\n";
    return os.str();
}

// kernel table rows (t, x, y, p, q, p/q) plus a JSON metadata sidecar
inline void write_kernel_csv(std::ostream& out, const AtomicSpace& s, const HeatKernel& p,
                             const std::vector<std::pair<int, int>>& pairs) {
    out << "t,x,y,p,q,p_over_q\n";
    for (auto [x, y] : pairs) {
        double pv = p.density(x, y);
        double qv = q_kernel(s, p.t, x, y);
        out << fmt(p.t) << "," << s.label(x) << "," << s.label(y) << "," << fmt(pv) << ","
            << fmt(qv) << "," << fmt(pv / qv) << "\n";
    }
}

inline json kernel_metadata(const HeatKernel& p) {
    json j;
    j["t"] = p.t;
    j["matrix_exp_tolerance"] = p.tol;
    j["max_window_leak"] = p.max_leak();
    return j;
}

} // namespace auxheat

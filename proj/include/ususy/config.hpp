// Flat `section.key = value` run configuration.
#pragma once

#include "models.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ususy {

struct ConfigError : InvalidArgument {
    std::string field;
    ConfigError(std::string f, const std::string& msg) : InvalidArgument(f + ": " + msg), field(std::move(f)) {}
};

struct RunConfig {
    ModelSpec model = UniformField{};
    std::optional<Su2Rotation> rotation;

    double E_lo = -1.0, E_hi = 1.0;
    bool range_set = false;
    int grid_points = 2001;
    int q = 0;
    Branch branch = Branch::Plus;
    std::vector<int> script_N{1, 2, 3, 4, 5, 6, 7, 8};
    int n = 0;
    double zeta_lo = 0.0, zeta_hi = 1.0;
    int zeta_points = 21;
    double tanh_tau = 3.0 / 7.0;
    int eta = 1;

    bool oracle = false;
    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;

    std::map<std::string, std::string> entries;  // as read
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& v) {
    double x = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    auto [p, ec] = std::from_chars(first, last, x);
    if (ec != std::errc{} || p != last) throw ConfigError(key, "not a number: '" + v + "'");
    if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
    return x;
}

// Plain number, or pi/k, k*pi, pi.
inline double parse_angle(const std::string& key, const std::string& v) {
    if (v == "pi") return std::numbers::pi;
    if (v.rfind("pi/", 0) == 0) return std::numbers::pi / parse_number(key, v.substr(3));
    if (v.size() > 3 && v.compare(v.size() - 3, 3, "*pi") == 0)
        return parse_number(key, v.substr(0, v.size() - 3)) * std::numbers::pi;
    return parse_number(key, v);
}

inline int parse_int(const std::string& key, const std::string& v) {
    int x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "not an integer: '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "not a boolean: '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

// "1-8" or "1,2,4"
inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& part : split(v, ',')) {
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            out.push_back(parse_int(key, part));
        } else {
            const int a = parse_int(key, trim(part.substr(0, dash))), b = parse_int(key, trim(part.substr(dash + 1)));
            if (b < a) throw ConfigError(key, "empty range '" + part + "'");
            for (int i = a; i <= b; ++i) out.push_back(i);
        }
    }
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
}

// "i-j:J, ..." with 0-based sites
inline std::vector<Coupling> parse_couplings(const std::string& key, const std::string& v) {
    std::vector<Coupling> out;
    for (const auto& part : split(v, ',')) {
        const auto colon = part.find(':'), dash = part.find('-');
        if (colon == std::string::npos || dash == std::string::npos || dash > colon)
            throw ConfigError(key, "expected i-j:J, got '" + part + "'");
        out.push_back({parse_int(key, trim(part.substr(0, dash))), parse_int(key, trim(part.substr(dash + 1, colon - dash - 1))),
                       parse_number(key, trim(part.substr(colon + 1)))});
    }
    return out;
}

}  // namespace config_detail

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = config_detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        const std::string key = config_detail::trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno), "empty key");
        if (kv.count(key)) throw ConfigError(key, "given twice");
        kv[key] = config_detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline RunConfig config_from_entries(const std::map<std::string, std::string>& kv) {
    using namespace config_detail;
    RunConfig c;
    c.entries = kv;
    auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = kv.find(k);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    auto num = [&](const std::string& k, double def) { auto v = get(k); return v ? parse_number(k, *v) : def; };
    auto integer = [&](const std::string& k, int def) { auto v = get(k); return v ? parse_int(k, *v) : def; };

    static const char* known[] = {"model.kind",      "model.B1",       "model.B2",        "model.B3",
                                  "model.Delta",     "model.alpha",    "model.beta",      "model.gamma",
                                  "model.gamma_abs", "model.gamma_arg", "model.g",        "model.N",
                                  "model.M",         "model.tau",      "model.couplings", "model.alpha_sites",
                                  "model.theta",     "model.phi",      "model.eta",       "scan.E_lo",
                                  "scan.E_hi",       "scan.grid_points", "scan.q",        "scan.branch",
                                  "scan.script_N",   "scan.n",         "scan.zeta_lo",    "scan.zeta_hi",
                                  "scan.zeta_points", "scan.tanh_tau", "oracle",          "seed",
                                  "output.path",     "output.format"};
    for (const auto& [k, v] : kv) {
        bool ok = false;
        for (const char* name : known) ok = ok || k == name;
        if (!ok) throw ConfigError(k, "unknown key");
    }

    cplx gamma{};
    if (get("model.gamma") && (get("model.gamma_abs") || get("model.gamma_arg")))
        throw ConfigError("model.gamma", "give either gamma or gamma_abs/gamma_arg");
    if (auto v = get("model.gamma")) gamma = parse_number("model.gamma", *v);
    if (get("model.gamma_abs") || get("model.gamma_arg")) {
        const double arg = get("model.gamma_arg") ? parse_angle("model.gamma_arg", *get("model.gamma_arg")) : 0.0;
        gamma = std::polar(num("model.gamma_abs", 0.0), arg);
    }

    const std::string kind = get("model.kind").value_or("");
    if (kind.empty()) throw ConfigError("model.kind", "missing");
    const int M = integer("model.M", 30);
    if (kind == "uniform_field") {
        c.model = UniformField{num("model.B1", 0.0), num("model.B2", 0.0), num("model.B3", 0.0)};
    } else if (kind == "jc") {
        c.model = JC{num("model.Delta", 0.0), num("model.alpha", 0.0), M};
    } else if (kind == "genrabi") {
        c.model = GenRabi{num("model.alpha", 0.0), num("model.beta", 0.0), gamma, num("model.Delta", 0.0), M};
    } else if (kind == "rabi") {
        c.model = Rabi{num("model.g", 0.0), num("model.Delta", 0.0), M};
    } else if (kind == "spin_chain") {
        const int N = integer("model.N", 2);
        if (auto v = get("model.couplings")) {
            c.model = SpinChain{N, parse_couplings("model.couplings", *v)};
        } else {
            if (N != 2 && N != 3) throw ConfigError("model.N", "without model.couplings N must be 2 or 3");
            c.model = spin_chain_catalog(N, num("model.tau", 1.0)).spec;
        }
    } else if (kind == "tc") {
        const int N = integer("model.N", 1);
        std::vector<double> al{num("model.alpha", 0.0)};
        if (auto v = get("model.alpha_sites")) {
            al.clear();
            for (const auto& s : split(*v, ',')) al.push_back(parse_number("model.alpha_sites", s));
        }
        c.model = TC{N, num("model.Delta", 0.0), al, M};
    } else if (kind == "gendicke") {
        c.model = GenDicke{integer("model.N", 1), num("model.alpha", 0.0), num("model.beta", 0.0), gamma,
                           num("model.Delta", 0.0), M};
    } else {
        throw ConfigError("model.kind", "unknown kind '" + kind + "'");
    }
    try {
        validate(c.model);
    } catch (const InvalidArgument& e) {
        throw ConfigError("model", e.what());
    }
    if (get("model.theta") || get("model.phi")) {
        Su2Rotation R;
        if (auto v = get("model.theta")) R.theta = parse_angle("model.theta", *v);
        if (auto v = get("model.phi")) R.phi = parse_angle("model.phi", *v);
        c.rotation = R;
    }
    c.eta = integer("model.eta", 1);
    if (c.eta != 1 && c.eta != -1) throw ConfigError("model.eta", "must be 1 or -1");

    c.range_set = get("scan.E_lo") || get("scan.E_hi");
    c.E_lo = num("scan.E_lo", c.E_lo);
    c.E_hi = num("scan.E_hi", c.E_hi);
    if (!(c.E_lo < c.E_hi)) throw ConfigError("scan.E_lo", "must be less than scan.E_hi");
    c.grid_points = integer("scan.grid_points", c.grid_points);
    if (c.grid_points < 2) throw ConfigError("scan.grid_points", "must be >= 2");
    c.q = integer("scan.q", c.q);
    if (c.q < 0) throw ConfigError("scan.q", "must be >= 0");
    if (auto v = get("scan.branch")) {
        if (*v == "+" || *v == "plus")
            c.branch = Branch::Plus;
        else if (*v == "-" || *v == "minus")
            c.branch = Branch::Minus;
        else
            throw ConfigError("scan.branch", "must be + or -");
    }
    if (auto v = get("scan.script_N")) c.script_N = parse_int_list("scan.script_N", *v);
    for (int s : c.script_N)
        if (s < 1) throw ConfigError("scan.script_N", "entries must be >= 1");
    c.n = integer("scan.n", c.n);
    if (c.n < 0) throw ConfigError("scan.n", "must be >= 0");
    c.zeta_lo = num("scan.zeta_lo", c.zeta_lo);
    c.zeta_hi = num("scan.zeta_hi", c.zeta_hi);
    c.zeta_points = integer("scan.zeta_points", c.zeta_points);
    if (c.zeta_points < 1) throw ConfigError("scan.zeta_points", "must be >= 1");
    if (c.zeta_points > 1 && !(c.zeta_lo < c.zeta_hi)) throw ConfigError("scan.zeta_lo", "must be less than scan.zeta_hi");
    c.tanh_tau = num("scan.tanh_tau", c.tanh_tau);
    if (!(c.tanh_tau >= 0.0 && c.tanh_tau < 1.0)) throw ConfigError("scan.tanh_tau", "must be in [0, 1)");

    if (auto v = get("oracle")) c.oracle = parse_bool("oracle", *v);
    if (auto v = get("seed")) {
        std::uint64_t s = 0;
        auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), s);
        if (ec != std::errc{} || p != v->data() + v->size()) throw ConfigError("seed", "not an unsigned integer");
        c.seed = s;
    }
    c.out_path = get("output.path").value_or("");
    c.format = get("output.format").value_or("csv");
    if (c.format != "csv" && c.format != "json") throw ConfigError("output.format", "must be csv or json");
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return config_from_entries(parse_key_values(is));
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    return config_from_entries(parse_key_values(in));
}

}  // namespace ususy

// ususy: spectra, det curves and benchmarks from a flat config file.
#include <ususy/ususy.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace {

using namespace ususy;
using json = nlohmann::ordered_json;

using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
    std::string command;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    json summary = json::object();
};

struct Options {
    std::string config;
    std::string out;
    std::string format;
    int jobs = default_jobs();
    bool oracle = false;
    std::optional<RunConfig> cfg;
};

std::string fmt_double(double x) {
    if (!std::isfinite(x)) return {};
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, long long>)
                        out += std::to_string(v);
                    else if constexpr (std::is_same_v<T, double>)
                        out += fmt_double(v);
                    else if constexpr (std::is_same_v<T, std::string>)
                        out += csv_field(v);
                },
                row[i]);
        }
        out += '\n';
    }
    return out;
}

json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else if constexpr (std::is_same_v<T, double>)
                return std::isfinite(v) ? json(v) : json(nullptr);
            else
                return v;
        },
        c);
}

std::string render_json(const Table& t) {
    json j;
    j["command"] = t.command;
    j["columns"] = t.columns;
    j["rows"] = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& c : row) r.push_back(cell_json(c));
        j["rows"].push_back(r);
    }
    j["summary"] = t.summary;
    return j.dump(2) + "\n";
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

const char* branch_name(Branch b) { return b == Branch::Plus ? "+" : "-"; }

const RunConfig& require_config(const Options& o, const char* cmd) {
    if (!o.cfg) throw ConfigError("--config", std::string(cmd) + " needs a config file");
    return *o.cfg;
}

double ed_distance(const RVec& ev, double x) { return (ev.array() - x).abs().minCoeff(); }

template <class T>
const T& require_kind(const RunConfig& c, const char* cmd) {
    if (!std::holds_alternative<T>(c.model))
        throw ConfigError("model.kind", std::string(cmd) + " does not support kind '" + kind_name(c.model) + "'");
    return std::get<T>(c.model);
}

BlockHamiltonian config_hamiltonian(const RunConfig& c) {
    if (std::holds_alternative<SpinOne>(c.model)) throw ConfigError("model.kind", "spin_one has no 2x2 block form");
    BlockHamiltonian H = build(c.model);
    if (c.rotation) H = rotate_block(H, *c.rotation);
    return H;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Options& o, Table& t) {
    const RunConfig& c = require_config(o, "spectrum");
    const BlockHamiltonian H = config_hamiltonian(c);
    SpectrumOptions so;
    so.grid_points = c.grid_points;
    so.oracle = c.oracle || o.oracle;
    so.jobs = o.jobs;
    const auto res = spectrum_via_reduction(H, c.branch, {c.E_lo, c.E_hi}, so);

    t.columns = {"record", "index", "E", "multiplicity", "residual", "overlap", "E_m", "note"};
    long long i = 0;
    for (const auto& r : res.roots.roots) {
        double worst = 0.0;
        for (const auto& s : res.spinors)
            if (s.E == r.E) worst = std::max(worst, s.residual);
        t.rows.push_back({std::string("root"), i++, r.E, static_cast<long long>(r.multiplicity), worst, {}, {},
                          std::string(r.at_pole ? "at_pole" : "")});
    }
    i = 0;
    for (const auto& e : res.exclusions.entries)
        t.rows.push_back({std::string("excluded"), i++, e.E, 1LL, {}, e.overlap, e.E_m,
                          std::string(e.kind == ExclusionKind::Overlap ? "overlap" : "pole_cancelled")});
    i = 0;
    for (const auto& f : res.failures) t.rows.push_back({std::string("failure"), i++, {}, {}, {}, {}, {}, f});

    t.summary["branch"] = branch_name(c.branch);
    t.summary["range"] = {c.E_lo, c.E_hi};
    t.summary["roots"] = res.roots.total();
    t.summary["excluded"] = res.exclusions.entries.size();
    t.summary["failures"] = res.failures.size();
    for (const auto& f : res.failures) std::cerr << "unresolved: " << f << "\n";
    return res.failures.empty() ? 0 : 2;
}

int cmd_detcurve(const Options& o, Table& t) {
    const RunConfig& c = require_config(o, "detcurve");
    DetCurve curve;
    RootSet roots;
    std::vector<double> poles;
    if (std::holds_alternative<GenRabi>(c.model) && c.q > 0) {
        const auto s = genrabi_continuant_scan(std::get<GenRabi>(c.model), c.q, c.E_lo, c.E_hi, c.grid_points, o.jobs);
        curve = s.curve;
        roots = s.roots;
        poles = s.poles;
        t.summary["source"] = "continuant";
        t.summary["q"] = c.q;
    } else {
        const BlockHamiltonian H = config_hamiltonian(c);
        const BranchFunction bf(H, c.branch);
        const auto cf = bf.characteristic();
        ScanOptions so;
        so.jobs = o.jobs;
        curve = det_curve(cf, c.E_lo, c.E_hi, c.grid_points, bf.poles, so);
        roots = find_roots(cf, c.E_lo, c.E_hi, bf.poles, so);
        poles = bf.poles;
        t.summary["source"] = "reduced";
        t.summary["branch"] = branch_name(c.branch);
    }
    t.columns = {"E", "sign", "log_abs_det", "status"};
    for (const auto& p : curve.grid)
        t.rows.push_back({p.E, static_cast<long long>(p.sign), p.log_abs,
                          std::string(p.status == PointStatus::Ok ? "ok" : "pole_adjacent")});
    json rj = json::array();
    for (double r : roots.values()) rj.push_back(r);
    json pj = json::array();
    for (double p : poles)
        if (p >= c.E_lo && p <= c.E_hi) pj.push_back(p);
    t.summary["roots"] = rj;
    t.summary["poles"] = pj;
    return 0;
}

int cmd_dicke_bench(const Options& o, Table& t) {
    const RunConfig& c = require_config(o, "dicke-bench");
    const auto& spec = require_kind<GenDicke>(c, "dicke-bench");
    if (spec.N < 2) throw ConfigError("model.N", "dicke-bench needs N >= 2");
    const std::size_t sub = (std::size_t{1} << (spec.N - 1)) * static_cast<std::size_t>(spec.M);
    for (int s : c.script_N)
        if (static_cast<std::size_t>(s) > sub) throw ConfigError("scan.script_N", "exceeds the (N-1)-spin dimension");
    const auto ctx = DickeContext::make(spec, true);
    std::optional<std::pair<double, double>> range;
    if (c.range_set) range = std::make_pair(c.E_lo, c.E_hi);
    const auto results = dicke_bench(ctx, c.script_N, c.branch, range, o.jobs);

    t.columns = {"script_N", "n_roots", "n_out", "ground_root", "ground_ed", "ground_deviation"};
    json matches = json::array();
    for (const auto& r : results) {
        const auto vals = r.roots.values();
        t.rows.push_back({static_cast<long long>(r.script_N), static_cast<long long>(vals.size()),
                          static_cast<long long>(r.n_out), vals.empty() ? Cell{} : Cell{vals.front()},
                          (*ctx.full_ed)(0), vals.empty() ? Cell{} : Cell{r.ground_deviation}});
        json m = json::array();
        for (const auto& x : r.matches)
            m.push_back({{"root", x.root}, {"ed", x.ed}, {"deviation", x.deviation}, {"rel_error", finite_or_null(x.rel)}});
        matches.push_back({{"script_N", r.script_N}, {"matches", m}});
    }
    const auto rg = results.empty() ? std::make_pair(c.E_lo, c.E_hi) : results.front().range;
    t.summary["branch"] = branch_name(c.branch);
    t.summary["range"] = {rg.first, rg.second};
    t.summary["ed_dimension"] = ctx.full_ed->size();
    t.summary["per_script_N"] = matches;
    return 0;
}

int cmd_tc_count(const Options&, Table& t, int N, int n) {
    if (N < 1) throw ConfigError("N", "must be >= 1");
    if (n < 0) throw ConfigError("n", "must be >= 0");
    t.columns = {"N", "n", "count", "oracle", "bound"};
    const Cell oracle = N <= 6 && n <= 6 ? Cell{static_cast<long long>(tc_count_oracle(N, n))} : Cell{};
    t.rows.push_back({static_cast<long long>(N), static_cast<long long>(n), static_cast<long long>(tc_param_count(N, n)),
                      oracle, std::pow(1.0 + N, n)});
    return 0;
}

int cmd_isolated(const Options& o, Table& t, int class_id, int order) {
    IsolatedParams p;
    if (o.cfg) {
        const RunConfig& c = *o.cfg;
        const auto& g = require_kind<GenRabi>(c, "isolated-check");
        if (g.gamma.imag() != 0.0) throw ConfigError("model.gamma", "isolated-check needs a real gamma");
        p = {g.alpha, g.beta, g.gamma.real(), g.Delta, c.eta, g.M};
    } else {
        p = isolated_example(class_id, order);
    }
    const auto r = isolated_solution_check(class_id, p, order);
    const auto ed = direct_ed(r.rotated.assemble(), true);
    const int flagged = excluded_candidates(r.rotated, r.missing_branch, ed).count_at(r.E, 1e-8);

    t.columns = {"item", "value", "status"};
    for (const auto& k : r.constraints)
        t.rows.push_back({k.name, k.residual, std::string(k.residual < 1e-10 ? "ok" : "violated")});
    t.rows.push_back({std::string("E"), r.E, std::string{}});
    t.rows.push_back({std::string("witness_residual"), r.witness->residual,
                      std::string(r.witness->residual < 1e-8 ? "ok" : "violated")});
    t.rows.push_back({std::string("ed_distance"), ed_distance(ed.eigenvalues, r.E), std::string{}});
    t.rows.push_back({std::string("flagged_entries"), static_cast<long long>(flagged),
                      std::string(flagged >= 1 ? "ok" : "not_flagged")});
    t.summary["class"] = class_id;
    t.summary["order"] = order;
    t.summary["params"] = {{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}, {"Delta", p.Delta}, {"eta", p.eta}};
    t.summary["missing_branch"] = branch_name(r.missing_branch);
    return 0;
}

int cmd_locus(const Options& o, Table& t, std::optional<int> n_flag) {
    LocusOptions lo;
    std::vector<double> zetas;
    RunConfig c;
    if (o.cfg) {
        c = *o.cfg;
        const auto& g = require_kind<GenRabi>(c, "locus");
        lo.gamma = g.gamma;
        lo.M = g.M;
    } else {
        lo.gamma = std::polar(0.2, std::numbers::pi / 3.0);
        lo.M = 40;
    }
    lo.n = n_flag ? *n_flag : c.n;
    if (lo.n < 0) throw ConfigError("--n", "must be >= 0");
    lo.tanh_tau = c.tanh_tau;
    lo.jobs = o.jobs;
    for (int i = 0; i < c.zeta_points; ++i)
        zetas.push_back(c.zeta_points == 1 ? c.zeta_lo
                                           : c.zeta_lo + (c.zeta_hi - c.zeta_lo) * i / (c.zeta_points - 1));
    const auto pts = degeneracy_locus(zetas, lo);
    t.columns = {"zeta", "Delta", "residual", "status"};
    for (const auto& p : pts) {
        if (p.found)
            t.rows.push_back({p.zeta, p.Delta, p.residual, std::string("ok")});
        else
            t.rows.push_back({p.zeta, {}, {}, std::string("no_crossing")});
    }
    t.summary["n"] = lo.n;
    t.summary["tanh_tau"] = lo.tanh_tau;
    t.summary["gamma"] = {lo.gamma.real(), lo.gamma.imag()};
    t.summary["M"] = lo.M;
    return 0;
}

int cmd_ed(const Options& o, Table& t) {
    const RunConfig& c = require_config(o, "ed");
    const Mat H = std::holds_alternative<SpinOne>(c.model) ? full_hamiltonian(c.model) : config_hamiltonian(c).assemble();
    const RVec ev = eigenvalues(H);
    t.columns = {"index", "E"};
    for (Eigen::Index i = 0; i < ev.size(); ++i) t.rows.push_back({static_cast<long long>(i), ev(i)});
    t.summary["dimension"] = ev.size();
    return 0;
}

void emit(const Options& o, const Table& t) {
    std::string fmt = o.format;
    std::string path = o.out;
    if (o.cfg) {
        // flags win over output.* keys
        if (fmt.empty() && o.cfg->entries.count("output.format")) fmt = o.cfg->format;
        if (path.empty()) path = o.cfg->out_path;
    }
    if (fmt.empty()) fmt = "csv";
    const std::string text = fmt == "json" ? render_json(t) : render_csv(t);
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("--out", "cannot write '" + path + "'");
    f << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"USUSY reduction of spin-field Hamiltonians"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "config file (section.key = value)");
    app.add_option("--out", o.out, "output path (default stdout)");
    app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--oracle", o.oracle, "run direct ED alongside");
    app.fallthrough();

    auto* spectrum = app.add_subcommand("spectrum", "roots, residuals and exclusion report");
    auto* detcurve = app.add_subcommand("detcurve", "sign and log|det| on a grid");
    auto* dicke = app.add_subcommand("dicke-bench", "correlated-basis ED against direct ED");
    auto* tc = app.add_subcommand("tc-count", "ansatz parameter count");
    int tc_N = 0, tc_n = 0;
    tc->add_option("N", tc_N)->required();
    tc->add_option("n", tc_n)->required();
    auto* iso = app.add_subcommand("isolated-check", "isolated exact solution witness");
    int iso_class = 0, iso_order = -1;
    iso->add_option("class", iso_class)->required();
    iso->add_option("--order", iso_order);
    auto* locus = app.add_subcommand("locus", "degeneracy locus Delta(zeta)");
    std::optional<int> locus_n;
    locus->add_option("--n", locus_n);
    auto* ed = app.add_subcommand("ed", "direct ED eigenvalues");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    Table t;
    int code = 0;
    try {
        if (!o.config.empty()) o.cfg = load_config(o.config);
        if (*spectrum) {
            t.command = "spectrum";
            code = cmd_spectrum(o, t);
        } else if (*detcurve) {
            t.command = "detcurve";
            code = cmd_detcurve(o, t);
        } else if (*dicke) {
            t.command = "dicke-bench";
            code = cmd_dicke_bench(o, t);
        } else if (*tc) {
            t.command = "tc-count";
            code = cmd_tc_count(o, t, tc_N, tc_n);
        } else if (*iso) {
            t.command = "isolated-check";
            if (iso_order < 0) iso_order = iso_class == 3 ? 1 : 0;
            code = cmd_isolated(o, t, iso_class, iso_order);
        } else if (*locus) {
            t.command = "locus";
            code = cmd_locus(o, t, locus_n);
        } else if (*ed) {
            t.command = "ed";
            code = cmd_ed(o, t);
        }
        emit(o, t);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NearPole& e) {
        std::cerr << "unresolved: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return code;
}

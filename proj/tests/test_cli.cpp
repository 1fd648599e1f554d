#include <ususy/config.hpp>
#include <ususy/models.hpp>
#include <ususy/spectral.hpp>

#include <gtest/gtest.h>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <map>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using namespace ususy;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

fs::path scratch_dir() {
    static const fs::path d = [] {
        fs::path p = fs::temp_directory_path() / ("ususy_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    const fs::path err = scratch_dir() / "stderr.txt";
    const std::string cmd = std::string(USUSY_CLI_PATH) + " " + args + " 2>" + err.string();
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = ::pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.err = slurp(err);
    return r;
}

std::string cfg(const std::string& name) { return std::string("--config ") + USUSY_CONFIG_DIR + "/" + name; }

std::string write_cfg(const std::string& name, const std::string& text) {
    const fs::path p = scratch_dir() / name;
    std::ofstream(p) << text;
    return "--config " + p.string();
}

using Rows = std::vector<std::vector<std::string>>;

// Header included as row 0. No quoted fields are expected in these outputs.
Rows parse_csv(const std::string& text) {
    Rows rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        rows.push_back(f);
    }
    return rows;
}

std::vector<double> column(const Rows& rows, const std::string& record, int col) {
    std::vector<double> v;
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (record.empty() || rows[i][0] == record) v.push_back(std::stod(rows[i][col]));
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing

TEST(Config, DefaultsAndModel) {
    const auto c = parse_config("model.kind = jc\nmodel.Delta = 0.3 # detuning\nmodel.alpha = 0.7\n");
    const auto& jc = std::get<JC>(c.model);
    EXPECT_EQ(jc.Delta, 0.3);
    EXPECT_EQ(jc.alpha, 0.7);
    EXPECT_EQ(jc.M, 30);
    EXPECT_EQ(c.grid_points, 2001);
    EXPECT_FALSE(c.range_set);
    EXPECT_FALSE(c.rotation);
    EXPECT_EQ(c.format, "csv");
}

TEST(Config, ComplexGammaFromPolarForm) {
    const auto c = parse_config("model.kind = genrabi\nmodel.alpha = 0.7\nmodel.beta = 0.3\n"
                                "model.gamma_abs = 0.2\nmodel.gamma_arg = pi/3\n");
    const auto& g = std::get<GenRabi>(c.model);
    EXPECT_NEAR(g.gamma.real(), 0.1, 1e-15);
    EXPECT_NEAR(g.gamma.imag(), 0.2 * std::sqrt(3.0) / 2, 1e-15);
}

TEST(Config, AngleForms) {
    EXPECT_NEAR(parse_config("model.kind = jc\nmodel.theta = pi\n").rotation->theta, std::numbers::pi, 0);
    EXPECT_NEAR(parse_config("model.kind = jc\nmodel.theta = 0.5*pi\n").rotation->theta, std::numbers::pi / 2, 1e-15);
    EXPECT_NEAR(parse_config("model.kind = jc\nmodel.phi = 0.25\n").rotation->phi, 0.25, 0);
}

TEST(Config, ListsAndCouplings) {
    const auto c = parse_config("model.kind = spin_chain\nmodel.N = 3\nmodel.couplings = 0-1:2, 0-2:1, 1-2:1\n"
                                "scan.script_N = 1-3, 6\nscan.branch = -\n");
    EXPECT_EQ(c.script_N, (std::vector<int>{1, 2, 3, 6}));
    EXPECT_EQ(c.branch, Branch::Minus);
    const auto& s = std::get<SpinChain>(c.model);
    ASSERT_EQ(s.couplings.size(), 3u);
    EXPECT_EQ(s.couplings[0].J, 2.0);
    EXPECT_EQ(s.couplings[2].i, 1);
}

TEST(Config, ErrorsNameTheField) {
    auto field_of = [](const std::string& text) -> std::string {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.field;
        }
        return "<none>";
    };
    EXPECT_EQ(field_of("model.kind = jc\nscan.E_lo = 2\nscan.E_hi = 1\n"), "scan.E_lo");
    EXPECT_EQ(field_of("model.kind = jc\nscan.grid_points = 1\n"), "scan.grid_points");
    EXPECT_EQ(field_of("model.kind = jc\nmodel.Delta = abc\n"), "model.Delta");
    EXPECT_EQ(field_of("model.kind = nothing\n"), "model.kind");
    EXPECT_EQ(field_of("model.Delta = 1\n"), "model.kind");
    EXPECT_EQ(field_of("model.kind = jc\nscan.foo = 1\n"), "scan.foo");
    EXPECT_EQ(field_of("model.kind = jc\nmodel.Delta = 1\nmodel.Delta = 2\n"), "model.Delta");
    EXPECT_EQ(field_of("model.kind = jc\njust words\n"), "line 2");
    EXPECT_EQ(field_of("model.kind = jc\nscan.branch = up\n"), "scan.branch");
    EXPECT_EQ(field_of("model.kind = jc\nmodel.M = 0\n"), "model");
    EXPECT_EQ(field_of("model.kind = genrabi\nmodel.gamma = 1\nmodel.gamma_abs = 1\n"), "model.gamma");
    EXPECT_EQ(field_of("model.kind = jc\noutput.format = xml\n"), "output.format");
}

// ---------------------------------------------------------------------------
// Subcommands

TEST(CliSpectrum, JaynesCummingsMatchesTwoLevelBlocks) {
    const auto r = run("spectrum " + cfg("jc.cfg"));
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"record", "index", "E", "multiplicity", "residual", "overlap", "E_m", "note"}));
    const auto roots = column(rows, "root", 2);
    // {|n,up>, |n+1,down>} block of a^+a + Delta sz + alpha(s+ a + h.c.)
    const double D = 0.3, al = 0.7;
    for (int n = 0; n <= 5; ++n) {
        Eigen::Matrix2d b;
        b << n + D, al * std::sqrt(n + 1.0), al * std::sqrt(n + 1.0), n + 1 - D;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(b);
        for (int k = 0; k < 2; ++k) {
            double best = 1e9;
            for (double x : roots) best = std::min(best, std::abs(x - es.eigenvalues()(k)));
            EXPECT_LT(best, 1e-8) << "n=" << n << " k=" << k;
        }
    }
    for (const auto& residual : column(rows, "root", 4)) EXPECT_LT(residual, 1e-9);
    const auto excl = column(rows, "excluded", 2);
    ASSERT_EQ(excl.size(), 1u);
    EXPECT_NEAR(excl[0], -D, 1e-9);
    EXPECT_NEAR(column(rows, "excluded", 5)[0], 1.0, 1e-9);
}

TEST(CliSpectrum, TwoSpinUnrotatedFlagsBothZeros) {
    const auto r = run("spectrum " + cfg("two_spin.cfg"));
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    const auto excl = column(rows, "excluded", 2);
    ASSERT_EQ(excl.size(), 2u);
    for (double e : excl) EXPECT_NEAR(e, 0.0, 1e-12);
    const auto roots = column(rows, "root", 2);
    ASSERT_EQ(roots.size(), 2u);
    EXPECT_NEAR(roots[0], -1.0, 1e-10);
    EXPECT_NEAR(roots[1], 1.0, 1e-10);
}

TEST(CliSpectrum, TwoSpinRotatedRecoversFullSpectrum) {
    const auto r = run("spectrum " + cfg("two_spin_rotated.cfg"));
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    std::vector<double> all;
    const auto E = column(rows, "root", 2), mult = column(rows, "root", 3);
    for (std::size_t i = 0; i < E.size(); ++i)
        for (int k = 0; k < static_cast<int>(mult[i]); ++k) all.push_back(E[i]);
    ASSERT_EQ(all.size(), 4u);
    const double expect[] = {-1, 0, 0, 1};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(all[i], expect[i], 1e-10);
    EXPECT_TRUE(column(rows, "excluded", 2).empty());
}

TEST(CliSpectrum, MalformedConfigExitsOneNamingField) {
    const auto r = run("spectrum " + cfg("malformed.cfg"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("scan.E_lo"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(CliSpectrum, MissingConfigAndUnknownKeyExitOne) {
    EXPECT_EQ(run("spectrum").code, 1);
    EXPECT_EQ(run("spectrum --config /nonexistent/x.cfg").code, 1);
    const auto r = run("spectrum " + write_cfg("unknown.cfg", "model.kind = jc\nmodel.Deltaa = 1\n"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("model.Deltaa"), std::string::npos);
}

TEST(CliSpectrum, OutFileMatchesStdout) {
    const fs::path out = scratch_dir() / "uf.csv";
    ASSERT_EQ(run("spectrum " + cfg("uniform_field.cfg") + " --out " + out.string()).code, 0);
    EXPECT_EQ(slurp(out), run("spectrum " + cfg("uniform_field.cfg")).out);
}

TEST(CliTc, CountSevenTwo) {
    const auto r = run("tc-count 7 2");
    ASSERT_EQ(r.code, 0);
    const Rows rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"N", "n", "count", "oracle", "bound"}));
    EXPECT_EQ(rows[1][2], "29");
    EXPECT_EQ(rows[1][4], "64");
}

TEST(CliTc, OracleColumnAgrees) {
    const Rows rows = parse_csv(run("tc-count 4 3").out);
    EXPECT_EQ(rows[1][2], rows[1][3]);
    EXPECT_EQ(rows[1][2], "15");  // 1 + 4 + 6 + 4
}

TEST(CliDetcurve, RowCountAndDeterminism) {
    const auto a = run("detcurve " + cfg("genrabi_q12.cfg"));
    ASSERT_EQ(a.code, 0) << a.err;
    const Rows rows = parse_csv(a.out);
    EXPECT_EQ(rows.size(), 2002u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"E", "sign", "log_abs_det", "status"}));
    EXPECT_DOUBLE_EQ(std::stod(rows[1][0]), -1.0);
    EXPECT_DOUBLE_EQ(std::stod(rows.back()[0]), 6.0);
    EXPECT_EQ(run("detcurve " + cfg("genrabi_q12.cfg") + " --jobs 3").out, a.out);
}

TEST(CliDetcurve, PoleAdjacentRowsFlagged) {
    // rotated two spins: the other block is sx/2, poles at E = -1/2 and 1/2
    const auto r = run("detcurve " + cfg("two_spin_rotated.cfg"));
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    int flagged = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][3] != "pole_adjacent") continue;
        ++flagged;
        EXPECT_NEAR(std::abs(std::stod(rows[i][0])), 0.5, 1e-2);
    }
    EXPECT_GE(flagged, 1);
}

TEST(CliDicke, TinyCaseAgainstDirectEd) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run("dicke-bench " + cfg("dicke_small.cfg"));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(secs, 1.0);
    const Rows rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 5u);
    const RVec ev = eigenvalues(full_hamiltonian(GenDicke{2, 0.15, 0.1, 0.1, 0.2, 10}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][0], std::to_string(i));
        EXPECT_NEAR(std::stod(rows[i][4]), ev(0), 1e-12);
        EXPECT_NEAR(std::stod(rows[i][5]), std::abs(std::stod(rows[i][3]) - ev(0)), 1e-12);
        EXPECT_LT(std::stod(rows[i][5]), 1e-2);
    }
}

TEST(CliDicke, RejectsOtherModels) {
    const auto r = run("dicke-bench " + cfg("jc.cfg"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("model.kind"), std::string::npos);
}

TEST(CliIsolated, ClassTwoOrderZeroReport) {
    const auto r = run("isolated-check 2 --order 0");
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"item", "value", "status"}));
    bool saw_witness = false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "witness_residual") {
            saw_witness = true;
            EXPECT_LT(std::stod(rows[i][1]), 1e-8);
        }
        if (rows[i][0] == "E") {
            EXPECT_NEAR(std::stod(rows[i][1]), 0.25, 1e-12);
        }
        if (rows[i][0] == "flagged_entries") {
            EXPECT_GE(std::stoi(rows[i][1]), 1);
        }
        if (rows[i].size() > 2 && !rows[i][2].empty()) {
            EXPECT_EQ(rows[i][2], "ok") << rows[i][0];
        }
    }
    EXPECT_TRUE(saw_witness);
}

TEST(CliIsolated, ViolatedConstraintsExitOne) {
    const auto c = write_cfg("iso_bad.cfg",
                             "model.kind = genrabi\nmodel.alpha = 1\nmodel.beta = 0.25\nmodel.gamma = 0.25\n"
                             "model.Delta = 0.3\nmodel.M = 60\n");
    const auto r = run("isolated-check 1 " + c);
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("constraints violated"), std::string::npos) << r.err;
}

TEST(CliLocus, ShortCurveHasSmallResiduals) {
    const auto c = write_cfg("locus.cfg",
                             "model.kind = genrabi\nmodel.gamma_abs = 0.2\nmodel.gamma_arg = pi/3\nmodel.M = 40\n"
                             "scan.zeta_lo = 0\nscan.zeta_hi = 0.2\nscan.zeta_points = 3\n");
    const auto r = run("locus --n 1 " + c);
    ASSERT_EQ(r.code, 0) << r.err;
    const Rows rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[2][0], "0.10000000000000001");  // 17 significant digits
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i][3], "ok");
        EXPECT_LT(std::abs(std::stod(rows[i][2])), 1e-10);
    }
}

TEST(CliEd, TwoSpinEigenvalues) {
    const Rows rows = parse_csv(run("ed " + cfg("two_spin.cfg")).out);
    ASSERT_EQ(rows.size(), 5u);
    const double expect[] = {-1, 0, 0, 1};
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::stod(rows[i + 1][1]), expect[i], 1e-14);
}

TEST(CliJson, OutputsFollowSchema) {
    const auto schema = nlohmann::json::parse(slurp(USUSY_SCHEMA_PATH));
    std::map<std::string, nlohmann::json> columns;
    for (const auto& rule : schema["allOf"])
        columns[rule["if"]["properties"]["command"]["const"]] = rule["then"]["properties"]["columns"]["const"];
    const std::vector<std::string> runs = {"spectrum " + cfg("jc.cfg"), "detcurve " + cfg("two_spin.cfg"),
                                           "dicke-bench " + cfg("dicke_small.cfg"), "tc-count 3 2",
                                           "isolated-check 1", "ed " + cfg("two_spin.cfg")};
    for (const auto& args : runs) {
        const auto r = run("--format json " + args);
        ASSERT_EQ(r.code, 0) << args << ": " << r.err;
        const auto j = nlohmann::json::parse(r.out);
        for (const auto& key : schema["required"]) EXPECT_TRUE(j.contains(key)) << args << " " << key;
        EXPECT_EQ(j.size(), schema["required"].size()) << args;
        const std::string cmd = j["command"];
        ASSERT_TRUE(columns.count(cmd)) << cmd;
        EXPECT_EQ(j["columns"], columns[cmd]) << cmd;
        for (const auto& row : j["rows"]) EXPECT_EQ(row.size(), j["columns"].size()) << cmd;
        EXPECT_TRUE(j["summary"].is_object());
    }
}

TEST(CliJson, FormatKeyInConfig) {
    const auto c = write_cfg("uf_json.cfg", "model.kind = uniform_field\nmodel.B1 = 3\nmodel.B2 = 4\n"
                                            "scan.E_lo = -6\nscan.E_hi = 6\noutput.format = json\n");
    const auto r = run("spectrum " + c);
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_NEAR(j["rows"][0][2].get<double>(), -5.0, 1e-10);
    // the flag overrides the config
    EXPECT_EQ(run("--format csv spectrum " + c).out.substr(0, 6), "record");
}

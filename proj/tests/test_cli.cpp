// End-to-end checks of the installed command-line tool: exit codes,
// determinism across runs and thread counts, and the documented pipelines.
// The binary path arrives via the CLICKPNR_BIN environment variable.

#include "clickpnr/dataio.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* bin = std::getenv("CLICKPNR_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "CLICKPNR_BIN must point at the CLI binary");
    return bin;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" + binary() + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("simulate is deterministic and honors the seed") {
    TempDir dir("clickpnr_cli_sim");
    const std::string out1 = (dir.path / "a").string();
    const std::string out2 = (dir.path / "b").string();
    const std::string args = "simulate --n-bins 4 --eta 0.608 --nbar 0.1 --shots 5000 --seed 7";
    CHECK(run(args + " --out " + out1) == 0);
    CHECK(run(args + " --out " + out2, "OMP_NUM_THREADS=1") == 0);
    const auto file1 = read_text(fs::path(out1) / "shots_N4_p00.csv");
    const auto file2 = read_text(fs::path(out2) / "shots_N4_p00.csv");
    CHECK(!file1.empty());
    CHECK(file1 == file2);

    SUBCASE("a different seed changes the data") {
        const std::string out3 = (dir.path / "c").string();
        CHECK(run(args + "1 --out " + out3) == 0);  // seed 71
        CHECK(read_text(fs::path(out3) / "shots_N4_p00.csv") != file1);
    }
    SUBCASE("zero flux yields all-zero patterns") {
        const std::string out4 = (dir.path / "d").string();
        CHECK(run("simulate --n-bins 4 --nbar 0 --shots 100 --seed 1 --out " + out4) == 0);
        const auto file = clickpnr::read_shots(fs::path(out4) / "shots_N4_p00.csv");
        for (const auto& rec : file.records) CHECK(rec.bits == 0);
    }
}

TEST_CASE("exit codes distinguish failure classes") {
    TempDir dir("clickpnr_cli_codes");
    SUBCASE("validation errors exit 2") {
        CHECK(run("simulate --eta 1.5 --nbar 0.1 --out " + dir.path.string()) == 2);
        CHECK(run("simulate --nbar 0.1 --format yaml --out " + dir.path.string()) == 2);
        CHECK(run("bogus-subcommand") == 2);
    }
    SUBCASE("saturation errors exit 3") {
        // A detector driven into saturation: every bin clicks on every shot.
        clickpnr::ShotFile file;
        file.header.n_bins = 2;
        file.header.nbar = 5.0;
        for (std::uint64_t i = 0; i < 64; ++i) file.records.push_back({i, 0b11u});
        const fs::path sat = dir.path / "sat.csv";
        clickpnr::write_shots(sat, file);
        // Need 4 distinct points; saturation must trip first.
        clickpnr::ShotFile ok = file;
        for (auto& r : ok.records) r.bits = 0b01u;
        const fs::path p2 = dir.path / "p2.csv";
        const fs::path p3 = dir.path / "p3.csv";
        const fs::path p4 = dir.path / "p4.csv";
        ok.header.nbar = 1.0;
        clickpnr::write_shots(p2, ok);
        ok.header.nbar = 2.0;
        clickpnr::write_shots(p3, ok);
        ok.header.nbar = 3.0;
        clickpnr::write_shots(p4, ok);
        CHECK(run("tomography --n-bins 2 " + sat.string() + " " + p2.string() + " " + p3.string() +
                  " " + p4.string() + " --out " + dir.path.string()) == 3);
    }
    SUBCASE("i/o errors exit 4") {
        CHECK(run("invert " + (dir.path / "missing.csv").string() + " --eta 0.6 --out " +
                  dir.path.string()) == 4);
    }
}

TEST_CASE("qparams analytic sweep emits the theory curves") {
    TempDir dir("clickpnr_cli_qp");
    CHECK(run("qparams --analytic --n-bins 4 --eta 1 --nbar 0.1 --nbar 0.5 --nbar 0.85 --out " +
              dir.path.string()) == 0);
    const auto csv = read_text(dir.path / "qparams_curves.csv");
    CHECK(csv.find("nbar,qm_photon,qb_photon,qm_click,qb_click") == 0);
    const auto report = clickpnr::read_report(dir.path / "qparams.json");
    CHECK(report.q_values.size() == 12);
    for (const auto& q : report.q_values) {
        if (q.label.rfind("qm_photon", 0) == 0) CHECK(std::abs(q.estimate.q) < 1e-8);
        if (q.label.rfind("qb_click", 0) == 0) CHECK(std::abs(q.estimate.q) < 1e-12);
    }
}

TEST_CASE("shot pipeline: simulate, tomography, invert, deconvolve") {
    TempDir dir("clickpnr_cli_pipe");
    const std::string out = dir.path.string();
    std::string sim = "simulate --n-bins 4 --eta 0.608 --shots 20000 --seed 3 --out " + out;
    for (int i = 0; i < 6; ++i)
        sim += " --nbar " + std::to_string(0.1 + 0.15 * i);
    REQUIRE(run(sim) == 0);

    std::string tomo = "tomography --n-bins 4 --out " + out;
    for (int i = 0; i < 6; ++i) tomo += " " + out + "/shots_N4_p0" + std::to_string(i) + ".csv";
    REQUIRE(run(tomo) == 0);
    const auto tomo_report = clickpnr::read_report(dir.path / "tomography.json");
    REQUIRE(tomo_report.fit.has_value());
    CHECK(std::abs(tomo_report.fit->eta - 0.608) < 6 * tomo_report.fit->std_errors[1]);
    CHECK(tomo_report.fit_alternate.has_value());
    CHECK(tomo_report.uniformity.has_value());

    REQUIRE(run("invert " + out + "/shots_N4_p05.csv --response-fit " + out +
                "/tomography.json --bootstrap 200 --out " + out) == 0);
    const auto rec_report = clickpnr::read_report(dir.path / "reconstruction.json");
    REQUIRE(!rec_report.distributions.empty());
    CHECK(rec_report.distributions[0].dist.kind() == clickpnr::DistributionKind::pseudo);
    CHECK(rec_report.scalars.count("eta_used") == 1);

    REQUIRE(run("deconvolve " + out + "/reconstruction.json --eta-to 0.8 --eta-to 1.0 "
                "--bootstrap 200 --out " + out) == 0);
    const auto dec_report = clickpnr::read_report(dir.path / "deconvolution.json");
    CHECK(dec_report.distributions.size() == 3);  // pseudo + two stages
    CHECK(dec_report.scalars.count("total_variation_vs_ideal") == 1);
    CHECK(read_text(dir.path / "deconvolution.csv").find("ideal_poisson") != std::string::npos);
}

TEST_CASE("paper pipeline at desk scale is byte-identical across thread counts") {
    TempDir dir("clickpnr_cli_paper");
    const std::string out = (dir.path / "run").string();
    const std::string args =
        "paper-pipeline --shots 2000 --bootstrap 50 --seed 5 --out " + out;

    REQUIRE(run(args, "OMP_NUM_THREADS=1") == 0);
    std::map<std::string, std::string> first;
    for (const auto& entry : fs::recursive_directory_iterator(out))
        if (entry.is_regular_file())
            first[fs::relative(entry.path(), out).string()] = read_text(entry.path());
    REQUIRE(!first.empty());
    CHECK(first.count("pipeline_summary.json") == 1);
    CHECK(first.count("N4/tomography.json") == 1);
    CHECK(first.count("N8/deconvolution.json") == 1);

    fs::remove_all(out);
    REQUIRE(run(args, "OMP_NUM_THREADS=4") == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(out)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), out).string();
        REQUIRE(first.count(rel) == 1);
        CHECK(first.at(rel) == read_text(entry.path()));
        ++compared;
    }
    CHECK(compared == first.size());
}

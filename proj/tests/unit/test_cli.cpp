#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "run_config.hpp"
#include "temp_dir.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "snswf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = snswf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// A simulated record in `dir`, optionally with extra flags.
void simulate(const TempDir& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"simulate", "--out-dir", dir.path().string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(invoke(args).code == 0);
}

} // namespace

TEST_CASE("simulate") {
    TempDir a("cli-sim-a"), b("cli-sim-b");
    SUBCASE("defaults") {
        const auto r = invoke({"simulate", "--out-dir", a.path().string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("record.csv") != std::string::npos);
        CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);
        std::ifstream in(a / "record.csv");
        std::string header;
        std::size_t data_rows = 0;
        for (std::string line; std::getline(in, line);) {
            if (line.empty() || line[0] == '#') continue;
            if (header.empty()) {
                header = line;
                continue;
            }
            ++data_rows;
        }
        CHECK(header == "time,sg,R1,R2,R3,R4,R5,R6,R7,R8");
        CHECK(data_rows == 2400);
        const auto truth = load(a / "truth.json");
        CHECK(truth["f_signal_cpm"] == 3.0);
        CHECK(truth["f_noise_cpm"] == 0.3);
        CHECK(truth["seed"] == 0);
        CHECK(truth["n_samples"] == 2400);
    }
    SUBCASE("same seed, same bytes") {
        simulate(a, {"--seed", "9"});
        simulate(b, {"--seed", "9"});
        CHECK(slurp(a / "record.csv") == slurp(b / "record.csv"));
        CHECK(slurp(a / "truth.json") == slurp(b / "truth.json"));
    }
    SUBCASE("zero duration is a usage error") {
        const auto r = invoke({"simulate", "--out-dir", a.path().string(), "--duration-s", "0"});
        CHECK(r.code == 2);
        CHECK(r.err.find("duration_s") != std::string::npos);
    }
}

TEST_CASE("sobi command") {
    TempDir dir("cli-sobi");
    simulate(dir);
    const auto r = invoke({"sobi", "--input", (dir / "record.csv").string(), "--out-dir", dir.path().string(),
                           "--references", "R1,R2,R3,R4,R5,R6,R7,R8"});
    REQUIRE(r.code == 0);
    const auto meta = load(dir / "sobi.json");
    CHECK(meta["lag_samples"] == json::array({2, 4, 6, 8, 10, 12, 14, 16, 18, 20}));
    CHECK(meta["n_sources"] == 8);
    CHECK(fs::exists(dir / "sources.csv"));
    CHECK(fs::exists(dir / "mixing.csv"));
    CHECK(fs::exists(dir / "unmixing.csv"));
    const auto sources = slurp(dir / "sources.csv");
    CHECK(sources.find("time,s0,s1,s2,s3,s4,s5,s6,s7") != std::string::npos);
}

TEST_CASE("psd command") {
    TempDir dir("cli-psd");
    simulate(dir);
    const auto input = (dir / "record.csv").string();
    SUBCASE("two-tone channel") {
        // order 200 separates the tones on a 120 s record
        const auto r = invoke({"psd", "--input", input, "--out-dir", dir.path().string(), "--channel", "sg", "--ar-order", "200"});
        REQUIRE(r.code == 0);
        const auto doc = load(dir / "psd.json");
        CHECK(doc["peaks"].size() >= 2);
        CHECK(doc["snr"]["snr_db"].is_number());
        CHECK(doc["ar_order"] == 200);
        bool near3 = false;
        for (const auto& p : doc["peaks"]) near3 |= std::abs(p["freq_cpm"].get<double>() - 3.0) <= 0.2;
        CHECK(near3);
        CHECK(fs::exists(dir / "psd.csv"));
    }
    SUBCASE("signal band flag") {
        REQUIRE(invoke({"psd", "--input", input, "--out-dir", dir.path().string(), "--channel", "sg", "--signal-band", "10:20"}).code == 0);
        const auto doc = load(dir / "psd.json");
        CHECK(doc["signal_band_cpm"] == json::array({10.0, 20.0}));
        const double f = doc["snr"]["signal_peak"]["freq_cpm"];
        CHECK(f >= 10.0);
        CHECK(f <= 20.0);
    }
    SUBCASE("missing or unknown channel") {
        CHECK(invoke({"psd", "--input", input, "--out-dir", dir.path().string()}).code == 2);
        const auto r = invoke({"psd", "--input", input, "--out-dir", dir.path().string(), "--channel", "nope"});
        CHECK(r.code == 2);
        CHECK(r.err.find("nope") != std::string::npos);
    }
    SUBCASE("order out of range") {
        CHECK(invoke({"psd", "--input", input, "--out-dir", dir.path().string(), "--channel", "sg", "--ar-order", "500"}).code == 2);
    }
}

TEST_CASE("denoise command") {
    TempDir dir("cli-denoise");
    simulate(dir);
    const auto input = (dir / "record.csv").string();
    const auto out_dir = dir.path().string();

    SUBCASE("both methods") {
        const auto r = invoke({"denoise", "--input", input, "--out-dir", out_dir, "--method", "both"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("report.json") != std::string::npos);
        const auto doc = load(dir / "report.json");
        for (const char* key : {"raw_snr_db", "classic_snr_db", "snswf_snr_db", "improvement_db", "assessments", "config"})
            CHECK(doc.contains(key));
        CHECK(doc["improvement_db"].get<double>() ==
              doctest::Approx(doc["snswf_snr_db"].get<double>() - doc["classic_snr_db"].get<double>()));
        CHECK(doc["input"]["signal_channel"] == "sg");
        CHECK(doc["input"]["reference_channels"].size() == 8);
        for (const auto& [role, file] : doc["artifacts"].items()) CHECK(fs::exists(dir / file.get<std::string>()));
        // every resolved default is echoed
        const auto& cfg = doc["config"];
        CHECK(cfg["wiener"]["taps"] == 40);
        CHECK(cfg["wiener"]["regularization_rel"] == 1e-6);
        CHECK(cfg["spectral"]["ar_order"] == 30);
        CHECK(cfg["spectral"]["grid_max_cpm"] == 70.0);
        CHECK(cfg["sobi"]["n_lags"] == 10);
        CHECK(cfg["sobi"]["max_lag_s"] == 1.0);
        CHECK(cfg["selection"]["high_freq_threshold_cpm"] == 30.0);
        CHECK(cfg["selection"]["noise_bands_cpm"][1][1] == 600.0);
    }
    SUBCASE("classic only") {
        REQUIRE(invoke({"denoise", "--input", input, "--out-dir", out_dir, "--method", "classic"}).code == 0);
        const auto doc = load(dir / "report.json");
        CHECK(doc.contains("classic_snr_db"));
        CHECK_FALSE(doc.contains("snswf_snr_db"));
        CHECK(fs::exists(dir / "denoised_classic.csv"));
        CHECK_FALSE(fs::exists(dir / "denoised_snswf.csv"));
    }
    SUBCASE("snswf only") {
        REQUIRE(invoke({"denoise", "--input", input, "--out-dir", out_dir, "--method", "snswf"}).code == 0);
        const auto doc = load(dir / "report.json");
        CHECK(doc.contains("snswf_snr_db"));
        CHECK_FALSE(doc.contains("improvement_db"));
        CHECK(fs::exists(dir / "component_psds.csv"));
    }
    SUBCASE("config file, with flags taking precedence") {
        write(dir / "run.cfg", "# experiment\ntaps = 12\nar_order = 20  # shorter\n");
        REQUIRE(invoke({"denoise", "--config", (dir / "run.cfg").string(), "--input", input, "--out-dir", out_dir,
                        "--ar-order", "25"}).code == 0);
        const auto cfg = load(dir / "report.json")["config"];
        CHECK(cfg["wiener"]["taps"] == 12);
        CHECK(cfg["spectral"]["ar_order"] == 25);
    }
    SUBCASE("usage errors") {
        write(dir / "bad.cfg", "tapz = 12\n");
        const auto r = invoke({"denoise", "--config", (dir / "bad.cfg").string(), "--input", input, "--out-dir", out_dir});
        CHECK(r.code == 2);
        CHECK(r.err.find("tapz") != std::string::npos);
        CHECK(invoke({"denoise", "--input", input, "--out-dir", out_dir, "--bogus"}).code == 2);
        CHECK(invoke({"denoise", "--input", input, "--out-dir", out_dir, "--method", "lms"}).code == 2);
        CHECK(invoke({"denoise", "--input", input, "--out-dir", out_dir, "--references", "R1"}).code == 2);
        CHECK(invoke({"denoise", "--input", (dir / "missing.csv").string(), "--out-dir", out_dir}).code == 2);
        CHECK(invoke({}).code == 2);
    }
    SUBCASE("numerical failure names the stage") {
        std::ostringstream csv;
        csv << "time,sg,R1,R2\n";
        for (int i = 0; i < 400; ++i) csv << i * 0.05 << ',' << std::sin(0.1 * i) << ",1,2\n";
        write(dir / "flat.csv", csv.str());
        const auto r = invoke({"denoise", "--input", (dir / "flat.csv").string(), "--out-dir", out_dir, "--method", "snswf"});
        CHECK(r.code == 3);
        CHECK(r.err.find("sobi") != std::string::npos);
    }
}

TEST_CASE("denoise favours snswf when the signal has its own spatial pattern") {
    TempDir dir("cli-leak");
    simulate(dir, {"--signal-leak-magnetometer", "0.1", "--magnetometer-white-std", "0.003", "--magnetometer-pink-std", "0.03",
                   "--gradiometer-white-std", "0.0003", "--gradiometer-pink-std", "0.003", "--sg-white-std", "0.0006",
                   "--sg-pink-std", "0.0015"});
    REQUIRE(invoke({"denoise", "--input", (dir / "record.csv").string(), "--out-dir", dir.path().string()}).code == 0);
    CHECK(load(dir / "report.json")["improvement_db"].get<double>() > 0.0);
}

TEST_CASE("help lists every flag with its default") {
    using namespace snswf::cli;
    const std::pair<const char*, unsigned> commands[] = {{"simulate", kSimulate}, {"sobi", kSobi}, {"psd", kPsd}, {"denoise", kDenoise}};
    for (const auto& [cmd, bit] : commands) {
        const auto r = invoke({cmd, "--help"});
        CHECK(r.code == 0);
        for (const auto& field : fields()) {
            if (!(field.commands & bit)) continue;
            CHECK_MESSAGE(r.out.find("--" + flag_name(field.key)) != std::string::npos, field.key);
        }
    }
    const auto r = invoke({"denoise", "--help"});
    CHECK(r.out.find("40") != std::string::npos);
    CHECK(r.out.find("2.5:3.5") != std::string::npos);
}

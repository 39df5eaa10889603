#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <string>

#include "fdp/bands.hpp"
#include "fdp/procedures.hpp"
#include "fdp/simulate.hpp"
#include "test_util.hpp"

using nlohmann::json;
using testutil::run_command;

namespace {
std::string g_cli;

std::string cli(const std::string& args) { return g_cli + " " + args; }
}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-fdpbands>\n");
        return 1;
    }
    g_cli = argv[1];
    doctest::Context ctx;
    ctx.applyCommandLine(argc - 1, argv + 1);
    return ctx.run();
}

TEST_CASE("bounds on a label file") {
    const std::string path = testutil::temp_path("labels4.txt");
    testutil::write_file(path, "1\n1\n-1\n1\n");
    const auto res = run_command(
        cli("bounds " + path + " --alpha 0.5 --gamma 0.05 --kind kr --seed 1"));
    REQUIRE(res.exit_code == 0);
    const json out = json::parse(res.output);
    CHECK(out["k_as"] == 2);
    CHECK(out["discoveries"] == 2);
    CHECK(out["bounds"].contains("kr"));
    CHECK(out["bounds"]["kr"].contains("q"));
    CHECK(out["bounds"]["kr"].contains("q_raw"));
    std::remove(path.c_str());
}

TEST_CASE("empty input yields an empty decision") {
    const std::string path = testutil::temp_path("empty.txt");
    testutil::write_file(path, "");
    const auto res =
        run_command(cli("bounds " + path + " --kind kr --seed 1"));
    REQUIRE(res.exit_code == 0);
    const json out = json::parse(res.output);
    CHECK(out["k_as"] == 0);
    CHECK(out["bounds"]["kr"]["q"] == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("invalid labels exit with code 2") {
    const std::string path = testutil::temp_path("badlabel.txt");
    testutil::write_file(path, "1\n7\n");
    CHECK(run_command(cli("bounds " + path + " --kind kr")).exit_code == 2);
    testutil::write_file(path, "1.5,1\n2.0\n");
    CHECK(run_command(cli("bounds " + path + " --kind kr")).exit_code == 2);
    testutil::write_file(path, "nan,1\n2.0,1\n");
    CHECK(run_command(cli("bounds " + path + " --kind kr")).exit_code == 2);
    std::remove(path.c_str());
}

TEST_CASE("missing tables exit with code 3 and name the gap") {
    const std::string path = testutil::temp_path("labels3.txt");
    testutil::write_file(path, "1\n1\n-1\n");
    const auto res = run_command(cli("bounds " + path + " --kind ub --seed 1"));
    CHECK(res.exit_code == 3);
    std::remove(path.c_str());
}

TEST_CASE("control reports the FDP-controlling threshold") {
    const std::string path = testutil::temp_path("twenty.txt");
    std::string content;
    for (int i = 0; i < 20; ++i) content += "1\n";
    testutil::write_file(path, content);
    const auto res = run_command(cli(
        "control " + path + " --alpha 0.25 --gamma 0.05 --kind kr --seed 1"));
    REQUIRE(res.exit_code == 0);
    const json out = json::parse(res.output);
    CHECK(out["control"]["kr"]["k0"] == 20);
    CHECK(out["control"]["kr"]["discoveries"] == 20);
    CHECK(out["control"]["kr"]["q"] == doctest::Approx(0.2));

    const auto tiny = run_command(cli(
        "control " + path + " --alpha 0.001 --gamma 0.05 --kind kr --seed 1"));
    REQUIRE(tiny.exit_code == 0);
    CHECK(json::parse(tiny.output)["control"]["kr"]["k0"] == 0);
    std::remove(path.c_str());
}

TEST_CASE("tables subcommand writes reproducible files") {
    const std::string out1 = testutil::temp_path("cli_t1.csv");
    const std::string out2 = testutil::temp_path("cli_t2.csv");
    const std::string flags =
        "tables --npaths 1000 --dceiling 50 --gammas 0.05 --R 0.5 --seed 1 --out ";
    REQUIRE(run_command(cli(flags + out1)).exit_code == 0);
    REQUIRE(run_command(cli(flags + out2)).exit_code == 0);
    const std::string a = testutil::read_file(out1);
    CHECK(a == testutil::read_file(out2));
    CHECK(a.find("# fdp-bands-table v1 seed=1 npaths=1000") == 0);
    // 50 SB rows and 50 UB rows plus two header lines.
    int lines = 0;
    for (char ch : a) lines += ch == '\n';
    CHECK(lines == 102);

    CHECK(run_command(cli("tables --npaths 10 --dceiling 5 --gammas 1.5 "
                          "--seed 1 --out " +
                          testutil::temp_path("cli_t3.csv")))
              .exit_code == 2);
    std::remove(out1.c_str());
    std::remove(out2.c_str());
}

TEST_CASE("compare emits the band columns") {
    const std::string table = testutil::temp_path("cli_cmp_table.csv");
    REQUIRE(run_command(cli("tables --npaths 2000 --dceiling 100 "
                            "--gammas 0.05 --R 0.5 --seed 3 --out " +
                            table))
                .exit_code == 0);
    SUBCASE("single row at dmax 1") {
        const auto res = run_command(
            cli("compare --gamma 0.05 --dmax 1 --table " + table + " --seed 1"));
        REQUIRE(res.exit_code == 0);
        CHECK(res.output.find("d,xi_sb,xi_ub,xi_kr\n1,") != std::string::npos);
        int lines = 0;
        for (char ch : res.output) lines += ch == '\n';
        CHECK(lines == 2);
    }
    SUBCASE("kr-only needs no table") {
        const auto res =
            run_command(cli("compare --gamma 0.05 --dmax 3 --kr-only --seed 1"));
        CHECK(res.exit_code == 0);
        CHECK(res.output.find("d,xi_kr\n") != std::string::npos);
    }
    SUBCASE("table discovery through the environment") {
        const auto res = run_command("FDP_BANDS_TABLE=" + table + " " +
                                     cli("compare --gamma 0.05 --dmax 2 --seed 1"));
        CHECK(res.exit_code == 0);
    }
    SUBCASE("band gaps shrink as B decreases") {
        const std::string table3 = testutil::temp_path("cli_cmp_table3.csv");
        REQUIRE(run_command(cli("tables --npaths 2000 --dceiling 100 "
                                "--gammas 0.05 --R 0.75 --seed 3 --out " +
                                table3))
                    .exit_code == 0);
        auto mean_gap = [&](const std::string& args) {
            const auto res = run_command(cli(args));
            REQUIRE(res.exit_code == 0);
            std::istringstream in(res.output);
            std::string line;
            std::getline(in, line);
            double total = 0.0;
            int rows = 0;
            while (std::getline(in, line)) {
                long long d, sb, ub, kr;
                REQUIRE(std::sscanf(line.c_str(), "%lld,%lld,%lld,%lld", &d,
                                    &sb, &ub, &kr) == 4);
                if (d >= 5) {
                    total += static_cast<double>(kr - ub);
                    ++rows;
                }
            }
            return total / rows;
        };
        const double gap_b1 = mean_gap(
            "compare --gamma 0.05 --dmax 100 --c 0.5 --lambda 0.5 --seed 1 "
            "--table " + table);
        const double gap_b3 = mean_gap(
            "compare --gamma 0.05 --dmax 100 --c 0.25 --lambda 0.25 --seed 1 "
            "--table " + table3);
        CHECK(gap_b3 < gap_b1);
        std::remove(table3.c_str());
    }
    std::remove(table.c_str());
}

TEST_CASE("simulate runs are reproducible and power vanishes under pi0=1") {
    const std::string flags =
        "simulate --m 300 --pi0 1.0 --reps 20 --alphas 0.05 --gamma 0.05 "
        "--kind kr --seed 7";
    const auto a = run_command(cli(flags));
    const auto b = run_command(cli(flags));
    REQUIRE(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find(",as,median_power,0\n") != std::string::npos);
}

TEST_CASE("dumped scores round trip through bounds") {
    const std::string dump = testutil::temp_path("dump.csv");
    const auto sim = run_command(
        cli("simulate --m 400 --pi0 0.5 --reps 1 --alphas 0.05 --gamma 0.05 "
            "--kind kr --seed 99 --decoys 3 --method max --dump-scores " +
            dump));
    REQUIRE(sim.exit_code == 0);

    const auto res = run_command(
        cli("bounds " + dump +
            " --decoys 3 --method max --alpha 0.05 --gamma 0.05 --kind kr "
            "--seed 1"));
    REQUIRE(res.exit_code == 0);
    const json out = json::parse(res.output);

    // Recompute in-process on the dumped dataset.
    fdp::MixtureConfig cfg;
    cfg.m = 400;
    cfg.pi0 = 0.5;
    cfg.n_decoys = 3;
    cfg.seed = 99;
    fdp::MixtureConfig first = cfg;
    first.seed = fdp::Rng::for_stream(cfg.seed, 0).next_u64();
    const fdp::Dataset data = fdp::gen_dataset(first);
    fdp::Rng rng(1);
    std::vector<fdp::ScoredEntry> entries;
    for (std::int64_t i = 0; i < data.m(); ++i) {
        const auto ls = fdp::assign_label_multi(
            data.targets[static_cast<std::size_t>(i)], data.decoys_of(i),
            fdp::MultiMethod::max, fdp::TiePolicy::random, rng);
        entries.push_back({ls.w, ls.label, 0});
    }
    fdp::sort_scored(entries, rng);
    const auto seq = fdp::CompetitionSequence::from_entries(entries);
    fdp::BandParams p;
    p.c = 0.25;
    p.lambda = 0.25;
    p.m = seq.m();
    p.alpha = 0.05;
    p.gamma = 0.05;
    const auto as = fdp::as_threshold(seq, p);
    CHECK(out["k_as"] == as.k_as);
    CHECK(out["discoveries"] == as.n_discoveries);
    const auto rep = fdp::tdc_bound(seq, as.k_as, p, fdp::BandKind::KR, nullptr);
    CHECK(out["bounds"]["kr"]["q"] == doctest::Approx(rep.q_bound).epsilon(1e-12));
    std::remove(dump.c_str());
}

TEST_CASE("score-label input is sorted before thresholding") {
    const std::string path = testutil::temp_path("scored.csv");
    // Deliberately unsorted: the two target wins carry the top scores.
    testutil::write_file(path, "score,label\n1.0,-1\n9.0,1\n5.0,1\n");
    const auto res = run_command(
        cli("bounds " + path + " --alpha 0.6 --gamma 0.05 --kind kr --seed 1"));
    REQUIRE(res.exit_code == 0);
    const json out = json::parse(res.output);
    CHECK(out["k_as"] == 2);
    CHECK(out["discoveries"] == 2);
    std::remove(path.c_str());
}

TEST_CASE("randomized mode is stable under a fixed seed") {
    const std::string table = testutil::temp_path("cli_rand_table.csv");
    REQUIRE(run_command(cli("tables --npaths 3000 --dceiling 30 --gammas 0.05 "
                            "--R 0.5 --seed 3 --out " +
                            table))
                .exit_code == 0);
    const std::string path = testutil::temp_path("rand_labels.txt");
    std::string content;
    for (int i = 0; i < 30; ++i) content += i % 4 == 3 ? "-1\n" : "1\n";
    testutil::write_file(path, content);
    const std::string flags = "bounds " + path +
                              " --alpha 0.3 --gamma 0.05 --kind ub --mode rand "
                              "--seed 5 --table " + table;
    const auto a = run_command(cli(flags));
    const auto b = run_command(cli(flags));
    REQUIRE(a.exit_code == 0);
    CHECK(a.output == b.output);
    std::remove(table.c_str());
    std::remove(path.c_str());
}

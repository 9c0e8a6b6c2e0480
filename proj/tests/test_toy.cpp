#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "dvp/toy.hpp"
#include "test_util.hpp"

using namespace dvp;

namespace {

std::vector<std::string> lines_of(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

ToyConfig quick(SynthKind mode, bool irt, long n, long k) {
    ToyConfig c;
    c.mode = mode;
    c.irt = irt;
    c.iterations = n;
    c.record_every = k;
    return c;
}

}  // namespace

TEST_CASE("toy config validation") {
    ToyConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.frames == 8);
    c.irt = true;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = quick(SynthKind::unimodal, false, 10, 20);
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.record_every = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("unimodal trace shape and csv") {
    const auto tr = toy_experiment(quick(SynthKind::unimodal, false, 120, 40));
    REQUIRE(tr.records.size() == 4);
    CHECK(tr.records[0].iteration == 0);
    CHECK(tr.records[3].iteration == 120);
    CHECK(tr.processed_pairwise > 0.0);
    for (const auto& r : tr.records) {
        REQUIRE(r.pairwise.size() == 8);
        for (std::size_t s = 0; s < 8; ++s) {
            CHECK(r.pairwise[s][s] == 0.0);
            for (std::size_t t = 0; t < 8; ++t) CHECK(r.pairwise[s][t] == r.pairwise[t][s]);
        }
        CHECK(r.to_processed.size() == 8);
        CHECK(r.to_mode_a.empty());
    }
    // at initialisation all outputs look alike and sit far from the targets
    double max_pair = 0.0;
    for (const auto& row : tr.records[0].pairwise)
        for (double v : row) max_pair = std::max(max_pair, v);
    CHECK(max_pair < tr.records[0].mean_to_processed());

    TempDir dir;
    tr.write_csv(dir / "toy.csv");
    const auto lines = lines_of(dir / "toy.csv");
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "iteration,mean_pairwise_output,mean_output_to_processed,mean_output_to_truth");
    CHECK(lines[1].rfind("0,", 0) == 0);
    CHECK(lines[4].rfind("120,", 0) == 0);
}

TEST_CASE("row count is N/K + 1") {
    for (auto [n, k] : {std::pair{10L, 10L}, {30L, 5L}, {12L, 4L}}) {
        const auto tr = toy_experiment(quick(SynthKind::unimodal, false, n, k));
        CHECK(static_cast<long>(tr.records.size()) == n / k + 1);
    }
}

TEST_CASE("toy runs are deterministic") {
    const auto c = quick(SynthKind::multimodal, true, 60, 20);
    TempDir dir;
    toy_experiment(c).write_csv(dir / "a.csv");
    toy_experiment(c).write_csv(dir / "b.csv");
    CHECK(read_bytes(dir / "a.csv") == read_bytes(dir / "b.csv"));
}

TEST_CASE("multimodal toy with IRT locks onto mode A early") {
    const auto tr = toy_experiment(quick(SynthKind::multimodal, true, 400, 200));
    TempDir dir;
    tr.write_csv(dir / "m.csv");
    CHECK(lines_of(dir / "m.csv")[0] ==
          "iteration,mean_pairwise_output,mean_output_to_processed,mean_output_to_truth,mean_output_to_mode_a,"
          "mean_output_to_mode_b");
    const auto& early = tr.records[1];
    REQUIRE(early.to_mode_a.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) CHECK(early.to_mode_a[t] < early.to_mode_b[t]);
}

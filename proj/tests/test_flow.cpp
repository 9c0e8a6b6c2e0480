#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "dvp/flow.hpp"
#include "dvp/metrics.hpp"
#include "dvp/synth.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dvp;

TEST_CASE("zero flow and constant frames warp to themselves") {
    std::mt19937_64 rng(1);
    const auto f = oracle::random_frame(rng, 5, 6, 3);
    CHECK(backward_warp(f, FlowField(5, 6)) == f);
    const Frame c(5, 6, 3, 0.37f);
    const auto g = backward_warp(c, FlowField(5, 6, 0.3f, 0.7f));
    for (int y = 0; y < 4; ++y)  // rows whose sample stays inside
        for (int x = 0; x < 5; ++x) CHECK(g.at(y, x, 1) == doctest::Approx(0.37f));
    CHECK_THROWS_AS(backward_warp(f, FlowField(5, 5)), ShapeError);
}

TEST_CASE("integer flow is an exact index shift") {
    Frame ramp(4, 4, 1);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) ramp.at(y, x, 0) = static_cast<float>(4 * y + x);
    const auto out = backward_warp(ramp, FlowField(4, 4, 1.0f, 0.0f));
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 3; ++x) CHECK(out.at(y, x, 0) == ramp.at(y, x + 1, 0));
        CHECK(out.at(y, 3, 0) == 0.0f);  // sample leaves the frame
    }
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const int dx = static_cast<int>(rng() % 5) - 2, dy = static_cast<int>(rng() % 5) - 2;
        const auto src = oracle::random_frame(rng, 6, 7, 3);
        const auto w = backward_warp(src, FlowField(6, 7, static_cast<float>(dx), static_cast<float>(dy)));
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 7; ++x)
                for (int c = 0; c < 3; ++c) {
                    const int sx = x + dx, sy = y + dy;
                    const bool in = sx >= 0 && sy >= 0 && sx < 7 && sy < 6;
                    CHECK(w.at(y, x, c) == (in ? src.at(sy, sx, c) : 0.0f));
                }
    }
}

TEST_CASE("warp matches the bilinear oracle and is linear in the source") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const int h = 2 + static_cast<int>(rng() % 7), w = 2 + static_cast<int>(rng() % 7);
        const auto a = oracle::random_frame(rng, h, w, 3), b = oracle::random_frame(rng, h, w, 3);
        const auto flow = oracle::random_flow(rng, h, w, 2.0);
        const auto wa = backward_warp(a, flow), wb = backward_warp(b, flow);
        const double alpha = 0.3, beta = -1.7;
        Frame mix(h, w, 3);
        for (std::size_t k = 0; k < mix.size(); ++k)
            mix.data()[k] = static_cast<float>(alpha * a.data()[k] + beta * b.data()[k]);
        const auto wm = backward_warp(mix, flow);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) {
                    bool valid = false;
                    const double want = oracle::warp_sample(a, flow, y, x, c, valid);
                    CHECK(wa.at(y, x, c) == doctest::Approx(want).epsilon(1e-6));
                    CHECK(wm.at(y, x, c) ==
                          doctest::Approx(alpha * wa.at(y, x, c) + beta * wb.at(y, x, c)).epsilon(1e-5));
                }
    }
}

TEST_CASE("occlusion examples") {
    const auto mask = occlusion_from_flows(FlowField(6, 6, 2.0f, -1.0f), FlowField(6, 6, -2.0f, 1.0f));
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) {
            const bool inside = x + 2 <= 5 && y - 1 >= 0;
            CHECK(mask.at(y, x) == (inside ? 1 : 0));
        }
    const auto out = occlusion_from_flows(FlowField(4, 4, 5.0f, 0.0f), FlowField(4, 4, -5.0f, 0.0f));
    CHECK(out.count() == 0);
    // inconsistent flows beyond the threshold
    const auto bad = occlusion_from_flows(FlowField(4, 4), FlowField(4, 4, 1.0f, 0.0f));
    CHECK(bad.count() == 0);
    CHECK_THROWS_AS(occlusion_from_flows(FlowField(4, 4), FlowField(4, 5)), ShapeError);
    CHECK_THROWS_AS(occlusion_from_flows(FlowField(4, 4), FlowField(4, 4), {-1.0, 0.5}), InvalidArgument);
}

TEST_CASE("occlusion matches the per-pixel oracle") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) {
        const auto fwd = oracle::random_flow(rng, 8, 8, 3.0);
        const auto bwd = oracle::perturbed_inverse(rng, fwd, 1.2);
        const double a = 0.01, b = 0.5;
        const auto got = occlusion_from_flows(fwd, bwd, {a, b});
        const auto want = oracle::occlusion(fwd, bwd, a, b);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) CHECK(got.at(y, x) == want[static_cast<std::size_t>(y * 8 + x)]);
    }
}

TEST_CASE("translation flows") {
    const auto still = synth_translation_flows(3, 0, 0, 5, 5);
    for (const auto& p : still.short_term) {
        CHECK(p.forward == FlowField(5, 5));
        CHECK(p.mask.count() == 25);
    }
    const auto moving = synth_translation_flows(4, 1.0, 0.0, 6, 8);
    REQUIRE(moving.short_term.size() == 3);
    REQUIRE(moving.long_term.size() == 3);
    CHECK(moving.short_term[1].forward.u(0, 0) == 1.0f);
    CHECK(moving.long_term[1].forward.u(2, 3) == 2.0f);  // frame 3 -> frame 1
    CHECK(moving.long_term[1].backward.u(2, 3) == -2.0f);
    CHECK(moving.long_term[2].forward.u(0, 0) == 3.0f);
    CHECK_THROWS_AS(synth_translation_flows(1, 0, 0, 4, 4), InvalidArgument);
}

TEST_CASE("a shifted image has zero warping error on its valid mask") {
    std::mt19937_64 rng(5);
    const auto wide = oracle::random_frame(rng, 6, 12, 3);
    const int T = 4, W = 8;
    std::vector<Frame> frames;
    for (int t = 0; t < T; ++t) {
        // frame t at x shows what frame t-1 shows at x + 1
        Frame f(6, W, 3);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c) f.at(y, x, c) = wide.at(y, x + t, c);
        frames.push_back(f);
    }
    const VideoClip clip(std::move(frames));
    const auto flows = synth_translation_flows(T, 1.0, 0.0, 6, W);
    CHECK(e_warp(clip, flows) == 0.0);
}

TEST_CASE("flo file layout is byte exact") {
    TempDir dir;
    FlowField f(2, 2);
    f.set(0, 0, 1.0f, -1.0f);
    f.set(0, 1, 0.5f, 2.0f);
    f.set(1, 0, 0.0f, 0.0f);
    f.set(1, 1, -2.0f, 1.0f);
    write_flow_file(f, dir / "a.flo");
    const std::string want = std::string("PIEH") + std::string("\x02\x00\x00\x00", 4) + std::string("\x02\x00\x00\x00", 4) +
                             std::string("\x00\x00\x80\x3f", 4) + std::string("\x00\x00\x80\xbf", 4) +
                             std::string("\x00\x00\x00\x3f", 4) + std::string("\x00\x00\x00\x40", 4) +
                             std::string(8, '\0') + std::string("\x00\x00\x00\xc0", 4) +
                             std::string("\x00\x00\x80\x3f", 4);
    const auto bytes = read_bytes(dir / "a.flo");
    CHECK(std::string(bytes.begin(), bytes.end()) == want);

    // width and height are stored in that order
    FlowField g(2, 3);
    write_flow_file(g, dir / "b.flo");
    const auto gb = read_bytes(dir / "b.flo");
    CHECK(gb[4] == 3);
    CHECK(gb[8] == 2);
    CHECK(read_flow_file(dir / "b.flo") == g);
}

TEST_CASE("flo round trip and malformed files") {
    TempDir dir;
    std::mt19937_64 rng(6);
    const auto f = oracle::random_flow(rng, 7, 5, 10.0);
    write_flow_file(f, dir / "f.flo");
    CHECK(read_flow_file(dir / "f.flo") == f);

    auto bytes = read_bytes(dir / "f.flo");
    auto dump = [&](const std::string& name, const std::vector<char>& b) {
        std::ofstream(dir / name, std::ios::binary).write(b.data(), static_cast<std::streamsize>(b.size()));
    };
    auto magic = bytes;
    magic[3] = 'X';
    dump("magic.flo", magic);
    CHECK_THROWS_AS(read_flow_file(dir / "magic.flo"), FormatError);
    dump("short.flo", std::vector<char>(bytes.begin(), bytes.end() - 4));
    CHECK_THROWS_AS(read_flow_file(dir / "short.flo"), FormatError);
    dump("header.flo", std::vector<char>(bytes.begin(), bytes.begin() + 6));
    CHECK_THROWS_AS(read_flow_file(dir / "header.flo"), FormatError);
    CHECK_THROWS_AS(read_flow_file(dir / "missing.flo"), IoError);
}

TEST_CASE("flow sets round trip through a directory") {
    TempDir dir;
    const auto set = synth_translation_flows(4, 0.5, -0.25, 5, 6);
    write_flow_set(set, dir / "flows");
    CHECK(std::filesystem::exists(dir / "flows" / "short_000002_fwd.flo"));
    CHECK(std::filesystem::exists(dir / "flows" / "long_000004_bwd.flo"));
    const auto back = read_flow_set(dir / "flows", 4);
    REQUIRE(back.short_term.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.short_term[i].forward == set.short_term[i].forward);
        CHECK(back.long_term[i].backward == set.long_term[i].backward);
        CHECK(back.long_term[i].mask == set.long_term[i].mask);
    }
    CHECK_THROWS_AS(read_flow_set(dir / "flows", 5), IoError);
    CHECK_THROWS_AS(read_flow_set(dir / "nowhere", 4), IoError);
}

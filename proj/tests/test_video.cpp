#include <cmath>
#include <random>

#include "doctest.h"
#include "dvp/video.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dvp;

TEST_CASE("frame and clip construction checks") {
    CHECK_THROWS_AS(Frame(0, 4, 3), InvalidArgument);
    CHECK_THROWS_AS(Frame(4, 4, 2), InvalidArgument);
    CHECK_THROWS_AS(Frame(2, 2, 1, std::vector<float>(3)), ShapeError);
    CHECK_THROWS_AS(VideoClip({Frame(4, 4, 3)}), InvalidArgument);
    CHECK_THROWS_AS(VideoClip({Frame(4, 4, 3), Frame(4, 4, 1)}), ShapeError);

    VideoClip c({Frame(2, 3, 1, 0.25f), Frame(2, 3, 1, 0.5f)});
    CHECK(c.length() == 2);
    CHECK(c.height() == 2);
    CHECK(c.width() == 3);
    CHECK(c[1].at(1, 2, 0) == 0.5f);
}

TEST_CASE("clamped maps into the unit interval") {
    Frame f(1, 4, 1, std::vector<float>{-0.5f, 0.3f, 1.3f, std::nanf("")});
    const auto g = f.clamped();
    CHECK(g.at(0, 0, 0) == 0.0f);
    CHECK(g.at(0, 1, 0) == 0.3f);
    CHECK(g.at(0, 2, 0) == 1.0f);
    CHECK(g.at(0, 3, 0) == 0.0f);
}

TEST_CASE("frame_distance_l1 examples") {
    std::mt19937_64 rng(1);
    const auto a = oracle::random_frame(rng, 4, 4, 3);
    CHECK(frame_distance_l1(a, a) == 0.0);
    CHECK(frame_distance_l1(Frame(3, 3, 3, 0.2f), Frame(3, 3, 3, 0.5f)) == doctest::Approx(0.3).epsilon(1e-6));
    for (int i = 0; i < 20; ++i) {
        const auto x = oracle::random_frame(rng, 4, 4, 3), y = oracle::random_frame(rng, 4, 4, 3);
        CHECK(frame_distance_l1(x, y) == doctest::Approx(oracle::frame_l1(x, y)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(frame_distance_l1(Frame(2, 2, 1), Frame(2, 3, 1)), ShapeError);
}

TEST_CASE("frame_distance_l1 is a metric") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const auto a = oracle::random_frame(rng, 5, 5, 3);
        const auto b = oracle::random_frame(rng, 5, 5, 3);
        const auto c = oracle::random_frame(rng, 5, 5, 3);
        CHECK(frame_distance_l1(a, b) == frame_distance_l1(b, a));
        CHECK(frame_distance_l1(a, c) <= frame_distance_l1(a, b) + frame_distance_l1(b, c) + 1e-12);
        CHECK(frame_distance_l1(a, b) > 0.0);
    }
}

TEST_CASE("png round trip on the 8-bit grid is exact") {
    TempDir dir;
    std::mt19937_64 rng(3);
    for (int ch : {1, 3}) {
        std::vector<Frame> frames;
        for (int t = 0; t < 3; ++t) {
            Frame f(5, 7, ch);
            for (auto& v : f.data()) v = static_cast<float>(rng() % 256) / 255.0f;
            frames.push_back(f);
        }
        const VideoClip clip(frames);
        const auto sub = dir / ("c" + std::to_string(ch));
        save_clip(clip, sub);
        CHECK(std::filesystem::exists(sub / "frame_000001.png"));
        CHECK(load_clip(sub) == clip);
    }
}

TEST_CASE("save quantises to the nearest level and clamps") {
    TempDir dir;
    Frame f(1, 3, 1, std::vector<float>{0.5001f, 1.3f, -0.2f});
    save_frame(f, dir / "q.png");
    const auto g = load_frame(dir / "q.png");
    CHECK(std::fabs(g.at(0, 0, 0) - 0.5001f) <= 1.0f / 510.0f + 1e-7f);
    CHECK(g.at(0, 1, 0) == 1.0f);
    CHECK(g.at(0, 2, 0) == 0.0f);
}

TEST_CASE("load_clip ordering and failures") {
    TempDir dir;
    for (int i = 9; i >= 0; --i) {
        char name[16];
        std::snprintf(name, sizeof name, "%03d.png", i);
        save_frame(Frame(4, 4, 1, static_cast<float>(i) / 255.0f), dir / name);
    }
    const auto clip = load_clip(dir.path());
    REQUIRE(clip.length() == 10);
    for (int t = 0; t < 10; ++t) CHECK(clip[t].at(0, 0, 0) == static_cast<float>(t) / 255.0f);

    SUBCASE("identical frames") {
        TempDir d;
        for (int i = 0; i < 8; ++i) save_frame(Frame(64, 64, 1, 0.4f), d / ("f" + std::to_string(i) + ".png"));
        const auto c = load_clip(d.path());
        CHECK(c.length() == 8);
        for (int t = 1; t < 8; ++t) CHECK(c[t] == c[0]);
    }
    SUBCASE("missing directory") { CHECK_THROWS_AS(load_clip(dir / "nope"), IoError); }
    SUBCASE("single frame") {
        TempDir d;
        save_frame(Frame(4, 4, 1), d / "a.png");
        CHECK_THROWS_AS(load_clip(d.path()), InvalidArgument);
    }
    SUBCASE("dimension mismatch") {
        TempDir d;
        save_frame(Frame(64, 64, 1), d / "a.png");
        save_frame(Frame(32, 32, 1), d / "b.png");
        CHECK_THROWS_AS(load_clip(d.path()), ShapeError);
    }
    SUBCASE("undecodable file") {
        TempDir d;
        save_frame(Frame(4, 4, 1), d / "a.png");
        std::ofstream(d / "b.png") << "not a png";
        CHECK_THROWS_AS(load_clip(d.path()), IoError);
    }
}

#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "dvp/generator.hpp"
#include "dvp/loss.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dvp;

namespace {

GeneratorConfig small_cfg(int heads = 1) {
    GeneratorConfig c;
    c.base_width = 4;
    c.depth = 2;
    c.out_heads = heads;
    c.seed = 7;
    return c;
}

}  // namespace

TEST_CASE("config validation") {
    GeneratorConfig c;
    CHECK_NOTHROW(c.validate());
    c.in_channels = 2;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.out_heads = 3;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.base_width = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = {};
    c.out_heads = 2;
    CHECK(c.out_channels() == 6);
    CHECK(c.size_multiple() == 16);
    CHECK(c.bottleneck_width() == 256);
}

TEST_CASE("parameter count matches an independent per-layer tally") {
    for (int heads : {1, 2})
        for (int depth : {0, 1, 2, 4})
            for (int in : {1, 3}) {
                GeneratorConfig c;
                c.in_channels = in;
                c.out_heads = heads;
                c.depth = depth;
                const auto p = init_generator(c);
                CHECK(static_cast<long>(p.parameter_count()) == oracle::generator_parameter_count(in, heads, 32, depth));
            }
    GeneratorConfig c;
    c.out_heads = 2;
    CHECK(init_generator(c).parameter_count() == static_cast<std::size_t>(oracle::generator_parameter_count(3, 2, 32, 4)));
}

TEST_CASE("init is deterministic, seed dependent, with zero biases") {
    auto c = small_cfg();
    const auto a = init_generator(c), b = init_generator(c);
    CHECK(a == b);
    c.seed = 8;
    CHECK_FALSE(init_generator(c) == a);
    for (const auto& l : a.layers)
        for (float v : l.bias) CHECK(v == 0.0f);
    CHECK(a.all_finite());
}

TEST_CASE("zero parameters give zero output") {
    const auto p = zero_generator(small_cfg(2));
    std::mt19937_64 rng(1);
    const auto out = forward(p, oracle::random_frame(rng, 12, 10, 3));
    for (float v : out.main.data()) CHECK(v == 0.0f);
    REQUIRE(out.minor);
    for (float v : out.minor->data()) CHECK(v == 0.0f);
}

TEST_CASE("forward keeps spatial size, pads when needed, and is pure") {
    const auto p = init_generator(small_cfg(2));
    std::mt19937_64 rng(2);
    for (auto [h, w] : {std::pair{8, 8}, {5, 9}, {1, 1}, {13, 4}}) {
        const auto f = oracle::random_frame(rng, h, w, 3);
        const auto a = forward(p, f), b = forward(p, f);
        CHECK(a.main.height() == h);
        CHECK(a.main.width() == w);
        CHECK(a.main == b.main);
        CHECK(*a.minor == *b.minor);
    }
    CHECK_THROWS_AS(forward(p, Frame(8, 8, 1)), ShapeError);
}

TEST_CASE("64x64 input reaches a 4x4 bottleneck") {
    GeneratorConfig c;
    const auto p = init_generator(c);
    std::mt19937_64 rng(3);
    const auto in = frame_to_tensor<float>(oracle::random_frame(rng, 64, 64, 3));
    ForwardCache<float> cache;
    const auto out = forward_tensor(p, in, &cache);
    const auto mid = static_cast<std::size_t>(2 * c.depth);
    REQUIRE(p.layers[mid].name == "mid.conv1");
    CHECK(cache.layer_inputs[mid].height() == 4);
    CHECK(cache.layer_inputs[mid].width() == 4);
    CHECK(out.height() == 64);
    CHECK(out.channels() == 3);
}

TEST_CASE("reflect padding and crop invert each other") {
    std::mt19937_64 rng(4);
    Tensor<float> t(2, 5, 7);
    for (auto& v : t.span()) v = static_cast<float>(rng() % 100);
    const auto pad = padding_for(5, 7, 4);
    CHECK((5 + pad.top + pad.bottom) % 4 == 0);
    CHECK((7 + pad.left + pad.right) % 4 == 0);
    const auto padded = reflect_pad(t, pad);
    CHECK(crop(padded, pad) == t);
    // reflection without edge repeat
    if (pad.left > 0) CHECK(padded.at(0, pad.top, pad.left - 1) == t.at(0, 0, 1));
}

TEST_CASE("constant loss gives zero gradient") {
    const auto p = init_generator(small_cfg());
    std::mt19937_64 rng(5);
    const auto lg = loss_gradient(p, oracle::random_frame(rng, 8, 8, 3),
                                  [](const GeneratorOutput&, GeneratorOutput&) { return 3.0; });
    CHECK(lg.loss == 3.0);
    for (const auto& l : lg.gradient.layers) {
        for (float v : l.weight) CHECK(v == 0.0f);
        for (float v : l.bias) CHECK(v == 0.0f);
    }
}

TEST_CASE("sum of outputs differentiates to H*W in each head bias") {
    const auto p = init_generator(small_cfg(2));
    std::mt19937_64 rng(6);
    const int H = 6, W = 10;  // padded internally, gradient must still count only the cropped pixels
    const auto lg = loss_gradient(p, oracle::random_frame(rng, H, W, 3), [](const GeneratorOutput& o, GeneratorOutput& g) {
        double s = 0.0;
        for (float v : o.main.data()) s += v;
        for (float v : o.minor->data()) s += v;
        for (auto& v : g.main.data()) v = 1.0f;
        for (auto& v : g.minor->data()) v = 1.0f;
        return s;
    });
    for (float v : lg.gradient.layers.back().bias) CHECK(v == doctest::Approx(H * W));
}

TEST_CASE("non-finite loss is reported") {
    const auto p = init_generator(small_cfg());
    CHECK_THROWS_AS(loss_gradient(p, Frame(4, 4, 3), [](const GeneratorOutput&, GeneratorOutput&) { return std::nan(""); }),
                    NonFiniteLoss);
}

TEST_CASE("tiny conv net with L1 loss matches finite differences") {
    // A single 3x3 convolution on a 3x3 image: the generator with depth 0 has
    // more layers, so this one is checked at the kernel level.
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 0.5);
    const ConvShape s{1, 1, 3};
    Tensor<double> in(1, 3, 3), target(1, 3, 3);
    for (auto& v : in.span()) v = n(rng);
    for (auto& v : target.span()) v = n(rng) + 3.0;  // keeps residuals far from the kink
    std::vector<double> w(9), b(1, 0.1);
    for (auto& v : w) v = n(rng);
    auto loss = [&](const std::vector<double>& wt, const std::vector<double>& bs, Tensor<double>* g) {
        Tensor<double> out;
        kernels::conv2d_forward<double>(in, wt, bs, s, out);
        double l = 0.0;
        if (g) *g = Tensor<double>(1, 3, 3);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double r = out.data()[i] - target.data()[i];
            l += std::fabs(r) / 9.0;
            if (g) g->data()[i] = (r > 0 ? 1.0 : -1.0) / 9.0;
        }
        return l;
    };
    Tensor<double> g;
    loss(w, b, &g);
    std::vector<double> gw(9), gb(1);
    kernels::conv2d_backward<double>(in, w, s, g, nullptr, gw, gb);
    const double h = 1e-4;
    for (std::size_t i = 0; i < 10; ++i) {
        auto wp = w, wm = w, bp = b, bm = b;
        if (i < 9) {
            wp[i] += h;
            wm[i] -= h;
        } else {
            bp[0] += h;
            bm[0] -= h;
        }
        const double numeric = (loss(wp, bp, nullptr) - loss(wm, bm, nullptr)) / (2 * h);
        CHECK(relative_error(i < 9 ? gw[i] : gb[0], numeric) < 1e-3);
    }
}

TEST_CASE("small generators pass the finite-difference gradient check") {
    for (auto [base, depth, heads] : {std::tuple{8, 1, 1}, {4, 2, 2}, {6, 0, 1}}) {
        GeneratorConfig c;
        c.base_width = base;
        c.depth = depth;
        c.out_heads = heads;
        c.seed = 3;
        const auto r = generator_gradcheck(c, 8, 8, 40, 99);
        CHECK(r.parameters <= 5000);
        CHECK(r.worst_relative_error < 1e-3);
    }
}

TEST_CASE("float and double networks agree") {
    const auto pf = init_generator<float>(small_cfg());
    const auto pd = pf.cast<double>();
    std::mt19937_64 rng(8);
    const auto f = oracle::random_frame(rng, 8, 8, 3);
    const auto of = forward_tensor(pf, frame_to_tensor<float>(f));
    const auto od = forward_tensor(pd, frame_to_tensor<double>(f));
    for (std::size_t i = 0; i < of.size(); ++i) CHECK(of.data()[i] == doctest::Approx(od.data()[i]).epsilon(1e-4));
}

TEST_CASE("checkpoint round trip is bit exact") {
    TempDir dir;
    const auto p = init_generator(small_cfg(2));
    save_checkpoint(p, dir / "ck");
    CHECK(load_checkpoint(dir / "ck") == p);

    SUBCASE("bad magic") {
        auto bytes = read_bytes(dir / "ck");
        bytes[0] = 'X';
        std::ofstream(dir / "bad", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_AS(load_checkpoint(dir / "bad"), FormatError);
    }
    SUBCASE("truncated") {
        auto bytes = read_bytes(dir / "ck");
        std::ofstream(dir / "short", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
        CHECK_THROWS_AS(load_checkpoint(dir / "short"), FormatError);
    }
    SUBCASE("trailing bytes") {
        auto bytes = read_bytes(dir / "ck");
        bytes.push_back('z');
        std::ofstream(dir / "long", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        CHECK_THROWS_AS(load_checkpoint(dir / "long"), FormatError);
    }
    SUBCASE("missing") { CHECK_THROWS_AS(load_checkpoint(dir / "none"), IoError); }
}

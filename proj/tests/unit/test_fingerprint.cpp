#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "prnu/fingerprint.hpp"
#include "prnu/pattern_io.hpp"
#include "prnu/synth.hpp"
#include "test_util.hpp"

using namespace prnu;

namespace {

// K[p] = sum_i w_i[p] I_i[p] / sum_i I_i[p]^2, pixel by pixel.
RealPlane mle_oracle(const std::vector<Image>& train, const DenoiseParams& dp)
{
    std::vector<RealPlane> w;
    for (const Image& img : train) {
        w.push_back(residual(img, dp).values);
    }
    const std::size_t h = train[0].height();
    const std::size_t wd = train[0].width();
    RealPlane k(h, wd);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < wd; ++c) {
            double num = 0.0;
            double den = 0.0;
            for (std::size_t i = 0; i < train.size(); ++i) {
                num += w[i](r, c) * train[i](r, c);
                den += train[i](r, c) * train[i](r, c);
            }
            k(r, c) = den == 0.0 ? 0.0 : num / den;
        }
    }
    return k;
}

DenoiseParams small_dp()
{
    DenoiseParams dp;
    dp.levels = 3;
    return dp;
}

} // namespace

TEST(Mle, MatchesTripleLoopOracle)
{
    const DenoiseParams dp = small_dp();
    std::vector<Image> train;
    for (std::uint64_t s = 0; s < 3; ++s) {
        train.push_back(testutil::random_8bit(8, 8, 70 + s));
        const std::vector<Image> subset(train.begin(), train.end());
        const RealPlane k = estimate_raw_reference(subset, dp);
        EXPECT_LT(max_abs_diff(k, mle_oracle(subset, dp)), 1e-12) << "N=" << subset.size();
    }
}

TEST(Mle, SingleImageCollapsesToRatio)
{
    const DenoiseParams dp = small_dp();
    RealPlane px = testutil::random_8bit(8, 8, 3).plane();
    px(2, 5) = 0.0;
    const Image img(px);
    const RealPlane k = estimate_raw_reference(std::vector<Image>{img}, dp);
    const RealPlane w = residual(img, dp).values;
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t c = 0; c < 8; ++c) {
            if (img(r, c) > 0) {
                EXPECT_NEAR(k(r, c), w(r, c) / img(r, c), 1e-15);
            } else {
                EXPECT_EQ(k(r, c), 0.0);
            }
        }
    }
}

TEST(Mle, DuplicatedImageEqualsSingle)
{
    const DenoiseParams dp = small_dp();
    const Image img = testutil::random_8bit(8, 8, 4);
    const RealPlane one = estimate_raw_reference(std::vector<Image>{img}, dp);
    const RealPlane two = estimate_raw_reference(std::vector<Image>{img, img}, dp);
    EXPECT_LT(max_abs_diff(one, two), 1e-15);
}

TEST(Mle, DarkPixelsMapToZero)
{
    const Image black(16, 16, 0.0);
    EXPECT_EQ(max_abs(estimate_raw_reference(std::vector<Image>{black, black}, {})), 0.0);
}

TEST(Mle, ParallelMatchesSerial)
{
    std::vector<Image> train;
    for (std::uint64_t s = 0; s < 6; ++s) train.push_back(testutil::random_8bit(32, 48, s));
    EXPECT_EQ(estimate_raw_reference(train, {}, Postprocess::reference_pattern, 1),
              estimate_raw_reference(train, {}, Postprocess::reference_pattern, 4));
}

TEST(EstimateReference, Errors)
{
    EXPECT_THROW(estimate_reference(std::vector<Image>{}, {}, "x"), InvalidArgument);
    EXPECT_THROW(estimate_reference(std::vector<Image>{Image(16, 16, 1.0), Image(16, 32, 1.0)}, {}, "x"),
                 DimensionMismatch);
}

TEST(EstimateReference, PostprocessedRowAndColumnMeansVanish)
{
    std::vector<Image> train;
    for (std::uint64_t s = 0; s < 4; ++s) train.push_back(testutil::random_8bit(40, 48, 10 + s));
    for (Postprocess mode : {Postprocess::reference_pattern, Postprocess::per_residual}) {
        const ReferencePattern k = estimate_reference(train, {}, "cam", mode);
        EXPECT_TRUE(k.postprocessed);
        EXPECT_EQ(k.train_count, 4u);
        EXPECT_TRUE(all_finite(k.values));
        for (std::size_t r = 0; r < k.values.height(); ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < k.values.width(); ++c) s += k.values(r, c);
            EXPECT_NEAR(s / static_cast<double>(k.values.width()), 0.0, 1e-9);
        }
        for (std::size_t c = 0; c < k.values.width(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < k.values.height(); ++r) s += k.values(r, c);
            EXPECT_NEAR(s / static_cast<double>(k.values.height()), 0.0, 1e-9);
        }
    }
}

TEST(ZeroMean, HandOracles)
{
    RealPlane seq(3, 4);
    for (std::size_t i = 0; i < 12; ++i) seq.data()[i] = static_cast<double>(i + 1);
    // Column means are 5..8; after removing them every row is constant
    // (-4, 0, 4) and the row pass clears it.
    EXPECT_LT(max_abs(zero_mean(seq)), 1e-12);

    RealPlane spike(3, 4, 0.0);
    spike(0, 0) = 1.0;
    // Columns: [2/3, -1/3, -1/3] in column 0. Rows then lose 1/6, -1/12, -1/12.
    const double expect[3][4] = {{0.5, -1.0 / 6, -1.0 / 6, -1.0 / 6},
                                 {-0.25, 1.0 / 12, 1.0 / 12, 1.0 / 12},
                                 {-0.25, 1.0 / 12, 1.0 / 12, 1.0 / 12}};
    const RealPlane z = zero_mean(spike);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(z(r, c), expect[r][c], 1e-15);
}

TEST(ZeroMean, ConstantAndIdempotent)
{
    EXPECT_LT(max_abs(zero_mean(RealPlane(5, 6, 3.5))), 1e-12);
    const RealPlane once = zero_mean(testutil::random_plane(9, 11, 2, -1, 1));
    EXPECT_LT(max_abs_diff(zero_mean(once), once), 1e-12);
}

TEST(WienerDft, KeepsWhiteNoiseAndSuppressesPeriodicPeaks)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    RealPlane white(64, 64);
    for (double& v : white) v = n(rng);
    const RealPlane cleaned = wiener_dft(zero_mean(white));
    EXPECT_GT(ncc(cleaned, white), 0.9);

    RealPlane periodic = white;
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) periodic(r, c) += 3.0 * std::cos(2.0 * 3.14159265358979 * c / 8.0);
    const RealPlane cleaned_p = wiener_dft(zero_mean(periodic));
    // The added stripe pattern is mostly removed again.
    EXPECT_GT(ncc(cleaned_p, white), 0.8);
    EXPECT_LT(ncc(periodic, white), 0.5);
}

TEST(Ncc, SelfAndNegation)
{
    const RealPlane x = testutil::random_plane(12, 9, 3, -1, 1);
    RealPlane neg = x;
    for (double& v : neg) v = -v;
    EXPECT_NEAR(ncc(x, x), 1.0, 1e-9);
    EXPECT_NEAR(ncc(x, neg), -1.0, 1e-9);
}

TEST(Ncc, TwoByTwoHandOracle)
{
    RealPlane x(2, 2, 0.0);
    x(0, 0) = 1.0;
    RealPlane y(2, 2, 0.0);
    y(1, 0) = 1.0; // x rotated by 90 degrees counter-clockwise
    // Mean-subtracted: x' = (3,-1,-1,-1)/4, y' = (-1,-1,3,-1)/4.
    // <x',y'> = (-3 + 1 - 3 + 1)/16 = -1/4, |x'|^2 = |y'|^2 = 12/16.
    EXPECT_NEAR(ncc(x, y), -1.0 / 3.0, 1e-12);
}

TEST(Ncc, ZeroNormAndSymmetry)
{
    const RealPlane flat(4, 4, 2.0);
    const RealPlane x = testutil::random_plane(4, 4, 8);
    EXPECT_EQ(ncc(flat, x), 0.0);
    const RealPlane y = testutil::random_plane(4, 4, 9);
    EXPECT_NEAR(ncc(x, y), ncc(y, x), 1e-12);
    EXPECT_THROW(ncc(x, RealPlane(4, 5)), DimensionMismatch);
}

TEST(Ncc, ScoresWithinUnitInterval)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const double v = ncc(testutil::random_plane(6, 6, s, -1, 1), testutil::random_plane(6, 6, s + 500, -1, 1));
        EXPECT_LE(std::abs(v), 1.0);
    }
}

namespace {

ReferencePattern pattern(const std::string& id, const RealPlane& v)
{
    return ReferencePattern{v, id, 1, true};
}

} // namespace

TEST(Gallery, Contract)
{
    SensorGallery g;
    g.add(pattern("a", RealPlane(4, 4, 1.0)));
    EXPECT_THROW(g.add(pattern("a", RealPlane(4, 4, 1.0))), InvalidArgument);
    EXPECT_THROW(g.add(pattern("b", RealPlane(4, 5, 1.0))), DimensionMismatch);
    EXPECT_EQ(g.size(), 1u);
    EXPECT_NE(g.find("a"), nullptr);
    EXPECT_EQ(g.find("z"), nullptr);
    EXPECT_THROW(g.at("z"), InvalidArgument);
}

TEST(Classify, SingleSensorAlwaysPredicted)
{
    SensorGallery g;
    g.add(pattern("only", testutil::random_plane(32, 32, 1, -1, 1)));
    const auto c = classify(testutil::random_8bit(32, 32, 2), g, {});
    EXPECT_EQ(c.predicted, "only");
    ASSERT_EQ(c.scores.size(), 1u);
}

TEST(Classify, ScoresCoverGalleryInOrder)
{
    SensorGallery g;
    for (const char* id : {"c", "a", "b"}) g.add(pattern(id, testutil::random_plane(32, 32, id[0], -1, 1)));
    const auto c = classify(testutil::random_8bit(32, 32, 3), g, {});
    ASSERT_EQ(c.scores.size(), 3u);
    EXPECT_EQ(c.scores[0].sensor_id, "c");
    EXPECT_EQ(c.scores[1].sensor_id, "a");
    EXPECT_EQ(c.scores[2].sensor_id, "b");
    std::set<std::string> seen;
    for (const auto& s : c.scores) seen.insert(s.sensor_id);
    EXPECT_EQ(seen.size(), 3u);
}

TEST(Classify, TiesGoToFirstAndErrors)
{
    const RealPlane k = testutil::random_plane(16, 16, 4, -1, 1);
    SensorGallery g;
    g.add(pattern("first", k));
    g.add(pattern("second", k));
    EXPECT_EQ(classify(testutil::random_8bit(16, 16, 5), g, {}).predicted, "first");
    EXPECT_THROW(classify(testutil::random_8bit(16, 16, 5), SensorGallery{}, {}), InvalidArgument);
    EXPECT_THROW(classify(testutil::random_8bit(16, 32, 5), g, {}), DimensionMismatch);
}

TEST(Classify, PositiveScaleInvariance)
{
    SensorGallery g;
    for (int i = 0; i < 4; ++i) g.add(pattern("s" + std::to_string(i), testutil::random_plane(24, 24, 40 + i, -1, 1)));
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int t = 0; t < 100; ++t) {
        NoiseResidual w{testutil::random_plane(24, 24, 1000 + t, -5, 5)};
        NoiseResidual scaled = w;
        const double a = scale(rng);
        for (double& v : scaled.values) v *= a;
        EXPECT_EQ(classify_residual(w, g).predicted, classify_residual(scaled, g).predicted);
    }
}

TEST(Classify, SyntheticEndToEnd)
{
    const Dims d{120, 160};
    std::vector<SyntheticSensor> sensors;
    SensorGallery g;
    for (int s = 0; s < 3; ++s) {
        sensors.push_back(make_sensor(std::string(1, static_cast<char>('A' + s)), d, 300 + s));
        const auto scenes = make_scene_bank(30, d, 900 + s);
        std::vector<Image> train;
        for (std::size_t i = 0; i < scenes.size(); ++i) train.push_back(capture(sensors[s], scenes[i], i));
        g.add(estimate_reference(train, {}, sensors[s].sensor_id));
    }
    const auto probe_scene = make_scene_bank(1, d, 4242).front();
    EXPECT_EQ(classify(capture(sensors[0], probe_scene, 77), g, {}).predicted, "A");
}

TEST(Recovery, FiftyFiveCapturesRecoverInjectedField)
{
    const Dims d{120, 160};
    const auto sensor = make_sensor("s", d, 12345);
    const auto scenes = make_scene_bank(55, d, 54321);
    std::vector<Image> train;
    for (std::size_t i = 0; i < scenes.size(); ++i) train.push_back(capture(sensor, scenes[i], i));
    const auto k = estimate_reference(train, {}, "s");
    EXPECT_GT(ncc(k.values, sensor.prnu_field), 0.5);
}

TEST(PatternIo, RoundTripAndLayout)
{
    const auto dir = testutil::scratch_dir("pattern_io");
    RealPlane v = testutil::random_plane(3, 5, 6, -0.1, 0.1);
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
    const ReferencePattern p{v, "cam-1", 55, true};
    save_pattern(dir / "cam-1.prnu", p);
    const auto bytes = detail::read_file_bytes(dir / "cam-1.prnu");
    ASSERT_EQ(bytes.size(), 5 + 4 * 3 + 1 + 1 + 5 + 4 * 15u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "PRNU1");
    EXPECT_EQ(bytes[5], 3);  // height, little endian
    EXPECT_EQ(bytes[9], 5);  // width
    EXPECT_EQ(bytes[13], 55);
    EXPECT_EQ(bytes[17], 1);
    EXPECT_EQ(bytes[18], 5);
    EXPECT_EQ(load_pattern(dir / "cam-1.prnu"), p);

    save_pattern(dir / "again.prnu", load_pattern(dir / "cam-1.prnu"));
    EXPECT_EQ(detail::read_file_bytes(dir / "again.prnu"), bytes);
}

TEST(PatternIo, RejectsCorruptFiles)
{
    const ReferencePattern p{RealPlane(2, 2, 0.5), "x", 1, false};
    auto bytes = encode_pattern(p);
    auto bad = bytes;
    bad[0] = 'Q';
    EXPECT_THROW(decode_pattern(bad), FormatError);
    auto cut = bytes;
    cut.pop_back();
    EXPECT_THROW(decode_pattern(cut), FormatError);
    auto extra = bytes;
    extra.push_back(0);
    EXPECT_THROW(decode_pattern(extra), FormatError);
}

TEST(PatternIo, GalleryDirectory)
{
    const auto dir = testutil::scratch_dir("gallery_io");
    SensorGallery g;
    g.add(ReferencePattern{RealPlane(2, 3, 0.25), "b", 2, true});
    g.add(ReferencePattern{RealPlane(2, 3, -0.5), "a", 3, true});
    save_gallery(dir, g);
    EXPECT_TRUE(std::filesystem::exists(dir / "a.prnu"));
    const SensorGallery back = load_gallery(dir);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.patterns()[0].sensor_id, "a");
    EXPECT_THROW(load_gallery(dir / "missing"), IoError);
    EXPECT_THROW(load_gallery(testutil::scratch_dir("gallery_empty")), IoError);
}

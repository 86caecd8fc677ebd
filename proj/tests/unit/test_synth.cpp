#include <gtest/gtest.h>

#include <cmath>

#include "prnu/fingerprint.hpp"
#include "prnu/rng.hpp"
#include "prnu/synth.hpp"
#include "test_util.hpp"

using namespace prnu;

TEST(Rng, StreamsAreIndependentAndStable)
{
    EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
    EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
}

TEST(Synth, SensorValidation)
{
    EXPECT_THROW(make_sensor("s", {8, 8}, 1, 0.0), InvalidArgument);
    EXPECT_THROW(make_sensor("s", {8, 8}, 1, 0.02, -1.0), InvalidArgument);
    EXPECT_THROW(make_sensor("s", {0, 8}, 1), InvalidArgument);
}

TEST(Synth, FieldHasRequestedStrength)
{
    const auto s = make_sensor("s", {120, 160}, 7, 0.02);
    EXPECT_NEAR(std::sqrt(variance(s.prnu_field)), 0.02, 0.001);
    EXPECT_NEAR(mean(s.prnu_field), 0.0, 0.001);
}

TEST(Synth, DegenerateSensorReproducesScene)
{
    const auto scene = quantized(make_scene_bank(1, {40, 48}, 3).front());
    const auto s = make_sensor("s", scene.dims(), 1, 1e-12, 0.0);
    EXPECT_EQ(capture(s, scene, 0), scene);
}

TEST(Synth, ZeroSceneGivesZeroCaptureWithoutNoise)
{
    const Image black(32, 32, 0.0);
    const auto s = make_sensor("s", black.dims(), 2, 0.5, 0.0);
    EXPECT_EQ(capture(s, black, 4), black);
}

TEST(Synth, CaptureIsDeterministicAndQuantized)
{
    const auto scene = make_scene_bank(1, {48, 64}, 9).front();
    const auto s = make_sensor("s", scene.dims(), 3);
    const Image a = capture(s, scene, 11);
    EXPECT_EQ(a, capture(s, scene, 11));
    EXPECT_NE(a, capture(s, scene, 12));
    for (double v : a.values()) {
        EXPECT_EQ(v, std::round(v));
    }
    EXPECT_THROW(capture(s, Image(10, 10, 1.0), 0), DimensionMismatch);
}

TEST(Synth, SceneBankContract)
{
    const Dims d{120, 160};
    const auto one = make_scene_bank(1, d, 42);
    ASSERT_EQ(one.size(), 1u);
    const double m = mean(one.front().plane());
    EXPECT_GE(m, 80.0);
    EXPECT_LE(m, 180.0);
    const auto bank = make_scene_bank(20, d, 5);
    for (const Image& s : bank) {
        const double mm = mean(s.plane());
        EXPECT_GE(mm, 80.0);
        EXPECT_LE(mm, 180.0);
    }
    EXPECT_EQ(make_scene_bank(3, d, 5), std::vector<Image>(bank.begin(), bank.begin() + 3));
    EXPECT_NE(make_scene_bank(1, d, 6).front(), bank.front());
    EXPECT_NE(bank[0], bank[1]);
    EXPECT_THROW(make_scene_bank(0, d, 1), InvalidArgument);
}

TEST(Synth, IndependentFieldsAreNearlyOrthogonal)
{
    const Dims d{120, 160};
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto a = make_sensor("a", d, derive_seed(s, "x", 0));
        const auto b = make_sensor("b", d, derive_seed(s, "x", 1));
        EXPECT_LT(std::abs(ncc(a.prnu_field, b.prnu_field)), 0.05);
    }
}

TEST(Synth, FieldFileRoundTrip)
{
    const auto dir = testutil::scratch_dir("synk");
    const auto s = make_sensor("cam", {6, 9}, 3);
    save_sensor_field(dir / "cam.synk", s);
    const auto back = load_sensor_field(dir / "cam.synk");
    EXPECT_EQ(back.sensor_id, "cam");
    EXPECT_LT(max_abs_diff(back.prnu_field, s.prnu_field), 1e-8);
    // Distinct magic: not accepted as a reference pattern.
    EXPECT_THROW(decode_pattern(detail::read_file_bytes(dir / "cam.synk")), FormatError);
}

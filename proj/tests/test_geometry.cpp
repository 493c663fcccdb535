#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vlp/geometry.hpp"
#include "vlp/rng.hpp"

using namespace vlp;

namespace {

CameraIntrinsics table1_intrinsics(double pitch = 0.01) {
    CameraIntrinsics intr;
    intr.focal_length_mm = 3.0;
    intr.pixel_pitch_u_mm = pitch;
    intr.pixel_pitch_v_mm = pitch;
    intr.principal_point = {400.0, 300.0};
    intr.resolution_u = 800;
    intr.resolution_v = 600;
    return intr;
}

}  // namespace

TEST_CASE("pixel_to_image at the conversion center is the origin") {
    const auto intr = table1_intrinsics();
    const ImagePoint p = pixel_to_image({400.0, 300.0}, intr, {400.0, 300.0});
    CHECK(p.x == 0.0);
    CHECK(p.y == 0.0);
}

TEST_CASE("pixel_to_image converts by pixel pitch per axis") {
    const auto intr = table1_intrinsics(0.01);
    const ImagePoint p = pixel_to_image({410.0, 290.0}, intr, {400.0, 300.0});
    CHECK_THAT(p.x, Catch::Matchers::WithinAbs(0.1, 1e-15));
    CHECK_THAT(p.y, Catch::Matchers::WithinAbs(-0.1, 1e-15));
}

TEST_CASE("pixel_to_image of the sensor corner about the nominal midpoint") {
    // 800x600 sensor, so the nominal center is (400, 300).
    const auto intr = table1_intrinsics(0.01);
    const ImagePoint p = pixel_to_image({0.0, 0.0}, intr, intr.principal_point);
    CHECK_THAT(p.x, Catch::Matchers::WithinAbs(-4.0, 1e-15));
    CHECK_THAT(p.y, Catch::Matchers::WithinAbs(-3.0, 1e-15));
}

TEST_CASE("pixel_to_image rejects non-finite input") {
    const auto intr = table1_intrinsics();
    CHECK_THROWS_AS(pixel_to_image({std::nan(""), 0.0}, intr, {400.0, 300.0}), InvalidInput);
}

TEST_CASE("image_to_pixel inverts the conversion") {
    const auto intr = table1_intrinsics(0.01);
    const PixelPoint at_center = image_to_pixel({0.0, 0.0}, intr, {400.0, 300.0});
    CHECK(at_center.u == 400.0);
    CHECK(at_center.v == 300.0);

    const PixelPoint p = image_to_pixel({0.1, -0.1}, intr, {400.0, 300.0});
    CHECK_THAT(p.u, Catch::Matchers::WithinAbs(410.0, 1e-12));
    CHECK_THAT(p.v, Catch::Matchers::WithinAbs(290.0, 1e-12));
}

TEST_CASE("pixel<->image round trip stays below 1e-9 px") {
    const auto intr = table1_intrinsics(0.003);
    Rng rng(42);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const PixelPoint p{rng.uniform(-100.0, 900.0), rng.uniform(-100.0, 700.0)};
        const PixelPoint c{rng.uniform(300.0, 500.0), rng.uniform(200.0, 400.0)};
        const PixelPoint back = image_to_pixel(pixel_to_image(p, intr, c), intr, c);
        worst = std::max({worst, std::abs(back.u - p.u), std::abs(back.v - p.v)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("rotation_matrix basics") {
    CHECK(rotation_matrix(0.0, 0.0, 0.0).m.isIdentity(0.0));

    const Eigen::Matrix3d r = rotation_matrix(0.0, 0.0, std::numbers::pi / 2).m;
    Eigen::Matrix3d expect;
    expect << 0, -1, 0,
              1, 0, 0,
              0, 0, 1;
    CHECK((r - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rotation_matrix stays orthonormal with det +1") {
    Rng rng(7);
    for (int i = 0; i < 10000; ++i) {
        const auto r = rotation_matrix(rng.uniform(-10, 10), rng.uniform(-10, 10),
                                       rng.uniform(-10, 10));
        CHECK((r.m.transpose() * r.m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
              1e-12);
        CHECK(std::abs(r.m.determinant() - 1.0) < 1e-12);
    }
}

TEST_CASE("rotation_matrix at alpha=beta=0 equals the plain yaw matrix") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const double g = rng.uniform(-4.0, 4.0);
        const double a = std::cos(g), b = std::sin(g);
        Eigen::Matrix3d expect;
        expect << a, -b, 0,
                  b, a, 0,
                  0, 0, 1;
        CHECK((rotation_matrix(0.0, 0.0, g).m - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("world_to_camera translation and rotation") {
    const Pose pose{{0.0, 0.0, 300.0}, 0.0};
    SECTION("point at the camera maps to the origin") {
        const CameraPoint c = world_to_camera({0.0, 0.0, 300.0}, pose);
        CHECK(c.vec().norm() == 0.0);
    }
    SECTION("identity rotation is a pure translation") {
        const CameraPoint c = world_to_camera({100.0, 0.0, 1600.0}, pose);
        CHECK_THAT(c.x, Catch::Matchers::WithinAbs(100.0, 1e-12));
        CHECK_THAT(c.y, Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK_THAT(c.z, Catch::Matchers::WithinAbs(1300.0, 1e-12));
    }
    SECTION("quarter-turn yaw swaps plan axes") {
        const Pose quarter{{0.0, 0.0, 0.0}, std::numbers::pi / 2};
        const CameraPoint c = world_to_camera({100.0, 0.0, 0.0}, quarter);
        CHECK_THAT(c.x, Catch::Matchers::WithinAbs(0.0, 1e-12));
        CHECK_THAT(c.y, Catch::Matchers::WithinAbs(100.0, 1e-12));
        CHECK_THAT(c.z, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("project maps an overhead LED to the conversion center") {
    const auto intr = table1_intrinsics(0.003);
    const PixelPoint true_center{402.0, 297.0};
    const Pose pose{{137.0, -245.0, 300.0}, 1.234};
    const PixelPoint px = project({137.0, -245.0, 1600.0}, pose, intr, true_center);
    CHECK_THAT(px.u, Catch::Matchers::WithinAbs(true_center.u, 1e-9));
    CHECK_THAT(px.v, Catch::Matchers::WithinAbs(true_center.v, 1e-9));
}

TEST_CASE("project reproduces the -f/H scaling") {
    // f = 3 mm, H = 1300 mm, plan offset (100, 0): image x = -3/1300 * 100.
    const auto intr = table1_intrinsics(0.003);
    const Pose pose{{0.0, 0.0, 300.0}, 0.0};
    const PixelPoint px = project({100.0, 0.0, 1600.0}, pose, intr, intr.principal_point);
    const ImagePoint img = pixel_to_image(px, intr, intr.principal_point);
    CHECK_THAT(img.x, Catch::Matchers::WithinAbs(-3.0 / 1300.0 * 100.0, 1e-12));
    CHECK_THAT(img.y, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("project rejects LEDs at or below the receiver plane") {
    const auto intr = table1_intrinsics();
    const Pose pose{{0.0, 0.0, 300.0}, 0.0};
    CHECK_THROWS_AS(project({100.0, 0.0, 300.0}, pose, intr, intr.principal_point),
                    DegenerateGeometry);
    CHECK_THROWS_AS(project({100.0, 0.0, 100.0}, pose, intr, intr.principal_point),
                    DegenerateGeometry);
}

TEST_CASE("project agrees with the explicit camera-frame chain") {
    // The projection block [[a, b], [-b, a]] is the transpose of the yaw
    // matrix's upper 2x2, i.e. the camera's attitude applied inversely; the
    // equivalent chain divides the camera-frame coordinates taken with the
    // transposed rotation by -H/f.
    const auto intr = table1_intrinsics(0.003);
    Rng rng(1234);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Pose pose{{rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(0, 300)},
                        rng.uniform(-3.1, 3.1)};
        const WorldPoint led{pose.position.x + rng.uniform(-400, 400),
                             pose.position.y + rng.uniform(-400, 400),
                             rng.uniform(1500, 1700)};
        const PixelPoint true_center{rng.uniform(350, 450), rng.uniform(250, 350)};

        const PixelPoint px = project(led, pose, intr, true_center);
        const ImagePoint img = pixel_to_image(px, intr, true_center);

        const Eigen::Matrix3d r_t = rotation_matrix(0.0, 0.0, pose.yaw_gamma).m.transpose();
        const Eigen::Vector3d cam = r_t * (led.vec() - pose.position.vec());
        const double h = cam.z();
        const double cx = -intr.focal_length_mm * cam.x() / h;
        const double cy = -intr.focal_length_mm * cam.y() / h;

        worst = std::max({worst, std::abs(img.x - cx), std::abs(img.y - cy)});
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("project depends only on the height difference") {
    const auto intr = table1_intrinsics(0.003);
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const double dz = rng.uniform(-5000.0, 5000.0);
        const Pose pose{{rng.uniform(-300, 300), rng.uniform(-300, 300), rng.uniform(0, 300)},
                        rng.uniform(-3.0, 3.0)};
        const WorldPoint led{rng.uniform(-300, 300), rng.uniform(-300, 300),
                             rng.uniform(1500, 1700)};
        Pose shifted = pose;
        shifted.position.z += dz;
        const WorldPoint led_shifted{led.x, led.y, led.z + dz};
        const PixelPoint a = project(led, pose, intr, intr.principal_point);
        const PixelPoint b = project(led_shifted, shifted, intr, intr.principal_point);
        CHECK(std::abs(a.u - b.u) < 1e-9);
        CHECK(std::abs(a.v - b.v) < 1e-9);
    }
}

TEST_CASE("estimate_height recovers H from a projected pair") {
    const auto intr = table1_intrinsics(0.003);
    const Pose pose{{0.0, 0.0, 300.0}, 0.35};
    const WorldPoint w1{-150.0, 40.0, 1600.0};
    const WorldPoint w2{150.0, 40.0, 1600.0};  // 300 mm apart in plan
    const ImagePoint i1 =
        pixel_to_image(project(w1, pose, intr, intr.principal_point), intr, intr.principal_point);
    const ImagePoint i2 =
        pixel_to_image(project(w2, pose, intr, intr.principal_point), intr, intr.principal_point);
    // d12 = f * D12 / H = 3 * 300 / 1300 ~ 0.69231 mm.
    CHECK_THAT((i1.vec() - i2.vec()).norm(), Catch::Matchers::WithinAbs(0.6923076923, 1e-9));
    CHECK_THAT(estimate_height(w1, w2, i1, i2, intr), Catch::Matchers::WithinRel(1300.0, 1e-12));
}

TEST_CASE("estimate_height is a pure ratio") {
    const auto intr = table1_intrinsics();
    const WorldPoint w1{0.0, 0.0, 1600.0};
    const WorldPoint w2{300.0, 0.0, 1600.0};
    const ImagePoint i1{0.0, 0.0};
    const ImagePoint i2{0.6923076923076923, 0.0};
    const double h1 = estimate_height(w1, w2, i1, i2, intr);
    const ImagePoint i2_scaled{2.0 * i2.x, 0.0};
    const double h2 = estimate_height(w1, w2, i1, i2_scaled, intr);
    CHECK_THAT(h2, Catch::Matchers::WithinRel(h1 / 2.0, 1e-15));
}

TEST_CASE("estimate_height scale invariance in world and height jointly") {
    const auto intr = table1_intrinsics(0.003);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double k = rng.uniform(0.1, 10.0);
        const WorldPoint w1{rng.uniform(-300, 300), rng.uniform(-300, 300), 1600.0};
        const WorldPoint w2{rng.uniform(-300, 300), rng.uniform(-300, 300), 1600.0};
        if ((w1.plan() - w2.plan()).norm() < 1.0) continue;
        const ImagePoint i1{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const ImagePoint i2{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if ((i1.vec() - i2.vec()).norm() < 1e-3) continue;
        const double h = estimate_height(w1, w2, i1, i2, intr);
        const WorldPoint w1k{k * w1.x, k * w1.y, w1.z};
        const WorldPoint w2k{k * w2.x, k * w2.y, w2.z};
        const double hk = estimate_height(w1k, w2k, i1, i2, intr);
        CHECK_THAT(hk, Catch::Matchers::WithinRel(k * h, 1e-12));
    }
}

TEST_CASE("estimate_height rejects coincident image points") {
    const auto intr = table1_intrinsics();
    const ImagePoint same{0.2, -0.1};
    CHECK_THROWS_AS(
        estimate_height({0, 0, 1600}, {300, 0, 1600}, same, same, intr),
        DegenerateGeometry);
}

TEST_CASE("receiver_z subtracts the recovered height") {
    CHECK(receiver_z(1600.0, 1300.0) == 300.0);
    CHECK(receiver_z(1300.0, 1300.0) == 0.0);
    CHECK_THROWS_AS(receiver_z(1600.0, 0.0), InvalidInput);
}

TEST_CASE("receiver_z flags inconsistent ceiling heights") {
    const double zs[] = {1600.0, 1605.0};
    CHECK_THROWS_AS(receiver_z(zs, 1300.0, 1.0), InconsistentAnchors);
    const double ok[] = {1600.0, 1600.5};
    CHECK_THAT(receiver_z(ok, 1300.0, 1.0), Catch::Matchers::WithinAbs(300.25, 1e-12));
}

TEST_CASE("normalize_angle lands in (-pi, pi]") {
    CHECK(normalize_angle(std::numbers::pi) == std::numbers::pi);
    CHECK_THAT(normalize_angle(-std::numbers::pi), Catch::Matchers::WithinAbs(std::numbers::pi, 1e-15));
    CHECK_THAT(normalize_angle(3 * std::numbers::pi / 2),
               Catch::Matchers::WithinAbs(-std::numbers::pi / 2, 1e-12));
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double a = normalize_angle(rng.uniform(-50.0, 50.0));
        CHECK(a > -std::numbers::pi);
        CHECK(a <= std::numbers::pi);
    }
}

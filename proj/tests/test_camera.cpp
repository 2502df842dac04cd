#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "motionforge/camera.hpp"
#include "motionforge/error.hpp"
#include "motionforge/json_util.hpp"
#include "motionforge/rotation.hpp"

using namespace motionforge;
using nlohmann::json;

namespace {

Points3 one_point(double x, double y, double z) {
    Points3 p(1, 3);
    p << x, y, z;
    return p;
}

Intrinsics square(double f, double c, int side) { return Intrinsics{f, f, c, c, side, side}; }

Eigen::Matrix3d axis_rot(const Eigen::Vector3d& w) {
    const double th = w.norm();
    if (th == 0.0) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

VertexFrame random_vertex_frame(std::mt19937_64& gen, int verts, int joints) {
    std::normal_distribution<double> nd;
    VertexFrame f;
    f.vertices.resize(verts, 3);
    f.joints.resize(joints, 3);
    for (Eigen::Index i = 0; i < f.vertices.size(); ++i) f.vertices.data()[i] = nd(gen) * 3.0;
    for (Eigen::Index i = 0; i < f.joints.size(); ++i) f.joints.data()[i] = nd(gen) * 3.0;
    return f;
}

}  // namespace

TEST_CASE("pinhole projection fixtures") {
    const Extrinsics id;
    auto p = project(one_point(0, 0, 2), square(700, 512, 1024), id);
    CHECK(p.pixels(0, 0) == 512.0);
    CHECK(p.pixels(0, 1) == 512.0);
    CHECK(p.visible[0]);

    p = project(one_point(0.1, -0.2, 2.0), square(1000, 512, 1024), id);
    CHECK(p.pixels(0, 0) == doctest::Approx(1000.0 * 0.1 / 2.0 + 512.0).epsilon(1e-15));
    CHECK(p.pixels(0, 1) == doctest::Approx(1000.0 * -0.2 / 2.0 + 512.0).epsilon(1e-15));
    CHECK(p.pixels(0, 0) == doctest::Approx(562.0));
    CHECK(p.pixels(0, 1) == doctest::Approx(412.0));

    p = project(one_point(0, 0, -1), square(1000, 512, 1024), id);
    CHECK(!p.visible[0]);
    CHECK(std::isnan(p.pixels(0, 0)));

    p = project(one_point(5, 0, 1), square(1000, 512, 1024), id);
    CHECK(!p.visible[0]);
    CHECK(!std::isnan(p.pixels(0, 0)));
    CHECK_THROWS_AS(project(one_point(0, std::nan(""), 1), square(1, 0, 1), id), Error);
}

TEST_CASE("projection is invariant to scaling along the ray") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1, 1), l(0.1, 10.0);
    const auto intr = Intrinsics{900, 850, 300, 200, 640, 480};
    for (int i = 0; i < 200; ++i) {
        const Eigen::Vector3d q(u(gen), u(gen), 1.0 + std::abs(u(gen)));
        const double lambda = l(gen);
        const auto a = project(one_point(q.x(), q.y(), q.z()), intr, {});
        const auto b = project(one_point(lambda * q.x(), lambda * q.y(), lambda * q.z()), intr, {});
        CHECK((a.pixels - b.pixels).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("visible points lie inside the frame") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> nd;
    Points3 pts(5000, 3);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = nd(gen) * 2.0;
    Extrinsics e;
    e.R = axis_rot(Eigen::Vector3d(0.3, -0.2, 0.1));
    e.T = Eigen::Vector3d(0.1, 0.2, 2.0);
    const Intrinsics intr{600, 600, 320, 240, 640, 480};
    const auto p = project(pts, intr, e);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Eigen::Vector3d q = e.R * pts.row(i).transpose() + e.T;
        if (p.visible[i]) {
            CHECK(p.pixels(i, 0) >= 0.0);
            CHECK(p.pixels(i, 0) < 640.0);
            CHECK(p.pixels(i, 1) >= 0.0);
            CHECK(p.pixels(i, 1) < 480.0);
        }
        if (q.z() < kDefaultNear) CHECK(!p.visible[i]);
    }
}

TEST_CASE("intrinsic reparameterization fixture") {
    const auto out = reparameterize_intrinsics(Intrinsics{5000, 5000, 256, 256, 512, 512}, 512.0,
                                               BBox{100, 50, 256, 256}, 1024, 768);
    // fx' = 5000 * 256 / 512, centre = (100 + 128, 50 + 128)
    CHECK(out.fx == 5000.0 * 256.0 / 512.0);
    CHECK(out.fy == 2500.0);
    CHECK(out.cx == 228.0);
    CHECK(out.cy == 178.0);
    CHECK(out.width == 1024);
    CHECK(out.height == 768);
}

TEST_CASE("full-frame bbox keeps the focal length") {
    const auto base = Intrinsics{800, 800, 256, 256, 512, 512};
    const auto out = reparameterize_intrinsics(base, 512.0, BBox{0, 0, 512, 512}, 512, 512);
    CHECK(out.fx == 800.0);
    CHECK(out.fy == 800.0);
    CHECK(out.cx == 256.0);
    CHECK(out.cy == 256.0);
}

TEST_CASE("reparameterization contracts") {
    const auto base = Intrinsics{800, 800, 256, 256, 512, 512};
    CHECK_THROWS_AS(reparameterize_intrinsics(base, 512.0, BBox{0, 0, 0, 100}, 512, 512), Error);
    CHECK_THROWS_AS(reparameterize_intrinsics(base, 512.0, BBox{0, 0, 100, -1}, 512, 512), Error);
    CHECK_THROWS_AS(reparameterize_intrinsics(base, 0.0, BBox{0, 0, 100, 100}, 512, 512), Error);
    CHECK_THROWS_AS(reparameterize_intrinsics(base, 512.0, BBox{500, 0, 100, 100}, 512, 512), Error);
}

TEST_CASE("crop-filling reference lands inside the bbox") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double S = 512.0;
    const Intrinsics crop{1100, 1100, S / 2, S / 2, 512, 512};
    for (int trial = 0; trial < 20; ++trial) {
        const BBox box{50 + 300 * u(gen), 30 + 200 * u(gen), 80 + 300 * u(gen), 80 + 400 * u(gen)};
        // points whose crop projections span the whole crop
        Points3 pts(400, 3);
        for (Eigen::Index i = 0; i < pts.rows(); ++i) {
            const double z = 2.0 + 3.0 * u(gen);
            double px = S * u(gen), py = S * u(gen);
            if (i < 4) {
                px = (i & 1) ? S : 0.0;
                py = (i & 2) ? S : 0.0;
            }
            pts.row(i) << (px - crop.cx) * z / crop.fx, (py - crop.cy) * z / crop.fy, z;
        }
        const auto intr = reparameterize_intrinsics(crop, S, box, 1000, 900);
        const auto p = project(pts, intr, {});
        const double mx = 0.05 * box.w, my = 0.05 * box.h;
        const double minx = p.pixels.col(0).minCoeff(), maxx = p.pixels.col(0).maxCoeff();
        const double miny = p.pixels.col(1).minCoeff(), maxy = p.pixels.col(1).maxCoeff();
        CHECK(minx >= box.x - mx);
        CHECK(maxx <= box.x + box.w + mx);
        CHECK(miny >= box.y - my);
        CHECK(maxy <= box.y + box.h + my);
        // and it fills most of it
        CHECK(maxx - minx > 0.9 * box.w);
        CHECK(maxy - miny > 0.9 * box.h);
    }
}

TEST_CASE("track frame intrinsics in crop space") {
    auto track = fixtures::chain_track(2);
    const auto k = track.frame_intrinsics(1);
    CHECK(k.fx == 1600.0 * 400.0 / 512.0);
    CHECK(k.cx == 240.0);
    CHECK(k.cy == 360.0);
    track.space = IntrinsicsSpace::frame;
    CHECK(track.frame_intrinsics(1).fx == 1600.0);
}

TEST_CASE("pelvis alignment vector fixture") {
    VertexFrame g, r;
    g.joints = one_point(1, 0, 0);
    g.vertices = one_point(1, 1, 1);
    r.joints = one_point(0, 0, 2);
    const auto out = align_to_reference({g}, {r});
    CHECK(out[0].joints.row(0) == Eigen::RowVector3d(0, 0, 2));
    CHECK(out[0].vertices.row(0) == Eigen::RowVector3d(0, 1, 3));
}

TEST_CASE("alignment of identical sequences is a no-op") {
    std::mt19937_64 gen(4);
    const auto f = random_vertex_frame(gen, 30, 5);
    const auto out = align_to_reference({f}, {f});
    CHECK(out[0].vertices == f.vertices);
    CHECK(out[0].joints == f.joints);
}

TEST_CASE("pelvis match is exact and alignment is idempotent on random pairs") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<VertexFrame> g, r;
        for (int i = 0; i < 8; ++i) {
            g.push_back(random_vertex_frame(gen, 20, 4));
            r.push_back(random_vertex_frame(gen, 0, 4));
        }
        const auto a = align_to_reference(g, r);
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].joints.row(0) == r[i].joints.row(0));
            // pure translation
            const Eigen::RowVector3d d = a[i].vertices.row(0) - g[i].vertices.row(0);
            REQUIRE(((a[i].vertices - g[i].vertices).rowwise() - d).cwiseAbs().maxCoeff() < 1e-12);
        }
        const auto b = align_to_reference(a, r);
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(b[i].vertices == a[i].vertices);
            REQUIRE(b[i].joints == a[i].joints);
        }
    }
}

TEST_CASE("shifting the reference shifts the output") {
    std::mt19937_64 gen(6);
    std::vector<VertexFrame> g, r, rc;
    const Eigen::RowVector3d c(0.5, -1.25, 2.0);
    for (int i = 0; i < 4; ++i) {
        g.push_back(random_vertex_frame(gen, 10, 3));
        r.push_back(random_vertex_frame(gen, 0, 3));
        rc.push_back(r.back());
        rc.back().joints.rowwise() += c;
    }
    const auto a = align_to_reference(g, r), b = align_to_reference(g, rc);
    for (int i = 0; i < 4; ++i)
        CHECK(((b[i].vertices - a[i].vertices).rowwise() - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("alignment contracts and the pelvis parameter") {
    std::mt19937_64 gen(7);
    const auto f = random_vertex_frame(gen, 5, 3);
    CHECK_THROWS_AS(align_to_reference({f, f}, {f}), Error);
    AlignOptions o;
    o.pelvis_joint = 7;
    CHECK_THROWS_AS(align_to_reference({f}, {f}, o), Error);
    o.pelvis_joint = 2;
    auto r = f;
    r.joints.row(2) += Eigen::RowVector3d(1, 2, 3);
    CHECK(align_to_reference({f}, {r}, o)[0].joints.row(2) == r.joints.row(2));
}

TEST_CASE("yaw alignment matches the hip heading") {
    std::mt19937_64 gen(8);
    auto g = random_vertex_frame(gen, 10, 3);
    auto r = g;
    const Eigen::Matrix3d Ry = axis_rot(Eigen::Vector3d(0, 0.7, 0));
    r.joints = (r.joints * Ry.transpose()).rowwise() + Eigen::RowVector3d(1, 0, 3);
    AlignOptions o;
    o.yaw = true;
    const auto a = align_to_reference({g}, {r}, o);
    CHECK((a[0].joints - r.joints).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("perturbation") {
    Extrinsics e;
    e.R = axis_rot(Eigen::Vector3d(0.1, 0.2, 0.3));
    e.T = Eigen::Vector3d(1, 2, 3);
    CHECK(perturb(e, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) == e);
    const auto t = perturb(e, Eigen::Vector3d::Zero(), Eigen::Vector3d(0, 0, 0.1));
    CHECK(t.R == e.R);
    CHECK(t.T == Eigen::Vector3d(1, 2, 3.1));

    const double ten = 10.0 * M_PI / 180.0;
    const auto twice = perturb(perturb(e, Eigen::Vector3d(0, ten, 0), {}), Eigen::Vector3d(0, ten, 0), {});
    const auto once = perturb(e, Eigen::Vector3d(0, 2 * ten, 0), {});
    CHECK((twice.R - once.R).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((once.R - axis_rot(Eigen::Vector3d(0, 2 * ten, 0)) * e.R).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK_THROWS_AS(perturb(e, Eigen::Vector3d(M_PI, 0, 0), {}), Error);
}

TEST_CASE("composed perturbations stay orthonormal") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    Extrinsics e;
    for (int i = 0; i < 1000; ++i) e = perturb(e, Eigen::Vector3d(u(gen), u(gen), u(gen)), Eigen::Vector3d(u(gen), 0, 0));
    const Eigen::Matrix3d err = e.R.transpose() * e.R - Eigen::Matrix3d::Identity();
    CHECK(err.cwiseAbs().rowwise().sum().maxCoeff() <= 1e-9);
    CHECK(std::abs(e.R.determinant() - 1.0) <= 1e-9);
    CHECK_NOTHROW(e.validate());
}

TEST_CASE("reference stop step") {
    CHECK(reference_stop_step(50, 0.3) == 15);
    CHECK(reference_stop_step(50, 1.0) == 50);
    CHECK(reference_stop_step(1, 0.01) == 1);
    CHECK(reference_stop_step(70, 0.3) == 21);
    CHECK(reference_stop_step(10, 0.31) == 4);
    CHECK_THROWS_AS(reference_stop_step(0, 0.3), Error);
    CHECK_THROWS_AS(reference_stop_step(50, 0.0), Error);
    CHECK_THROWS_AS(reference_stop_step(50, 1.5), Error);
}

TEST_CASE("camera track file round trip and violations") {
    const auto dir = fixtures::temp_dir("track");
    auto track = fixtures::chain_track(3);
    track.frames[1].extrinsics.R = axis_rot(Eigen::Vector3d(0.2, 0.4, -0.1));
    save_camera_track(track, dir / "t.json");
    const auto back = load_camera_track(dir / "t.json");
    REQUIRE(back.frame_count() == 3);
    CHECK(back.frames[1].extrinsics == track.frames[1].extrinsics);
    CHECK(back.frames[2].bbox.w == 400.0);
    CHECK(back.crop_side == 512.0);

    auto doc = camera_track_to_json(track);
    CHECK(camera_track_violations(doc).empty());
    doc["frames"][2]["R"][0] = 1.01;
    auto vs = camera_track_violations(doc);
    REQUIRE(vs.size() == 1);
    CHECK(vs[0].message.find("frame 2") != std::string::npos);
    CHECK(vs[0].message.find("orthonormal") != std::string::npos);

    doc = camera_track_to_json(track);
    doc["frames"][0]["bbox"] = {0, 0, 0, 5};
    doc["frames"][1]["bbox"] = {400, 0, 100, 5};
    vs = camera_track_violations(doc);
    CHECK(vs.size() == 2);
    doc["frames"] = json::array();
    CHECK(!camera_track_violations(doc).empty());
    jsonutil::write_json_file(dir / "bad.json", doc);
    CHECK_THROWS_AS(load_camera_track(dir / "bad.json"), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("reference frames file round trip") {
    std::mt19937_64 gen(10);
    const auto dir = fixtures::temp_dir("ref");
    std::vector<VertexFrame> frames{random_vertex_frame(gen, 4, 3), random_vertex_frame(gen, 4, 3)};
    save_reference_frames(frames, dir / "r.json");
    const auto back = load_reference_frames(dir / "r.json");
    REQUIRE(back.size() == 2);
    CHECK(back[1].joints == frames[1].joints);
    CHECK(back[1].vertices == frames[1].vertices);
    std::filesystem::remove_all(dir);
}

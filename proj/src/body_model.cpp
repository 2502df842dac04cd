#include "motionforge/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "motionforge/error.hpp"
#include "motionforge/json_util.hpp"
#include "motionforge/rotation.hpp"

namespace motionforge {

using jsonutil::json;

namespace {

constexpr std::array<std::string_view, kPartCount> kPartNames = {
    "head", "torso", "left_arm", "right_arm", "left_leg", "right_leg"};

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

}  // namespace

std::string_view part_name(BodyPart part) { return kPartNames[static_cast<std::size_t>(part)]; }

std::optional<BodyPart> part_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kPartCount; ++i)
        if (kPartNames[i] == name) return static_cast<BodyPart>(i);
    return std::nullopt;
}

const std::array<BodyPart, 24>& smpl_part_table() {
    using P = BodyPart;
    static const std::array<BodyPart, 24> table = {
        P::torso,     P::left_leg,  P::right_leg, P::torso,     P::left_leg,  P::right_leg,
        P::torso,     P::left_leg,  P::right_leg, P::torso,     P::left_leg,  P::right_leg,
        P::head,      P::torso,     P::torso,     P::head,      P::left_arm,  P::right_arm,
        P::left_arm,  P::right_arm, P::left_arm,  P::right_arm, P::left_arm,  P::right_arm,
    };
    return table;
}

const std::array<int, 24>& smpl_parents() {
    static const std::array<int, 24> parents = {
        -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    return parents;
}

int BodyModel::root_joint() const {
    for (std::size_t j = 0; j < parents.size(); ++j)
        if (parents[j] == kRootParent) return static_cast<int>(j);
    return -1;
}

std::vector<Violation> BodyModel::violations() const {
    std::vector<Violation> out;
    const auto nv = static_cast<Eigen::Index>(vertex_count());
    const auto nj = static_cast<Eigen::Index>(joint_count());

    if (nv == 0) out.push_back({"template", "model has no vertices"});
    if (nj == 0) {
        out.push_back({"parents", "model has no joints"});
        return out;
    }
    if (!template_vertices.allFinite()) out.push_back({"template", "template has non-finite coordinates"});

    for (std::size_t f = 0; f < faces.size(); ++f)
        for (int c = 0; c < 3; ++c)
            if (faces[f][c] < 0 || faces[f][c] >= nv)
                out.push_back({"faces[" + std::to_string(f) + "]",
                               "face " + std::to_string(f) + " index " + std::to_string(faces[f][c]) +
                                   " out of range"});

    if (skinning_weights.rows() != nv || skinning_weights.cols() != nj) {
        out.push_back({"weights", "weights shape mismatch"});
    } else {
        for (Eigen::Index v = 0; v < nv; ++v) {
            const double sum = skinning_weights.row(v).sum();
            const bool negative = (skinning_weights.row(v).array() < 0.0).any();
            if (negative || !std::isfinite(sum) || std::abs(sum - 1.0) > 1e-6)
                out.push_back({"weights[" + std::to_string(v) + "]",
                               "weights row " + std::to_string(v) + " not stochastic (sum=" + fmt_double(sum) +
                                   (negative ? ", negative entry" : "") + ")"});
        }
    }

    if (joint_regressor.rows() != nj || joint_regressor.cols() != nv) {
        out.push_back({"regressor", "regressor shape mismatch"});
    } else {
        for (Eigen::Index j = 0; j < nj; ++j) {
            const double sum = joint_regressor.row(j).sum();
            if (!std::isfinite(sum) || std::abs(sum - 1.0) > 1e-6)
                out.push_back({"regressor[" + std::to_string(j) + "]",
                               "regressor row " + std::to_string(j) + " does not sum to 1 (sum=" + fmt_double(sum) + ")"});
        }
    }

    int roots = 0;
    bool parents_in_range = true;
    for (Eigen::Index j = 0; j < nj; ++j) {
        const int p = parents[j];
        if (p == kRootParent) {
            ++roots;
        } else if (p < 0 || p >= nj || p == j) {
            parents_in_range = false;
            out.push_back({"parents[" + std::to_string(j) + "]",
                           "joint " + std::to_string(j) + " has invalid parent " + std::to_string(p)});
        }
    }
    if (roots != 1)
        out.push_back({"parents", "kinematic tree must have exactly one root, found " + std::to_string(roots)});
    if (parents_in_range) {
        for (Eigen::Index j = 0; j < nj; ++j) {
            int cur = static_cast<int>(j);
            Eigen::Index hops = 0;
            while (cur != kRootParent && hops <= nj) {
                cur = parents[cur];
                ++hops;
            }
            if (cur != kRootParent) {
                out.push_back({"parents[" + std::to_string(j) + "]",
                               "kinematic tree has a cycle through joint " + std::to_string(j)});
                break;
            }
        }
    }

    if (static_cast<Eigen::Index>(part_of_joint.size()) != nj)
        out.push_back({"parts", "part_of_joint must have one entry per joint"});

    if (shape_basis.size() > 0 && shape_basis.rows() != 3 * nv)
        out.push_back({"shape_basis", "shape_basis must have 3*n_verts rows"});
    if (pose_basis.size() > 0 && (pose_basis.rows() != 3 * nv || pose_basis.cols() != 9 * (nj - 1)))
        out.push_back({"pose_basis", "pose_basis must be (3*n_verts) x 9*(n_joints-1)"});
    return out;
}

void BodyModel::validate() const {
    const auto v = violations();
    if (!v.empty()) fail(ErrorCode::contract, "invalid body model: " + v.front().path + ": " + v.front().message);
}

PoseFrame PoseFrame::zero(std::size_t joint_count) {
    PoseFrame f;
    f.body_pose = Vector::Zero(static_cast<Eigen::Index>(3 * (joint_count - 1)));
    return f;
}

bool PoseFrame::operator==(const PoseFrame& other) const {
    return global_orient == other.global_orient && body_pose.size() == other.body_pose.size() &&
           body_pose == other.body_pose && translation == other.translation;
}

// ---------------------------------------------------------------------------
// Model files

namespace {

Matrix to_matrix(const std::vector<double>& values, Eigen::Index rows, Eigen::Index cols, const std::string& where) {
    if (static_cast<Eigen::Index>(values.size()) != rows * cols)
        fail(ErrorCode::contract, where + ": expected " + std::to_string(rows * cols) + " values, got " +
                                      std::to_string(values.size()));
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

BodyModel model_from_json(const json& doc, const std::string& where) {
    const auto nv_raw = jsonutil::read_number(doc, "n_verts", "");
    const auto nj_raw = jsonutil::read_number(doc, "n_joints", "");
    if (nv_raw < 1 || nj_raw < 1) fail(ErrorCode::contract, where + ": n_verts and n_joints must be positive");
    const auto nv = static_cast<Eigen::Index>(nv_raw);
    const auto nj = static_cast<Eigen::Index>(nj_raw);

    BodyModel m;
    m.template_vertices = to_matrix(jsonutil::read_f64_array(jsonutil::require(doc, "template", ""), "template"), nv, 3, "template");
    const auto faces = jsonutil::read_int_array(jsonutil::require(doc, "faces", ""), "faces");
    if (faces.size() % 3 != 0) fail(ErrorCode::contract, "faces: length not a multiple of 3");
    m.faces.resize(faces.size() / 3);
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        for (int c = 0; c < 3; ++c) m.faces[f][c] = static_cast<std::int32_t>(faces[3 * f + c]);
    m.joint_regressor = to_matrix(jsonutil::read_f64_array(jsonutil::require(doc, "regressor", ""), "regressor"), nj, nv, "regressor");
    m.skinning_weights = to_matrix(jsonutil::read_f64_array(jsonutil::require(doc, "weights", ""), "weights"), nv, nj, "weights");

    const auto parents = jsonutil::read_int_array(jsonutil::require(doc, "parents", ""), "parents");
    if (static_cast<Eigen::Index>(parents.size()) != nj) fail(ErrorCode::contract, "parents: expected one entry per joint");
    for (auto p : parents) m.parents.push_back(p < 0 || p == 4294967295LL ? kRootParent : static_cast<int>(p));

    const auto& parts = jsonutil::require(doc, "parts", "");
    if (!parts.is_array() || static_cast<Eigen::Index>(parts.size()) != nj)
        fail(ErrorCode::contract, "parts: expected one entry per joint");
    for (std::size_t j = 0; j < parts.size(); ++j) {
        const auto& p = parts[j];
        std::optional<BodyPart> part;
        if (p.is_string()) part = part_from_name(p.get<std::string>());
        else if (p.is_number_integer() && p.get<int>() >= 0 && p.get<int>() < static_cast<int>(kPartCount))
            part = static_cast<BodyPart>(p.get<int>());
        if (!part) fail(ErrorCode::contract, "parts[" + std::to_string(j) + "]: unknown body part");
        m.part_of_joint.push_back(*part);
    }

    if (doc.contains("shape_basis") && !doc["shape_basis"].is_null()) {
        const auto values = jsonutil::read_f64_array(doc["shape_basis"], "shape_basis");
        if (values.size() % (3 * nv) != 0) fail(ErrorCode::contract, "shape_basis: length not a multiple of 3*n_verts");
        m.shape_basis = to_matrix(values, 3 * nv, static_cast<Eigen::Index>(values.size()) / (3 * nv), "shape_basis");
    }
    if (doc.contains("pose_basis") && !doc["pose_basis"].is_null()) {
        const auto values = jsonutil::read_f64_array(doc["pose_basis"], "pose_basis");
        m.pose_basis = to_matrix(values, 3 * nv, 9 * (nj - 1), "pose_basis");
    }
    return m;
}

BodyModel model_from_synthetic(const json& doc) {
    const auto& gen = jsonutil::require(doc, "generator", "");
    if (!gen.is_string()) fail(ErrorCode::contract, "generator: expected string");
    const auto name = gen.get<std::string>();
    if (name == "chain3") return make_chain3(doc.value("segment", 0.3), doc.value("radius", 0.05));
    if (name == "humanoid24") return make_humanoid24(doc.value("shape_count", 0));
    fail(ErrorCode::contract, "generator: unknown synthetic model '" + name + "'");
}

}  // namespace

BodyModel load_model(const std::filesystem::path& path, ModelFormat format) {
    const auto doc = jsonutil::read_json_file(path);
    BodyModel m = format == ModelFormat::generator ? model_from_synthetic(doc) : model_from_json(doc, path.string());
    m.validate();
    return m;
}

BodyModel parse_model(const json& doc) {
    if (!doc.is_object()) fail(ErrorCode::contract, "model document must be an object");
    return doc.contains("generator") ? model_from_synthetic(doc) : model_from_json(doc, "model");
}

BodyModel load_model(const std::filesystem::path& path) {
    BodyModel m = parse_model(jsonutil::read_json_file(path));
    m.validate();
    return m;
}

void save_model(const BodyModel& model, const std::filesystem::path& path) {
    const auto nv = model.vertex_count();
    const auto nj = model.joint_count();
    std::vector<std::int32_t> faces;
    for (const auto& f : model.faces) faces.insert(faces.end(), f.begin(), f.end());
    json parts = json::array();
    for (auto p : model.part_of_joint) parts.push_back(std::string(part_name(p)));

    json doc = {
        {"n_verts", nv},
        {"n_joints", nj},
        {"template", jsonutil::f64_blob(model.template_vertices.data(), 3 * nv, {nv, 3})},
        {"faces", jsonutil::i32_blob(faces.data(), faces.size(), {model.faces.size(), 3})},
        {"regressor", jsonutil::f64_blob(model.joint_regressor.data(), nj * nv, {nj, nv})},
        {"weights", jsonutil::f64_blob(model.skinning_weights.data(), nv * nj, {nv, nj})},
        {"parents", model.parents},
        {"parts", parts},
    };
    if (model.shape_basis.size() > 0)
        doc["shape_basis"] = jsonutil::f64_blob(model.shape_basis.data(), static_cast<std::size_t>(model.shape_basis.size()),
                                                {nv, 3, model.shape_count()});
    if (model.pose_basis.size() > 0)
        doc["pose_basis"] = jsonutil::f64_blob(model.pose_basis.data(), static_cast<std::size_t>(model.pose_basis.size()),
                                               {nv, 3, 9 * (nj - 1)});
    jsonutil::write_json_file(path, doc);
}

// ---------------------------------------------------------------------------
// Procedural models

BodyModel make_chain3(double segment, double radius) {
    constexpr int kRings = 4;
    constexpr int kPerRing = 3;
    constexpr double kPi = 3.14159265358979323846;

    BodyModel m;
    m.template_vertices.resize(kRings * kPerRing, 3);
    for (int r = 0; r < kRings; ++r)
        for (int i = 0; i < kPerRing; ++i) {
            const double a = 2.0 * kPi * i / kPerRing;
            // around +y: (sin a, 0, cos a) keeps (z, x, y) right-handed
            m.template_vertices.row(r * kPerRing + i) << radius * std::sin(a), r * segment, radius * std::cos(a);
        }

    for (int r = 0; r + 1 < kRings; ++r)
        for (int i = 0; i < kPerRing; ++i) {
            const int a0 = r * kPerRing + i;
            const int a1 = r * kPerRing + (i + 1) % kPerRing;
            const int b0 = a0 + kPerRing;
            const int b1 = a1 + kPerRing;
            m.faces.push_back({a0, a1, b1});
            m.faces.push_back({a0, b1, b0});
        }
    m.faces.push_back({0, 2, 1});
    const int top = (kRings - 1) * kPerRing;
    m.faces.push_back({top, top + 1, top + 2});

    m.parents = {kRootParent, 0, 1};
    m.part_of_joint = {BodyPart::torso, BodyPart::left_arm, BodyPart::head};

    m.joint_regressor = Matrix::Zero(3, kRings * kPerRing);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < kPerRing; ++i) m.joint_regressor(j, j * kPerRing + i) = 1.0 / kPerRing;

    m.skinning_weights = Matrix::Zero(kRings * kPerRing, 3);
    for (int i = 0; i < kPerRing; ++i) {
        m.skinning_weights(0 * kPerRing + i, 0) = 1.0;
        m.skinning_weights(1 * kPerRing + i, 0) = 0.5;
        m.skinning_weights(1 * kPerRing + i, 1) = 0.5;
        m.skinning_weights(2 * kPerRing + i, 1) = 0.5;
        m.skinning_weights(2 * kPerRing + i, 2) = 0.5;
        m.skinning_weights(3 * kPerRing + i, 2) = 1.0;
    }
    return m;
}

namespace {

// Approximate SMPL neutral rest joints, pelvis at the origin, y up, +x left.
const std::array<Eigen::Vector3d, 24>& humanoid_joints() {
    static const std::array<Eigen::Vector3d, 24> joints = {
        Eigen::Vector3d(0.00, 0.00, 0.00),   Eigen::Vector3d(0.06, -0.09, 0.00),
        Eigen::Vector3d(-0.06, -0.09, 0.00), Eigen::Vector3d(0.00, 0.11, -0.01),
        Eigen::Vector3d(0.10, -0.47, 0.01),  Eigen::Vector3d(-0.10, -0.47, 0.01),
        Eigen::Vector3d(0.00, 0.24, 0.01),   Eigen::Vector3d(0.09, -0.87, -0.03),
        Eigen::Vector3d(-0.09, -0.87, -0.03), Eigen::Vector3d(0.00, 0.30, 0.02),
        Eigen::Vector3d(0.11, -0.93, 0.09),  Eigen::Vector3d(-0.11, -0.93, 0.09),
        Eigen::Vector3d(0.00, 0.51, -0.01),  Eigen::Vector3d(0.08, 0.42, -0.01),
        Eigen::Vector3d(-0.08, 0.42, -0.01), Eigen::Vector3d(0.00, 0.60, 0.04),
        Eigen::Vector3d(0.18, 0.45, -0.02),  Eigen::Vector3d(-0.18, 0.45, -0.02),
        Eigen::Vector3d(0.44, 0.43, -0.04),  Eigen::Vector3d(-0.44, 0.43, -0.04),
        Eigen::Vector3d(0.69, 0.44, -0.03),  Eigen::Vector3d(-0.69, 0.44, -0.03),
        Eigen::Vector3d(0.77, 0.43, -0.03),  Eigen::Vector3d(-0.77, 0.43, -0.03),
    };
    return joints;
}

// Half thickness of the bone ending at joint j.
double bone_half_width(int j) {
    switch (j) {
        case 3: case 6: case 9: return 0.12;
        case 1: case 2: return 0.07;
        case 12: return 0.05;
        case 13: case 14: return 0.05;
        case 4: case 5: return 0.07;
        case 7: case 8: return 0.05;
        case 10: case 11: return 0.04;
        default: return 0.04;
    }
}

struct BoxBuilder {
    BodyModel& m;
    std::vector<Eigen::Vector3d> verts;
    std::vector<int> owner;

    // Box from a to b bound to joint `owner_joint`; returns first vertex index.
    int add(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double hu, double hv, int owner_joint) {
        const Eigen::Vector3d d = (b - a).normalized();
        const Eigen::Vector3d seed = std::abs(d.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
        const Eigen::Vector3d u = seed.cross(d).normalized();
        const Eigen::Vector3d v = d.cross(u);
        const int base = static_cast<int>(verts.size());
        const double su[4] = {hu, -hu, -hu, hu};
        const double sv[4] = {hv, hv, -hv, -hv};
        for (const auto* end : {&a, &b})
            for (int k = 0; k < 4; ++k) {
                verts.push_back(*end + su[k] * u + sv[k] * v);
                owner.push_back(owner_joint);
            }
        for (int k = 0; k < 4; ++k) {
            const int n0 = base + k, n1 = base + (k + 1) % 4;
            const int f0 = n0 + 4, f1 = n1 + 4;
            m.faces.push_back({n0, n1, f1});
            m.faces.push_back({n0, f1, f0});
        }
        m.faces.push_back({base + 0, base + 2, base + 1});
        m.faces.push_back({base + 0, base + 3, base + 2});
        m.faces.push_back({base + 4, base + 5, base + 6});
        m.faces.push_back({base + 4, base + 6, base + 7});
        return base;
    }
};

}  // namespace

BodyModel make_humanoid24(int shape_count) {
    const auto& joints = humanoid_joints();
    const auto& parents = smpl_parents();
    const auto& parts = smpl_part_table();

    BodyModel m;
    m.parents.assign(parents.begin(), parents.end());
    m.part_of_joint.assign(parts.begin(), parts.end());

    BoxBuilder boxes{m, {}, {}};
    std::array<int, 24> far_corners{};  // first far-end corner of the bone ending at j
    int root_corners = -1;
    for (int j = 1; j < 24; ++j) {
        const int p = parents[j];
        const double hw = bone_half_width(j);
        const int base = boxes.add(joints[p], joints[j], hw, hw * 0.8, p);
        far_corners[j] = base + 4;
        if (j == 3) root_corners = base;
    }
    // Head cap bound to the head joint.
    boxes.add(joints[15], joints[15] + Eigen::Vector3d(0.0, 0.2, 0.0), 0.09, 0.1, 15);

    const auto nv = static_cast<Eigen::Index>(boxes.verts.size());
    m.template_vertices.resize(nv, 3);
    for (Eigen::Index v = 0; v < nv; ++v) m.template_vertices.row(v) = boxes.verts[v].transpose();

    m.skinning_weights = Matrix::Zero(nv, 24);
    for (Eigen::Index v = 0; v < nv; ++v) m.skinning_weights(v, boxes.owner[v]) = 1.0;

    m.joint_regressor = Matrix::Zero(24, nv);
    for (int k = 0; k < 4; ++k) m.joint_regressor(0, root_corners + k) = 0.25;
    for (int j = 1; j < 24; ++j)
        for (int k = 0; k < 4; ++k) m.joint_regressor(j, far_corners[j] + k) = 0.25;

    if (shape_count > 0) {
        m.shape_basis = Matrix::Zero(3 * nv, shape_count);
        for (Eigen::Index v = 0; v < nv; ++v) {
            const Eigen::Vector3d p = m.template_vertices.row(v).transpose();
            for (int k = 0; k < shape_count; ++k) {
                Eigen::Vector3d d;
                if (k == 0) d = Eigen::Vector3d(0.0, 0.1 * p.y(), 0.0);             // stature
                else if (k == 1) d = Eigen::Vector3d(0.1 * p.x(), 0.0, 0.1 * p.z());  // girth
                else d = Eigen::Vector3d(0.01 * std::sin(static_cast<double>(k * (v + 1))), 0.0, 0.0);
                m.shape_basis.block(3 * v, k, 3, 1) = d;
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Skinning

namespace {

std::vector<int> topological_order(const BodyModel& model) {
    const int nj = static_cast<int>(model.joint_count());
    std::vector<int> order;
    order.reserve(nj);
    order.push_back(model.root_joint());
    for (std::size_t head = 0; head < order.size(); ++head)
        for (int j = 0; j < nj; ++j)
            if (model.parents[j] == order[head]) order.push_back(j);
    return order;
}

}  // namespace

VertexFrame pose(const BodyModel& model, const PoseFrame& frame, std::span<const double> betas) {
    const auto nv = static_cast<Eigen::Index>(model.vertex_count());
    const auto nj = static_cast<Eigen::Index>(model.joint_count());
    if (static_cast<std::size_t>(frame.body_pose.size()) != model.body_pose_size())
        fail(ErrorCode::contract, "pose length mismatch: body_pose has " + std::to_string(frame.body_pose.size()) +
                                      " values, model expects " + std::to_string(model.body_pose_size()));
    if (betas.size() > model.shape_count() && std::any_of(betas.begin() + model.shape_count(), betas.end(),
                                                           [](double b) { return b != 0.0; }))
        fail(ErrorCode::contract, "betas length " + std::to_string(betas.size()) + " exceeds shape basis size " +
                                      std::to_string(model.shape_count()));
    if (!frame.global_orient.allFinite() || !frame.body_pose.allFinite() || !frame.translation.allFinite() ||
        !std::all_of(betas.begin(), betas.end(), [](double b) { return std::isfinite(b); }))
        fail(ErrorCode::contract, "non-finite pose input");

    Points3 shaped = model.template_vertices;
    const std::size_t used_betas = std::min(betas.size(), model.shape_count());
    for (std::size_t k = 0; k < used_betas; ++k) {
        if (betas[k] == 0.0) continue;
        const auto column = model.shape_basis.col(static_cast<Eigen::Index>(k));
        for (Eigen::Index v = 0; v < nv; ++v)
            shaped.row(v) += betas[k] * column.segment<3>(3 * v).transpose();
    }
    const Points3 rest_joints = model.joint_regressor * shaped;

    const int root = model.root_joint();
    std::vector<Eigen::Matrix3d> local(nj);
    for (Eigen::Index j = 0, k = 0; j < nj; ++j) {
        if (j == root) {
            local[j] = rodrigues(frame.global_orient);
        } else {
            local[j] = rodrigues(frame.body_pose.segment<3>(3 * k));
            ++k;
        }
    }

    if (model.pose_basis.size() > 0) {
        Vector feature(9 * (nj - 1));
        for (Eigen::Index j = 0, k = 0; j < nj; ++j) {
            if (j == root) continue;
            const Eigen::Matrix3d d = local[j] - Eigen::Matrix3d::Identity();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) feature(9 * k + 3 * r + c) = d(r, c);
            ++k;
        }
        const Vector offsets = model.pose_basis * feature;
        for (Eigen::Index v = 0; v < nv; ++v) shaped.row(v) += offsets.segment<3>(3 * v).transpose();
    }

    // global[j] = (R, t) maps joint-local to world; skin[j] = global[j] with the
    // rest joint removed. skin_t follows skin_t[p] + (R[p] - R[j]) J_j so that
    // identity rotations give exactly zero.
    std::vector<Eigen::Matrix3d> global_R(nj);
    std::vector<Eigen::Vector3d> global_t(nj), skin_t(nj);
    for (int j : topological_order(model)) {
        const Eigen::Vector3d Jj = rest_joints.row(j).transpose();
        const int p = model.parents[j];
        if (p == kRootParent) {
            global_R[j] = local[j];
            global_t[j] = Jj;
            skin_t[j] = Jj - local[j] * Jj;
        } else {
            const Eigen::Vector3d Jp = rest_joints.row(p).transpose();
            global_R[j] = global_R[p] * local[j];
            global_t[j] = global_R[p] * (Jj - Jp) + global_t[p];
            skin_t[j] = skin_t[p] + (global_R[p] - global_R[j]) * Jj;
        }
    }

    VertexFrame out;
    out.vertices.resize(nv, 3);
    for (Eigen::Index v = 0; v < nv; ++v) {
        Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
        Eigen::Vector3d t = Eigen::Vector3d::Zero();
        double wsum = 0.0;
        for (Eigen::Index j = 0; j < nj; ++j) {
            const double w = model.skinning_weights(v, j);
            if (w == 0.0) continue;
            R += w * global_R[j];
            t += w * skin_t[j];
            wsum += w;
        }
        if (wsum != 1.0) {
            R /= wsum;
            t /= wsum;
        }
        const Eigen::Vector3d p = shaped.row(v).transpose();
        out.vertices.row(v) = (R * p + t + frame.translation).transpose();
    }
    out.joints.resize(nj, 3);
    for (Eigen::Index j = 0; j < nj; ++j) out.joints.row(j) = (global_t[j] + frame.translation).transpose();
    return out;
}

std::vector<BodyPart> part_labels(const BodyModel& model) {
    const auto nv = static_cast<Eigen::Index>(model.vertex_count());
    const auto nj = static_cast<Eigen::Index>(model.joint_count());
    std::vector<BodyPart> labels(nv);
    for (Eigen::Index v = 0; v < nv; ++v) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < nj; ++j)
            if (model.skinning_weights(v, j) > model.skinning_weights(v, best)) best = j;
        labels[v] = model.part_of_joint[best];
    }
    return labels;
}

}  // namespace motionforge

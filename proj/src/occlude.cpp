#include "dco/occlude.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dco {

TriangleMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CodecError(path + ": cannot open file");
    TriangleMesh mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            float x, y, z;
            if (!(ss >> x >> y >> z))
                throw CodecError(path + ": malformed vertex at line " + std::to_string(line_no));
            float r = 0.8f, g = 0.8f, b = 0.8f;
            if (ss >> r) {
                if (!(ss >> g >> b))
                    throw CodecError(path + ": incomplete vertex color at line " +
                                     std::to_string(line_no));
            }
            mesh.vertices.push_back({x, y, z});
            mesh.colors.push_back({r, g, b});
        } else if (tag == "f") {
            std::vector<int> indices;
            std::string token;
            while (ss >> token) {
                // keep only the position index of v/vt/vn triples
                size_t slash = token.find('/');
                if (slash != std::string::npos) token = token.substr(0, slash);
                int idx = 0;
                try {
                    idx = std::stoi(token);
                } catch (const std::exception&) {
                    throw CodecError(path + ": malformed face index at line " +
                                     std::to_string(line_no));
                }
                if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
                if (idx < 1 || idx > static_cast<int>(mesh.vertices.size()))
                    throw CodecError(path + ": face index out of range at line " +
                                     std::to_string(line_no));
                indices.push_back(idx - 1);
            }
            if (indices.size() < 3)
                throw CodecError(path + ": face with fewer than 3 vertices at line " +
                                 std::to_string(line_no));
            for (size_t k = 2; k < indices.size(); ++k)
                mesh.triangles.push_back({indices[0], indices[k - 1], indices[k]});
        }
        // other tags ignored
    }
    return mesh;
}

void save_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CodecError(path + ": cannot open file for writing");
    out.precision(9);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto& v = mesh.vertices[i];
        const auto& c = mesh.colors[i];
        out << "v " << v[0] << " " << v[1] << " " << v[2] << " " << c[0] << " " << c[1] << " "
            << c[2] << "\n";
    }
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const std::array<double, 16>& pose) {
    TriangleMesh out = mesh;
    for (auto& v : out.vertices) {
        double x = v[0], y = v[1], z = v[2];
        v[0] = static_cast<float>(pose[0] * x + pose[1] * y + pose[2] * z + pose[3]);
        v[1] = static_cast<float>(pose[4] * x + pose[5] * y + pose[6] * z + pose[7]);
        v[2] = static_cast<float>(pose[8] * x + pose[9] * y + pose[10] * z + pose[11]);
    }
    return out;
}

TriangleMesh make_cube_mesh(float cx, float cy, float cz, float side, std::array<float, 3> color) {
    TriangleMesh mesh;
    const float r = side / 2.0f;
    for (int i = 0; i < 8; ++i) {
        mesh.vertices.push_back({cx + (i & 1 ? r : -r), cy + (i & 2 ? r : -r),
                                 cz + (i & 4 ? r : -r)});
        mesh.colors.push_back(color);
    }
    // two triangles per face
    const int faces[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                             {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    for (const auto& f : faces) {
        mesh.triangles.push_back({f[0], f[1], f[2]});
        mesh.triangles.push_back({f[0], f[2], f[3]});
    }
    return mesh;
}

VirtualLayer render_virtual(const TriangleMesh& mesh, double focal_px, double cx, double cy,
                            int out_width, int out_height) {
    if (out_width < 1 || out_height < 1)
        throw InputError("render_virtual: output dimensions must be positive");
    VirtualLayer layer;
    layer.color = ColorImage(out_width, out_height);
    layer.depth = FloatMap(out_width, out_height);

    for (const auto& tri : mesh.triangles) {
        const auto& a = mesh.vertices[tri[0]];
        const auto& b = mesh.vertices[tri[1]];
        const auto& c = mesh.vertices[tri[2]];
        if (a[2] <= 0.0f || b[2] <= 0.0f || c[2] <= 0.0f) continue; // behind camera, no clipping

        const double ua = focal_px * a[0] / a[2] + cx, va = focal_px * a[1] / a[2] + cy;
        const double ub = focal_px * b[0] / b[2] + cx, vb = focal_px * b[1] / b[2] + cy;
        const double uc = focal_px * c[0] / c[2] + cx, vc = focal_px * c[1] / c[2] + cy;

        const double area = (ub - ua) * (vc - va) - (uc - ua) * (vb - va);
        if (area == 0.0) continue;

        // clamp the bounding box before the int casts: projections of
        // near-camera vertices can land far outside the int range
        const double bx0 = std::clamp(std::floor(std::min({ua, ub, uc}) - 0.5), 0.0,
                                      static_cast<double>(out_width - 1));
        const double bx1 = std::clamp(std::ceil(std::max({ua, ub, uc}) - 0.5), 0.0,
                                      static_cast<double>(out_width - 1));
        const double by0 = std::clamp(std::floor(std::min({va, vb, vc}) - 0.5), 0.0,
                                      static_cast<double>(out_height - 1));
        const double by1 = std::clamp(std::ceil(std::max({va, vb, vc}) - 0.5), 0.0,
                                      static_cast<double>(out_height - 1));
        const int x0 = static_cast<int>(bx0), x1 = static_cast<int>(bx1);
        const int y0 = static_cast<int>(by0), y1 = static_cast<int>(by1);

        const double inv_za = 1.0 / a[2], inv_zb = 1.0 / b[2], inv_zc = 1.0 / c[2];
        const auto& col_a = mesh.colors[tri[0]];
        const auto& col_b = mesh.colors[tri[1]];
        const auto& col_c = mesh.colors[tri[2]];

        for (int y = y0; y <= y1; ++y) {
            const double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                const double px = x + 0.5;
                double l0 = ((ub - px) * (vc - py) - (uc - px) * (vb - py)) / area;
                double l1 = ((uc - px) * (va - py) - (ua - px) * (vc - py)) / area;
                double l2 = 1.0 - l0 - l1;
                if (l0 < 0.0 || l1 < 0.0 || l2 < 0.0) continue;
                // perspective-correct depth and color
                double inv_z = l0 * inv_za + l1 * inv_zb + l2 * inv_zc;
                double z = 1.0 / inv_z;
                float prev = layer.depth.at(x, y);
                if (FloatMap::is_valid(prev) && prev <= z) continue;
                layer.depth.at(x, y) = static_cast<float>(z);
                for (int ch = 0; ch < 3; ++ch) {
                    double num = l0 * col_a[ch] * inv_za + l1 * col_b[ch] * inv_zb +
                                 l2 * col_c[ch] * inv_zc;
                    layer.color.at(x, y, ch) = static_cast<float>(num * z);
                }
            }
        }
    }
    return layer;
}

CompositeResult composite(const ColorImage& real, const DenseDepthMap& dense,
                          const VirtualLayer& virt) {
    const int w = real.width, h = real.height;
    if (dense.width != w || dense.height != h || virt.color.width != w ||
        virt.color.height != h || virt.depth.width != w || virt.depth.height != h)
        throw InputError("composite: input dimensions differ");

    CompositeResult result;
    result.color = real;
    result.mask = OcclusionMask(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float vz = virt.depth.at(x, y);
            if (!FloatMap::is_valid(vz)) continue; // no virtual geometry here
            float rz = dense.at(x, y);
            // unknown real depth counts as infinitely far; virtual pixels are
            // discarded only when strictly behind the real surface
            if (FloatMap::is_valid(rz) && vz > rz) continue;
            result.mask.at(x, y) = 1;
            for (int ch = 0; ch < 3; ++ch) result.color.at(x, y, ch) = virt.color.at(x, y, ch);
        }
    }
    return result;
}

} // namespace dco

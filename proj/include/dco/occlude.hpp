#pragma once

#include <array>
#include <string>
#include <vector>

#include "dco/densify.hpp"
#include "dco/image.hpp"

namespace dco {

/// Camera-space triangle soup with per-vertex color.
struct TriangleMesh {
    std::vector<std::array<float, 3>> vertices;   // meters
    std::vector<std::array<int, 3>> triangles;    // vertex index triples
    std::vector<std::array<float, 3>> colors;     // per vertex, [0,1]
};

/// Rendered virtual object: color plus camera-space depth, nodata where no
/// geometry covers the pixel.
struct VirtualLayer {
    ColorImage color;
    FloatMap depth;
};

using OcclusionMask = BinaryMask;

struct CompositeResult {
    ColorImage color;
    OcclusionMask mask; // 1 where the virtual layer survives the depth test
};

/// ASCII OBJ: v x y z [r g b], f i j k (1-based, slash attributes ignored).
TriangleMesh load_obj(const std::string& path);
void save_obj(const TriangleMesh& mesh, const std::string& path);

/// Applies a row-major 4x4 rigid transform to every vertex.
TriangleMesh transform_mesh(const TriangleMesh& mesh, const std::array<double, 16>& pose);

/// Axis-aligned cube helper for synthetic scenes and demos.
TriangleMesh make_cube_mesh(float cx, float cy, float cz, float side,
                            std::array<float, 3> color = {1.0f, 0.55f, 0.1f});

/// Pinhole-projected z-buffered rasterization: u = f*x/z + cx, v = f*y/z + cy,
/// pixel centers at half-integer coordinates. Triangles with any vertex at
/// z <= 0 are skipped (no clipping).
VirtualLayer render_virtual(const TriangleMesh& mesh, double focal_px, double cx, double cy,
                            int out_width, int out_height);

/// Per-pixel depth test: no virtual geometry or virtual farther than the
/// real surface keeps the real pixel; otherwise the virtual pixel wins
/// (ties included). Invalid real depth counts as infinitely far.
CompositeResult composite(const ColorImage& real, const DenseDepthMap& dense,
                          const VirtualLayer& virt);

} // namespace dco

#pragma once

#include <filesystem>
#include <vector>

#include "hull.hpp"
#include "mesh.hpp"

namespace kitnet {

/// Axis-aligned box centred at the origin, given full side lengths.
TriMesh make_box(double sx, double sy, double sz, std::string name = "box");

/// Latitude/longitude ellipsoid with poles on ±z.
TriMesh make_ellipsoid(double rx, double ry, double rz, int slices = 32, int stacks = 16,
                       std::string name = "ellipsoid");

/// Simple polygon in the xy-plane (either winding) extruded symmetrically
/// along z to the given thickness. Caps are ear-clipped.
TriMesh make_extrusion(const std::vector<Vec2>& polygon, double thickness, std::string name = "extrusion");

/// Torus around the z axis.
TriMesh make_torus(double major, double minor, int rings = 32, int sides = 16, std::string name = "torus");

/// Triangulates a simple polygon; returns index triples, counter-clockwise.
std::vector<std::array<std::uint32_t, 3>> ear_clip(const std::vector<Vec2>& polygon);

/// The 20-mesh test corpus (boxes, ellipsoids, L-brackets, handles and other
/// extrusions), each recentred on its volume centroid, sizes 4-15 cm.
std::vector<TriMesh> procedural_corpus();

/// Writes procedural_corpus() as OBJ files named after each mesh.
void write_procedural_corpus(const std::filesystem::path& dir);

}  // namespace kitnet

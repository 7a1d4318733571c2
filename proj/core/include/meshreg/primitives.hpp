// Procedural test meshes.
#pragma once

#include "meshreg/mesh.hpp"

namespace meshreg {

// Icosahedron subdivided `subdivisions` times, vertices on the sphere of
// `radius` around the origin. subdivisions=3 gives 642 vertices.
TriMesh make_icosphere(double radius, int subdivisions);

// Axis-aligned cube centered at the origin, 12 triangles, outward CCW winding.
TriMesh make_cube(double edge);

// Unit quad in the z=0 plane ([0,1]², CCW toward +z), two triangles.
TriMesh make_quad();

}  // namespace meshreg

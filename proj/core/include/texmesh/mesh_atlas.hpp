#pragma once

#include "texmesh/geometry.hpp"
#include "texmesh/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace texmesh {

// Global scene mesh with a UV atlas: every vertex carries a position and a
// texture coordinate in [0,1]^2, and UV triangles of distinct faces do not
// overlap. Seams are realized by vertex duplication.
struct TexturedMesh {
  std::vector<Vec3> positions;
  std::vector<Vec2> uvs;      // empty when the mesh has no atlas yet
  std::vector<Vec3> normals;  // unit length, per vertex
  std::vector<std::array<std::uint32_t, 3>> faces;

  bool has_uvs() const { return !uvs.empty(); }
  void recompute_vertex_normals();  // area-weighted face normal average
  void validate() const;            // throws on broken invariants
};

struct MeshLoadOptions {
  bool require_uvs = true;  // hard error when the file has no UVs
};

// Loads and validates an OBJ mesh. Normals are recomputed when absent.
TexturedMesh load_mesh(const std::filesystem::path& path, const MeshLoadOptions& options = {});

struct AtlasOptions {
  double max_normal_deviation_deg = 30.0;  // region-growing cone
  int gutter_texels = 2;
};

// Fallback UV parameterization: faces are greedily clustered by normal
// similarity, each chart is projected onto its seed plane, and charts are
// shelf-packed into the atlas with gutters. Face order is preserved.
TexturedMesh generate_uv_atlas(const TexturedMesh& mesh, int resolution, const AtlasOptions& options = {});

// Precomputed texel -> surface-point lookup, the substrate for all fusion.
// One entry per texel whose center lies inside some UV triangle (SoA layout).
struct TexelTable {
  int resolution = 0;
  std::vector<std::uint32_t> texel;  // y * resolution + x
  std::vector<std::uint32_t> face;
  std::vector<Vec2f> lambda12;       // barycentric (l1, l2); l3 = 1 - l1 - l2
  std::vector<Vec3f> position;       // barycentric surface point
  std::vector<Vec3f> normal;         // interpolated unit normal
  std::size_t collisions = 0;        // texels claimed by more than one face

  std::size_t size() const { return texel.size(); }
};

TexelTable build_texel_table(const TexturedMesh& mesh, int resolution);

// OBJ + MTL + PNG export of the fused result. The semantic argmax texture is
// written as an indexed-color PNG using the dataset palette.
void export_textured_mesh(const TexturedMesh& mesh, const ImageRgb8& color_texture,
                          const ImageU8& semantic_argmax, const std::vector<Rgb8>& palette,
                          const std::filesystem::path& directory, const std::string& basename = "mesh");

}  // namespace texmesh

#pragma once

#include "docrect/geometry.hpp"
#include "docrect/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace docrect {

/// OBJ subset: a `# grid n1 n2` comment, `v x y z` lines (z = 0 for planar
/// meshes) and 1-based quads `f a b c d`.
void save_obj(const std::filesystem::path& path, const SpaceMesh& mesh);
void save_obj(const std::filesystem::path& path, const PlaneMesh& mesh);
SpaceMesh load_space_obj(const std::filesystem::path& path);
/// Rejects files whose vertices have a nonzero third coordinate.
PlaneMesh load_plane_obj(const std::filesystem::path& path);

/// Diagnostics CSV; wall time is the last column.
void write_diagnostics(std::ostream& out, const std::vector<DiagnosticRow>& rows);
void save_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRow>& rows);
std::vector<DiagnosticRow> load_diagnostics(const std::filesystem::path& path);

/// One 0/1 flag per line.
void save_mask(const std::filesystem::path& path, const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> load_mask(const std::filesystem::path& path);

/// `key value` overrides of the pipeline defaults:
///   lambda_iso lambda_dist lambda_fair_space lambda_fair_plane lambda_line
///   lambda_ray escalation epsilon max_iterations rounds grid_n1 grid_n2 k phi
///   straightness_tol axis_tol_deg endpoint_factor max_segment_points
///   use_features project_lines refine solver_steps solver_memory
///   solver_rel_tol divergence_limit
void apply_config(std::istream& in, PipelineConfig& config, const std::string& origin = "<config>");
void load_config(const std::filesystem::path& path, PipelineConfig& config);

}  // namespace docrect

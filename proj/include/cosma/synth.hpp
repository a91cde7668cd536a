#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cosma/mesh.hpp"

namespace cosma {

enum class SynthKind { wavy_sheet, crush_tube };
enum class BaseStyle { fan, diagonal };

struct SyntheticSpec {
  SynthKind kind = SynthKind::wavy_sheet;
  int timesteps = 24;
  double amplitude = 0.2;
  char branch = 'A';                     // crush_tube fold location, 'A' or 'B'
  int base_resolution = 2;               // base cells per side (sheet)
  BaseStyle base_style = BaseStyle::fan; // sheet: 4-triangle fans or diagonal split
  int frame_resolution = 24;             // irregular grid vertices per side
  std::uint64_t seed = 0;
};

// Throws InvalidSpec.
void validate_spec(const SyntheticSpec& spec);

struct SyntheticSequence {
  std::string id;
  std::vector<TriMesh> frames;  // irregular, shared topology
  TriMesh base;                 // coarse base near frame 0
  std::string branch;           // crush_tube only
};

SyntheticSequence generate_synthetic(const SyntheticSpec& spec);

// Undeformed surface positions of the generator's parameter domain.
std::vector<Vec3> project_to_rest(const SyntheticSpec& spec, std::span<const Vec3> points);

// Deformation of rest positions at timestep t.
std::vector<Vec3> synthetic_deform(const SyntheticSpec& spec, int t, std::span<const Vec3> rest);

// Base mesh at rest (undeformed) for the spec.
TriMesh synthetic_rest_base(const SyntheticSpec& spec);

SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind k);
BaseStyle base_style_from_string(const std::string& s);
std::string to_string(BaseStyle s);

}  // namespace cosma

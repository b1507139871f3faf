#pragma once

// Quasi-static stability of towers of axis-aligned, uniform-density cuboids.
//
// Units are centimeters and grams. A tower is stable when, at every
// interface from the ground up, the combined center of mass of everything
// resting on that interface projects into the closed contact rectangle.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cobra/common.hpp"

namespace cobra::physics {

class EmptyTower : public std::invalid_argument {
 public:
  EmptyTower() : std::invalid_argument("tower has no blocks") {}
};

struct Block {
  int id = 0;
  Vec3 center{};
  /// Width (x), depth (y), height (z).
  Vec3 dims{7.5, 7.5, 7.5};
  double mass = 200.0;

  double bottom() const { return center[2] - 0.5 * dims[2]; }
  double top() const { return center[2] + 0.5 * dims[2]; }
};

/// Throws std::invalid_argument unless dims > 0 and mass > 0.
void validate(const Block& block);

struct TowerState {
  /// Index 0 rests on the ground.
  std::vector<Block> blocks;

  bool empty() const { return blocks.empty(); }
  std::size_t size() const { return blocks.size(); }
  const Block& top_block() const;
  /// Height of the top face, 0 for an empty tower.
  double height() const;
  bool contains_id(int id) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double length() const { return hi - lo; }
};

struct Rect {
  Interval x;
  Interval y;

  bool contains(double px, double py) const { return x.contains(px) && y.contains(py); }
};

struct StabilityVerdict {
  bool stable = true;
  /// 0 is the ground contact; j >= 1 is the contact between blocks j-1 and j.
  std::optional<std::size_t> first_failing_interface;

  friend bool operator==(const StabilityVerdict&, const StabilityVerdict&) = default;
};

/// Footprint of a block as a rectangle in the x/y plane.
Rect footprint(const Block& block);

/// Snaps z so every block rests on the one below; x and y are untouched.
TowerState settle(TowerState tower);

/// Intersection of lower's top face with upper's bottom face. Absent when
/// the footprints are disjoint, or touch only at a point.
std::optional<Rect> contact_region(const Block& lower, const Block& upper);

/// Combined (x, y) center of mass of blocks [from, end).
Vec2 center_of_mass_xy(const TowerState& tower, std::size_t from);

StabilityVerdict is_stable(const TowerState& tower);

}  // namespace cobra::physics

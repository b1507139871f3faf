#include "cobra/physics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace cobra::physics {

void validate(const Block& block) {
  for (double d : block.dims) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("block " + std::to_string(block.id) +
                                  ": dimensions must be positive");
    }
  }
  if (!(block.mass > 0.0) || !std::isfinite(block.mass)) {
    throw std::invalid_argument("block " + std::to_string(block.id) + ": mass must be positive");
  }
}

const Block& TowerState::top_block() const {
  if (blocks.empty()) throw EmptyTower();
  return blocks.back();
}

double TowerState::height() const { return blocks.empty() ? 0.0 : blocks.back().top(); }

bool TowerState::contains_id(int id) const {
  return std::any_of(blocks.begin(), blocks.end(), [id](const Block& b) { return b.id == id; });
}

Rect footprint(const Block& block) {
  const double hw = 0.5 * block.dims[0];
  const double hd = 0.5 * block.dims[1];
  return {{block.center[0] - hw, block.center[0] + hw}, {block.center[1] - hd, block.center[1] + hd}};
}

TowerState settle(TowerState tower) {
  if (tower.empty()) throw EmptyTower();
  std::set<int> ids;
  double floor = 0.0;
  for (auto& block : tower.blocks) {
    validate(block);
    if (!ids.insert(block.id).second) {
      throw std::invalid_argument("duplicate block id " + std::to_string(block.id));
    }
    block.center[2] = floor + 0.5 * block.dims[2];
    floor = block.top();
  }
  return tower;
}

std::optional<Rect> contact_region(const Block& lower, const Block& upper) {
  const Rect a = footprint(lower);
  const Rect b = footprint(upper);
  const Interval x{std::max(a.x.lo, b.x.lo), std::min(a.x.hi, b.x.hi)};
  const Interval y{std::max(a.y.lo, b.y.lo), std::min(a.y.hi, b.y.hi)};
  if (x.length() < 0.0 || y.length() < 0.0) return std::nullopt;
  if (x.length() == 0.0 && y.length() == 0.0) return std::nullopt;
  return Rect{x, y};
}

Vec2 center_of_mass_xy(const TowerState& tower, std::size_t from) {
  double m = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = from; i < tower.blocks.size(); ++i) {
    const auto& b = tower.blocks[i];
    m += b.mass;
    mx += b.mass * b.center[0];
    my += b.mass * b.center[1];
  }
  return {mx / m, my / m};
}

StabilityVerdict is_stable(const TowerState& tower) {
  if (tower.empty()) throw EmptyTower();
  for (std::size_t j = 0; j < tower.size(); ++j) {
    const std::optional<Rect> region =
        j == 0 ? std::optional<Rect>(footprint(tower.blocks[0]))
               : contact_region(tower.blocks[j - 1], tower.blocks[j]);
    if (!region) return {false, j};
    const Vec2 com = center_of_mass_xy(tower, j);
    if (!region->contains(com[0], com[1])) return {false, j};
  }
  return {true, std::nullopt};
}

}  // namespace cobra::physics

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "splat4d/camera.hpp"
#include "splat4d/rasterizer.hpp"
#include "splat4d/splat.hpp"

namespace splat4d {

namespace shape {
struct Rect {
  Vec2f p0;
  Vec2f p1;
};
struct Polygon {
  std::vector<Vec2f> vertices;
};
/// Freehand outline, closed implicitly.
struct Lasso {
  std::vector<Vec2f> vertices;
};
struct Brush {
  std::vector<Vec2f> stroke;
  float radius = 1.0f;
};
struct Sphere {
  Vec3f center;
  float radius = 1.0f;
};
}  // namespace shape

using SelectionShape = std::variant<shape::Rect, shape::Polygon, shape::Lasso, shape::Brush, shape::Sphere>;

enum class SelectMode { Replace, Add, Subtract };

struct SelectionMask {
  std::vector<bool> bits;
  std::uint64_t cloud_version = 0;

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> indices() const;
  bool operator==(const SelectionMask&) const = default;
};

SelectionMask empty_mask(const SplatCloud& cloud);

/// Even-odd (ray crossing) point-in-polygon test; shared by polygon and lasso selection.
bool point_in_polygon(const Vec2f& point, std::span<const Vec2f> polygon);

/// Distance from a point to a polyline (a single point counts as a degenerate segment).
float distance_to_polyline(const Vec2f& point, std::span<const Vec2f> polyline);

/// Hit test against projected splat means (screen shapes) or world positions (sphere), then
/// combined with `existing` by mode. Throws Error(StaleMask) or Error(DegenerateShape).
SelectionMask select(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg,
                     const SelectionShape& shape, SelectMode mode, const SelectionMask& existing);

/// Index of the visible splat whose projected mean is closest to a screen point (ties to the
/// nearer depth), used to turn a click into a sphere center.
std::optional<std::size_t> pick_splat(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg,
                                      const Vec2f& screen_point);

namespace edit {
struct Delete {};
struct Translate {
  Vec3f delta = Vec3f::Zero();
};
}  // namespace edit

using EditOp = std::variant<edit::Delete, edit::Translate>;

/// Enough information to reverse one edit exactly.
struct UndoRecord {
  EditOp op;
  /// Affected indices in the pre-edit cloud, ascending.
  std::vector<std::size_t> indices;
  /// Deleted splats in index order (delete only).
  std::vector<Splat> removed;
  std::uint64_t version_after = 0;
};

struct EditResult {
  CloudPtr cloud;
  UndoRecord undo;
};

/// Returns a new cloud with version + 1. Throws Error(StaleMask) or Error(EmptySelection).
EditResult apply_edit(const SplatCloud& cloud, const SelectionMask& mask, const EditOp& op);

/// Reverses `record`, given the cloud state the recorded edit produced. The result gets the
/// next version number.
CloudPtr revert_edit(const SplatCloud& cloud, const UndoRecord& record);

/// Bounded undo stack; pushing past the depth drops the oldest record.
class EditHistory {
 public:
  static constexpr std::size_t kDefaultDepth = 32;

  explicit EditHistory(std::size_t max_depth = kDefaultDepth) : max_depth_(max_depth) {}

  void push(UndoRecord record);
  std::size_t depth() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  /// Reverses the most recent edit. Throws Error(EmptyHistory), or Error(StaleMask) when
  /// `current` is not the cloud this history last produced.
  CloudPtr undo(const SplatCloud& current);
  void clear() { records_.clear(); }

 private:
  std::size_t max_depth_;
  std::uint64_t expected_version_ = 0;
  std::deque<UndoRecord> records_;
};

}  // namespace splat4d

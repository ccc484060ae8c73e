#include "splat4d/selection.hpp"

#include <algorithm>
#include <limits>

#include "splat4d/error.hpp"

namespace splat4d {

std::size_t SelectionMask::count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true)); }

std::vector<std::size_t> SelectionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.push_back(i);
  }
  return out;
}

SelectionMask empty_mask(const SplatCloud& cloud) { return SelectionMask{std::vector<bool>(cloud.size(), false), cloud.version()}; }

bool point_in_polygon(const Vec2f& point, std::span<const Vec2f> polygon) {
  const double px = point.x();
  const double py = point.y();
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = polygon[i].x(), yi = polygon[i].y();
    const double xj = polygon[j].x(), yj = polygon[j].y();
    if ((yi > py) != (yj > py)) {
      const double x_cross = xi + (py - yi) * (xj - xi) / (yj - yi);
      if (px < x_cross) inside = !inside;
    }
  }
  return inside;
}

float distance_to_polyline(const Vec2f& point, std::span<const Vec2f> polyline) {
  if (polyline.empty()) return std::numeric_limits<float>::infinity();
  if (polyline.size() == 1) return (point - polyline[0]).norm();
  float best = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec2f a = polyline[i];
    const Vec2f ab = polyline[i + 1] - a;
    const float len2 = ab.squaredNorm();
    const float t = len2 > 0.0f ? std::clamp((point - a).dot(ab) / len2, 0.0f, 1.0f) : 0.0f;
    best = std::min(best, (point - (a + t * ab)).norm());
  }
  return best;
}

namespace {

void check_shape(const SelectionShape& shape) {
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, shape::Polygon> || std::is_same_v<S, shape::Lasso>) {
          if (s.vertices.size() < 3) throw Error(ErrorCode::DegenerateShape, "polygon selection needs at least 3 vertices");
        } else if constexpr (std::is_same_v<S, shape::Brush>) {
          if (s.stroke.empty() || !(s.radius > 0.0f)) throw Error(ErrorCode::DegenerateShape, "brush needs a stroke and a positive radius");
        } else if constexpr (std::is_same_v<S, shape::Sphere>) {
          if (!(s.radius > 0.0f) || !s.center.allFinite()) throw Error(ErrorCode::DegenerateShape, "sphere needs a positive radius");
        } else {
          if (!s.p0.allFinite() || !s.p1.allFinite()) throw Error(ErrorCode::DegenerateShape, "rectangle corners must be finite");
        }
      },
      shape);
}

bool screen_hit(const SelectionShape& shape, const Vec2f& p) {
  if (const auto* r = std::get_if<shape::Rect>(&shape)) {
    const Vec2f lo = r->p0.cwiseMin(r->p1);
    const Vec2f hi = r->p0.cwiseMax(r->p1);
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
  if (const auto* poly = std::get_if<shape::Polygon>(&shape)) return point_in_polygon(p, poly->vertices);
  if (const auto* lasso = std::get_if<shape::Lasso>(&shape)) return point_in_polygon(p, lasso->vertices);
  if (const auto* brush = std::get_if<shape::Brush>(&shape)) return distance_to_polyline(p, brush->stroke) <= brush->radius;
  return false;
}

void check_mask(const SplatCloud& cloud, const SelectionMask& mask) {
  if (mask.cloud_version != cloud.version() || mask.bits.size() != cloud.size()) {
    throw Error(ErrorCode::StaleMask, "selection was built for cloud version " + std::to_string(mask.cloud_version) +
                                          ", current version is " + std::to_string(cloud.version()));
  }
}

}  // namespace

SelectionMask select(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg, const SelectionShape& shape,
                     SelectMode mode, const SelectionMask& existing) {
  check_shape(shape);
  if (mode != SelectMode::Replace) check_mask(cloud, existing);

  std::vector<bool> hits(cloud.size(), false);
  if (const auto* sphere = std::get_if<shape::Sphere>(&shape)) {
    for (std::size_t i = 0; i < cloud.size(); ++i) hits[i] = (cloud[i].position - sphere->center).norm() <= sphere->radius;
  } else {
    const ViewParams view = make_view(pose, cfg);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (const auto p = project(cloud[i], view, cfg)) hits[i] = screen_hit(shape, p->mean2d);
    }
  }

  SelectionMask out{std::move(hits), cloud.version()};
  if (mode == SelectMode::Add) {
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = out.bits[i] || existing.bits[i];
  } else if (mode == SelectMode::Subtract) {
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] = existing.bits[i] && !out.bits[i];
  }
  return out;
}

std::optional<std::size_t> pick_splat(const SplatCloud& cloud, const CameraPose& pose, const RenderConfig& cfg,
                                      const Vec2f& screen_point) {
  const ViewParams view = make_view(pose, cfg);
  std::optional<std::size_t> best;
  float best_dist = std::numeric_limits<float>::infinity();
  float best_depth = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto p = project(cloud[i], view, cfg);
    if (!p) continue;
    const float d = (p->mean2d - screen_point).norm();
    if (d < best_dist || (d == best_dist && p->depth < best_depth)) {
      best = i;
      best_dist = d;
      best_depth = p->depth;
    }
  }
  return best;
}

EditResult apply_edit(const SplatCloud& cloud, const SelectionMask& mask, const EditOp& op) {
  check_mask(cloud, mask);
  const std::vector<std::size_t> indices = mask.indices();
  if (indices.empty()) throw Error(ErrorCode::EmptySelection, "edit needs a non-empty selection");

  UndoRecord record;
  record.op = op;
  record.indices = indices;
  record.version_after = cloud.version() + 1;
  std::vector<Splat> splats;
  if (std::holds_alternative<edit::Delete>(op)) {
    splats.reserve(cloud.size() - indices.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (mask.bits[i]) {
        record.removed.push_back(cloud[i]);
      } else {
        splats.push_back(cloud[i]);
      }
    }
  } else {
    const Vec3f delta = std::get<edit::Translate>(op).delta;
    if (!delta.allFinite()) throw Error(ErrorCode::InvalidArgument, "translation must be finite");
    splats.assign(cloud.splats().begin(), cloud.splats().end());
    // Keep the original splats so undo restores positions bit-exactly.
    for (std::size_t i : indices) {
      record.removed.push_back(cloud[i]);
      splats[i].position += delta;
    }
  }
  return {std::make_shared<const SplatCloud>(std::move(splats), record.version_after), std::move(record)};
}

CloudPtr revert_edit(const SplatCloud& cloud, const UndoRecord& record) {
  std::vector<Splat> splats;
  if (std::holds_alternative<edit::Delete>(record.op)) {
    if (record.indices.empty() || record.indices.back() >= cloud.size() + record.removed.size()) {
      throw Error(ErrorCode::StaleMask, "undo record does not fit the cloud");
    }
    const std::size_t total = cloud.size() + record.removed.size();
    splats.reserve(total);
    std::size_t next_removed = 0;
    std::size_t next_kept = 0;
    for (std::size_t i = 0; i < total; ++i) {
      if (next_removed < record.indices.size() && record.indices[next_removed] == i) {
        splats.push_back(record.removed[next_removed++]);
      } else {
        splats.push_back(cloud[next_kept++]);
      }
    }
  } else {
    if (record.indices.empty() || record.indices.back() >= cloud.size()) {
      throw Error(ErrorCode::StaleMask, "undo record does not fit the cloud");
    }
    splats.assign(cloud.splats().begin(), cloud.splats().end());
    for (std::size_t k = 0; k < record.indices.size(); ++k) splats[record.indices[k]] = record.removed[k];
  }
  return std::make_shared<const SplatCloud>(std::move(splats), cloud.version() + 1);
}

void EditHistory::push(UndoRecord record) {
  expected_version_ = record.version_after;
  records_.push_back(std::move(record));
  while (records_.size() > max_depth_) records_.pop_front();
}

CloudPtr EditHistory::undo(const SplatCloud& current) {
  if (records_.empty()) throw Error(ErrorCode::EmptyHistory, "nothing to undo");
  if (current.version() != expected_version_) {
    throw Error(ErrorCode::StaleMask, "cloud version " + std::to_string(current.version()) +
                                          " was not produced by this edit history");
  }
  CloudPtr reverted = revert_edit(current, records_.back());
  records_.pop_back();
  expected_version_ = reverted->version();
  return reverted;
}

}  // namespace splat4d

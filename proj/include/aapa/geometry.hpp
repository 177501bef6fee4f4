// Axis-aligned boxes, object classes and the two localization metrics
// everything else in the library is scored against.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace aapa {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

/// Top-left anchored box in pixel units. A zero-size box (w == 0 && h == 0)
/// is the "absent" sentinel used for objects with no known location.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    [[nodiscard]] bool absent() const noexcept { return w == 0.0 && h == 0.0; }
    [[nodiscard]] double area() const noexcept { return w * h; }
    [[nodiscard]] Vec2 center() const noexcept { return {x + w / 2.0, y + h / 2.0}; }

    [[nodiscard]] static BoundingBox from_center(Vec2 c, double w, double h) noexcept {
        return {c.x - w / 2.0, c.y - h / 2.0, w, h};
    }
};

inline bool operator==(const BoundingBox& a, const BoundingBox& b) noexcept {
    return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
}

enum class SizeClass { unspecified, small, medium, large };

/// Perceptual class of an object. `shape` is an open tag set (cube, cylinder,
/// sphere, inverted-cone, snitch, plus domain-defined tags such as gearbox
/// part names); size class and material are optional refinements.
/// Equality is exact tag equality on all three fields.
struct ObjectClass {
    std::string shape;
    SizeClass size_class = SizeClass::unspecified;
    std::string material;
};

inline bool operator==(const ObjectClass& a, const ObjectClass& b) noexcept {
    return a.shape == b.shape && a.size_class == b.size_class && a.material == b.material;
}
inline bool operator!=(const ObjectClass& a, const ObjectClass& b) noexcept { return !(a == b); }

/// One detector observation: a classified box on a given frame.
struct Detection {
    ObjectClass object_class;
    BoundingBox box;
    int frame = 0;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    return ix * iy;
}

/// Intersection-over-union. Either box absent (or a degenerate union) gives 0.
/// Identical boxes score exactly 1.
inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
    if (a.absent() || b.absent()) return 0.0;
    if (a == b) return a.area() > 0.0 ? 1.0 : 0.0;
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

/// Euclidean distance between box centers. Absent boxes have no center.
inline double l2_center(const BoundingBox& a, const BoundingBox& b) {
    if (a.absent() || b.absent()) throw std::invalid_argument("absent box has no center");
    const Vec2 ca = a.center();
    const Vec2 cb = b.center();
    return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

/// Fraction of `a`'s area covered by `b`, in [0, 1]. Zero if `a` has no area.
inline double covered_fraction(const BoundingBox& a, const BoundingBox& b) noexcept {
    const double area = a.area();
    if (area <= 0.0) return 0.0;
    return intersection_area(a, b) / area;
}

}  // namespace aapa

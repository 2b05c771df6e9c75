#include "previs/render.hpp"

#include "previs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace previs {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kBackground{38, 42, 50};
constexpr Rgb kCharacterColor{232, 150, 60};
constexpr Rgb kWedgeColor{150, 40, 40};

const Vec3& light_dir()
{
  static const Vec3 l = Vec3(0.3, 0.5, 0.8).normalized();
  return l;
}

std::uint32_t fnv1a(std::string_view s)
{
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

Rgb palette(std::string_view id, NodeKind kind)
{
  if (kind == NodeKind::Room || kind == NodeKind::Scene) return {96, 100, 92};
  const std::uint32_t h = fnv1a(id);
  return {static_cast<std::uint8_t>(70 + (h & 0x7f)), static_cast<std::uint8_t>(70 + ((h >> 8) & 0x7f)),
          static_cast<std::uint8_t>(70 + ((h >> 16) & 0x7f))};
}

Rgb shade(const Rgb& c, double lambert)
{
  const double k = 0.35 + 0.65 * std::clamp(lambert, 0.0, 1.0);
  return {static_cast<std::uint8_t>(std::lround(c[0] * k)), static_cast<std::uint8_t>(std::lround(c[1] * k)),
          static_cast<std::uint8_t>(std::lround(c[2] * k))};
}

void add_quad(SceneMesh& m, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Rgb& col,
              std::int32_t id)
{
  m.triangles.push_back({{a, b, c}, col, id});
  m.triangles.push_back({{a, c, d}, col, id});
}

void add_box(SceneMesh& m, const Vec3& center, const Vec3& h, const Rgb& col, std::int32_t id)
{
  auto v = [&](int sx, int sy, int sz) { return Vec3(center + Vec3(sx * h.x(), sy * h.y(), sz * h.z())); };
  add_quad(m, v(-1, -1, -1), v(1, -1, -1), v(1, 1, -1), v(-1, 1, -1), col, id);
  add_quad(m, v(-1, -1, 1), v(1, -1, 1), v(1, 1, 1), v(-1, 1, 1), col, id);
  add_quad(m, v(-1, -1, -1), v(1, -1, -1), v(1, -1, 1), v(-1, -1, 1), col, id);
  add_quad(m, v(-1, 1, -1), v(1, 1, -1), v(1, 1, 1), v(-1, 1, 1), col, id);
  add_quad(m, v(-1, -1, -1), v(-1, 1, -1), v(-1, 1, 1), v(-1, -1, 1), col, id);
  add_quad(m, v(1, -1, -1), v(1, 1, -1), v(1, 1, 1), v(1, -1, 1), col, id);
}

struct Raster {
  Intrinsics k;
  Frame* frame;
  std::vector<double> depth;

  Raster(const Intrinsics& intr, Frame& f)
      : k(intr), frame(&f), depth(static_cast<std::size_t>(intr.width) * intr.height,
                                  std::numeric_limits<double>::infinity())
  {
  }

  void put(int x, int y, double z, const Rgb& c, std::int32_t id)
  {
    const std::size_t i = static_cast<std::size_t>(y) * k.width + x;
    if (!(z < depth[i])) return;
    depth[i] = z;
    frame->ids[i] = id;
    frame->rgb[3 * i] = c[0];
    frame->rgb[3 * i + 1] = c[1];
    frame->rgb[3 * i + 2] = c[2];
  }

  // Screen-space triangle with per-vertex 1/z.
  void fill(const Vec2& p0, const Vec2& p1, const Vec2& p2, double iz0, double iz1, double iz2, const Rgb& c,
            std::int32_t id)
  {
    const double area = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
    if (std::abs(area) < 1e-12) return;
    const double lo_x = std::min({p0.x(), p1.x(), p2.x()}), hi_x = std::max({p0.x(), p1.x(), p2.x()});
    const double lo_y = std::min({p0.y(), p1.y(), p2.y()}), hi_y = std::max({p0.y(), p1.y(), p2.y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(lo_x - 0.5)));
    const int x1 = std::min(k.width - 1, static_cast<int>(std::ceil(hi_x - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo_y - 0.5)));
    const int y1 = std::min(k.height - 1, static_cast<int>(std::ceil(hi_y - 0.5)));
    const double inv = 1.0 / area;
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = ((p1.x() - px) * (p2.y() - py) - (p1.y() - py) * (p2.x() - px)) * inv;
        const double w1 = ((p2.x() - px) * (p0.y() - py) - (p2.y() - py) * (p0.x() - px)) * inv;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double iz = w0 * iz0 + w1 * iz1 + w2 * iz2;
        if (iz <= 0.0) continue;
        put(x, y, 1.0 / iz, c, id);
      }
    }
  }
};

void draw_triangle(Raster& r, const CameraPose& pose, const CameraBasis& basis, const Triangle& tri)
{
  Vec3 cam[3];
  for (int i = 0; i < 3; ++i) {
    const Vec3 d = tri.v[i] - pose.position;
    cam[i] = Vec3(d.dot(basis.right), d.dot(basis.up), d.dot(basis.forward));
  }
  if (cam[0].z() < kNearPlaneM && cam[1].z() < kNearPlaneM && cam[2].z() < kNearPlaneM) return;

  Vec3 n = (tri.v[1] - tri.v[0]).cross(tri.v[2] - tri.v[0]);
  const double nn = n.norm();
  if (nn == 0.0) return;
  n /= nn;
  if (n.dot(pose.position - tri.v[0]) < 0.0) n = -n;
  const Rgb col = shade(tri.color, n.dot(light_dir()));

  // Clip against the near plane.
  Vec3 poly[4];
  int count = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = cam[i];
    const Vec3& b = cam[(i + 1) % 3];
    const bool ina = a.z() >= kNearPlaneM, inb = b.z() >= kNearPlaneM;
    if (ina) poly[count++] = a;
    if (ina != inb) {
      const double s = (kNearPlaneM - a.z()) / (b.z() - a.z());
      poly[count++] = a + s * (b - a);
    }
  }
  Vec2 scr[4];
  double iz[4];
  for (int i = 0; i < count; ++i) {
    iz[i] = 1.0 / poly[i].z();
    scr[i] = Vec2(r.k.cx + r.k.f_px * poly[i].x() * iz[i], r.k.cy - r.k.f_px * poly[i].y() * iz[i]);
  }
  for (int i = 1; i + 1 < count; ++i) r.fill(scr[0], scr[i], scr[i + 1], iz[0], iz[i], iz[i + 1], col, tri.id);
}

// Nearest entry of a ray (origin o, direction d with d.forward == 1) into the
// capsule, so the returned parameter is the camera-space depth.
double ray_capsule(const Vec3& o, const Vec3& d, const Capsule& cap, Vec3* normal)
{
  const double inf = std::numeric_limits<double>::infinity();
  double best = inf;
  const Vec3 ba = cap.top_center - cap.bottom_center;
  const Vec3 oa = o - cap.bottom_center;
  const double baba = ba.dot(ba), bard = ba.dot(d), baoa = ba.dot(oa);
  const double dd = d.dot(d), doa = d.dot(oa), oaoa = oa.dot(oa);
  const double rr = cap.radius * cap.radius;

  const double A = baba * dd - bard * bard;
  if (A > 1e-14 * baba * dd) {
    const double B = baba * doa - baoa * bard;
    const double C = baba * oaoa - baoa * baoa - rr * baba;
    const double h = B * B - A * C;
    if (h >= 0.0) {
      const double t = (-B - std::sqrt(h)) / A;
      const double y = baoa + t * bard;
      if (t >= kNearPlaneM && y > 0.0 && y < baba) best = t;
    }
  }
  for (const Vec3* c : {&cap.bottom_center, &cap.top_center}) {
    const Vec3 oc = o - *c;
    const double b = d.dot(oc);
    const double cc = oc.dot(oc) - rr;
    const double h = b * b - dd * cc;
    if (h < 0.0) continue;
    const double t = (-b - std::sqrt(h)) / dd;
    if (t >= kNearPlaneM && t < best) best = t;
  }
  if (best < inf && normal) {
    const Vec3 p = o + best * d;
    const double s = baba > 0.0 ? std::clamp((p - cap.bottom_center).dot(ba) / baba, 0.0, 1.0) : 0.0;
    *normal = (p - (cap.bottom_center + s * ba)) / cap.radius;
  }
  return best;
}

// Tangent-plane extents of a sphere along one image axis: solves
// (cf^2 - rho^2) k^2 - 2 ca cf k + (ca^2 - rho^2) = 0 for the slopes k.
bool tangent_slopes(double ca, double cf, double rho, double& k_lo, double& k_hi)
{
  if (cf <= rho + kNearPlaneM) return false;
  const double a = cf * cf - rho * rho;
  const double b = -2.0 * ca * cf;
  const double c = ca * ca - rho * rho;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double s = std::sqrt(disc);
  k_lo = (-b - s) / (2.0 * a);
  k_hi = (-b + s) / (2.0 * a);
  return true;
}

struct ScreenBox {
  double x0, x1, y0, y1;
};

bool capsule_screen_box(const Capsule& cap, const CameraPose& pose, const Intrinsics& k, ScreenBox& box)
{
  box = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
         std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3* c : {&cap.bottom_center, &cap.top_center}) {
    const Vec3 cc = to_camera(pose, *c);
    double klo, khi;
    if (!tangent_slopes(cc.x(), cc.z(), cap.radius, klo, khi)) return false;
    box.x0 = std::min(box.x0, k.cx + k.f_px * klo);
    box.x1 = std::max(box.x1, k.cx + k.f_px * khi);
    if (!tangent_slopes(cc.y(), cc.z(), cap.radius, klo, khi)) return false;
    box.y0 = std::min(box.y0, k.cy - k.f_px * khi);
    box.y1 = std::max(box.y1, k.cy - k.f_px * klo);
  }
  return true;
}

void draw_capsule(Raster& r, const CameraPose& pose, const CameraBasis& basis, const Capsule& cap)
{
  int x0 = 0, x1 = r.k.width - 1, y0 = 0, y1 = r.k.height - 1;
  ScreenBox box;
  if (capsule_screen_box(cap, pose, r.k, box)) {
    x0 = std::max(x0, static_cast<int>(std::floor(box.x0)) - 2);
    x1 = std::min(x1, static_cast<int>(std::ceil(box.x1)) + 2);
    y0 = std::max(y0, static_cast<int>(std::floor(box.y0)) - 2);
    y1 = std::min(y1, static_cast<int>(std::ceil(box.y1)) + 2);
  }
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const Vec3 d = basis.forward + ((x + 0.5 - r.k.cx) / r.k.f_px) * basis.right -
                     ((y + 0.5 - r.k.cy) / r.k.f_px) * basis.up;
      Vec3 n;
      const double t = ray_capsule(pose.position, d, cap, &n);
      if (t == std::numeric_limits<double>::infinity()) continue;
      r.put(x, y, t, shade(kCharacterColor, n.dot(light_dir())), kCharacterId);
    }
  }
}

void add_wedge(SceneMesh& m, const CharacterState& st)
{
  const Vec3 dir(std::cos(st.facing_rad), std::sin(st.facing_rad), 0.0);
  const Vec3 side(-dir.y(), dir.x(), 0.0);
  const double z = st.position.z() + st.root_height_m + 0.75 * st.height_m;
  const Vec3 base = Vec3(st.position.x(), st.position.y(), z) + 0.8 * st.capsule_radius_m * dir;
  const Vec3 tip = base + (0.2 * st.capsule_radius_m + 0.15) * dir;
  const Vec3 l = base + 0.12 * side, rgt = base - 0.12 * side, up = base + Vec3(0, 0, 0.1);
  m.triangles.push_back({{l, rgt, tip}, kWedgeColor, kWedgeId});
  m.triangles.push_back({{l, up, tip}, kWedgeColor, kWedgeId});
  m.triangles.push_back({{rgt, up, tip}, kWedgeColor, kWedgeId});
  m.triangles.push_back({{l, rgt, up}, kWedgeColor, kWedgeId});
}

}  // namespace

Intrinsics make_intrinsics(double focal_mm, ImageSize size, double sensor_mm)
{
  Intrinsics k;
  k.width = size.width;
  k.height = size.height;
  k.f_px = focal_mm / sensor_mm * size.height;
  k.cx = 0.5 * size.width;
  k.cy = 0.5 * size.height;
  return k;
}

Vec3 to_camera(const CameraPose& pose, const Vec3& world)
{
  const CameraBasis b = camera_basis(pose.rotation);
  const Vec3 d = world - pose.position;
  return {d.dot(b.right), d.dot(b.up), d.dot(b.forward)};
}

std::optional<Vec2> project(const CameraPose& pose, const Intrinsics& k, const Vec3& world)
{
  const Vec3 c = to_camera(pose, world);
  if (c.z() < kNearPlaneM) return std::nullopt;
  return Vec2(k.cx + k.f_px * c.x() / c.z(), k.cy - k.f_px * c.y() / c.z());
}

SceneMesh build_scene_mesh(const SceneGraph& scene)
{
  SceneMesh m;
  std::int32_t id = 2;
  bool has_room = false;
  for (const auto& n : scene.nodes()) has_room = has_room || n.kind == NodeKind::Room;
  for (const auto& n : scene.nodes()) {
    const Vec3 w = scene.world_position(n.id);
    const Vec3& h = n.half_extents;
    const bool floor = n.kind == NodeKind::Room || (n.kind == NodeKind::Scene && !has_room);
    if (floor) {
      if (h.x() > 0.0 && h.y() > 0.0) {
        const double z = w.z() - h.z();
        add_quad(m, Vec3(w.x() - h.x(), w.y() - h.y(), z), Vec3(w.x() + h.x(), w.y() - h.y(), z),
                 Vec3(w.x() + h.x(), w.y() + h.y(), z), Vec3(w.x() - h.x(), w.y() + h.y(), z),
                 palette(n.id, n.kind), id);
      }
    } else if (n.kind == NodeKind::Object) {
      add_box(m, w, h, palette(n.id, n.kind), id);
    }
    ++id;
  }
  return m;
}

Capsule character_capsule(const CharacterState& st)
{
  const double rho = st.capsule_radius_m;
  const Vec3 base = st.position + Vec3(0, 0, st.root_height_m);
  return {base + Vec3(0, 0, rho), base + Vec3(0, 0, std::max(rho, st.height_m - rho)), rho};
}

bool sphere_vertical_extent(const CameraPose& pose, const Intrinsics& k, const Vec3& center, double radius,
                            double& y_top, double& y_bottom)
{
  const Vec3 c = to_camera(pose, center);
  double klo, khi;
  if (!tangent_slopes(c.y(), c.z(), radius, klo, khi)) return false;
  y_top = k.cy - k.f_px * khi;
  y_bottom = k.cy - k.f_px * klo;
  return true;
}

FillMeasure analytic_fill(const CharacterState& st, const CameraPose& pose, ImageSize size)
{
  const Intrinsics k = make_intrinsics(pose.focal_mm, size);
  const Capsule cap = character_capsule(st);
  FillMeasure m;
  double t0, b0, t1, b1;
  if (!sphere_vertical_extent(pose, k, cap.bottom_center, cap.radius, t0, b0) ||
      !sphere_vertical_extent(pose, k, cap.top_center, cap.radius, t1, b1))
    return m;
  m.y_top = std::min(t0, t1);
  m.y_bottom = std::max(b0, b1);
  m.fill_ratio = (m.y_bottom - m.y_top) / size.height;
  m.valid = true;
  return m;
}

double measure_character_height_px(const CharacterState& st, const CameraPose& pose, ImageSize size, int guard_px)
{
  const Intrinsics k = make_intrinsics(pose.focal_mm, size);
  const Capsule cap = character_capsule(st);
  ScreenBox box;
  if (!capsule_screen_box(cap, pose, k, box)) return -1.0;
  // Canvas rows/columns in the frame's pixel lattice, extended past the frame.
  const int y0 = static_cast<int>(std::floor(box.y0)) - guard_px;
  const int y1 = static_cast<int>(std::ceil(box.y1)) + guard_px;
  const int x0 = static_cast<int>(std::floor(box.x0)) - guard_px;
  const int x1 = static_cast<int>(std::ceil(box.x1)) + guard_px;
  const CameraBasis basis = camera_basis(pose.rotation);
  int first = std::numeric_limits<int>::max(), last = std::numeric_limits<int>::min();
  bool touches_border = false;
  for (int y = y0; y <= y1; ++y) {
    bool hit = false;
    for (int x = x0; x <= x1; ++x) {
      const Vec3 d = basis.forward + ((x + 0.5 - k.cx) / k.f_px) * basis.right - ((y + 0.5 - k.cy) / k.f_px) * basis.up;
      if (ray_capsule(pose.position, d, cap, nullptr) != std::numeric_limits<double>::infinity()) {
        hit = true;
        if (x == x0 || x == x1) touches_border = true;
        break;
      }
    }
    if (!hit) continue;
    first = std::min(first, y);
    last = std::max(last, y);
  }
  if (first > last || touches_border || first == y0 || last == y1) return -1.0;
  return static_cast<double>(last - first + 1);
}

Frame render_frame(const SceneMesh& mesh, const CharacterState& st, const CameraPose& pose, ImageSize size)
{
  Frame f;
  f.width = size.width;
  f.height = size.height;
  const std::size_t n = static_cast<std::size_t>(size.width) * size.height;
  f.rgb.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) std::copy(kBackground.begin(), kBackground.end(), f.rgb.begin() + 3 * i);
  f.ids.assign(n, kBackgroundId);

  const Intrinsics k = make_intrinsics(pose.focal_mm, size);
  const CameraBasis basis = camera_basis(pose.rotation);
  Raster r(k, f);
  for (const auto& tri : mesh.triangles) draw_triangle(r, pose, basis, tri);
  SceneMesh wedge;
  add_wedge(wedge, st);
  for (const auto& tri : wedge.triangles) draw_triangle(r, pose, basis, tri);
  draw_capsule(r, pose, basis, character_capsule(st));
  return f;
}

}  // namespace previs

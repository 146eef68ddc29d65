#include "ssia/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssia {

namespace {

constexpr float kWallHeight = 0.6f;
constexpr float kWallThick = 0.12f;
constexpr float kTextureAmp = 0.07f;
constexpr std::array<float, 3> kWallColor = {0.30f, 0.36f, 0.52f};
constexpr std::array<float, 3> kVoidColor = {0.08f, 0.10f, 0.22f};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic texture noise in [0,1) for a quantized 2d cell.
inline float cell_noise(uint64_t seed, int32_t qx, int32_t qy) {
    uint64_t h = splitmix64(seed ^ splitmix64(static_cast<uint64_t>(static_cast<uint32_t>(qx)) |
                                              (static_cast<uint64_t>(static_cast<uint32_t>(qy)) << 32)));
    return (h >> 11) * (1.0f / 9007199254740992.0f);
}

// Point-in-footprint test in normalized local coordinates [-1,1]^2.
bool inside_local(Shape s, float lx, float ly) {
    const bool in_box = std::fabs(lx) <= 1.f && std::fabs(ly) <= 1.f;
    switch (s) {
        case Shape::box: return in_box;
        case Shape::disc: return lx * lx + ly * ly <= 1.f;
        case Shape::ell: return in_box && !(lx > 0.f && ly < 0.f);
        case Shape::tee: return in_box && (ly >= 1.f / 3.f || std::fabs(lx) <= 1.f / 3.f);
        case Shape::ring: {
            const float r2 = lx * lx + ly * ly;
            return r2 <= 1.f && r2 >= 0.45f * 0.45f;
        }
        case Shape::bar: return std::fabs(lx) <= 1.f && std::fabs(ly) <= 0.35f;
        case Shape::wedge: return in_box && lx + ly <= 0.f;
        case Shape::cross:
            return in_box && (std::fabs(lx) <= 1.f / 3.f || std::fabs(ly) <= 1.f / 3.f);
    }
    return false;
}

inline bool inside_object(const ObjectSpec& o, float x, float y) {
    const float lx = (x - o.x) / (o.sx * 0.5f);
    const float ly = (y - o.y) / (o.sy * 0.5f);
    if (std::fabs(lx) > 1.f || std::fabs(ly) > 1.f) return false;
    return inside_local(o.shape, lx, ly);
}

inline bool inside_wall(const WallRect& wl, float x, float y) {
    return x >= wl.x0 && x <= wl.x1 && y >= wl.y0 && y <= wl.y1;
}

constexpr float kCollisionStep = 0.02f;

// Approximate footprint overlap: sample a's footprint on a fine grid and test
// membership in b placed at (bx, by).
bool objects_overlap(const ObjectSpec& a, float ax, float ay, const ObjectSpec& b, float bx, float by) {
    const float rax = a.sx * 0.5f, ray = a.sy * 0.5f;
    const float rbx = b.sx * 0.5f, rby = b.sy * 0.5f;
    if (std::fabs(ax - bx) > rax + rbx || std::fabs(ay - by) > ray + rby) return false;
    for (float dx = -rax; dx <= rax; dx += kCollisionStep)
        for (float dy = -ray; dy <= ray; dy += kCollisionStep) {
            const float x = ax + dx, y = ay + dy;
            if (!inside_local(a.shape, dx / rax, dy / ray)) continue;
            const float lx = (x - bx) / rbx, ly = (y - by) / rby;
            if (std::fabs(lx) <= 1.f && std::fabs(ly) <= 1.f && inside_local(b.shape, lx, ly)) return true;
        }
    return false;
}

bool object_hits_wall(const ObjectSpec& a, float ax, float ay, const WallRect& wl) {
    const float rax = a.sx * 0.5f, ray = a.sy * 0.5f;
    if (ax + rax < wl.x0 || ax - rax > wl.x1 || ay + ray < wl.y0 || ay - ray > wl.y1) return false;
    for (float dx = -rax; dx <= rax; dx += kCollisionStep)
        for (float dy = -ray; dy <= ray; dy += kCollisionStep) {
            if (!inside_local(a.shape, dx / rax, dy / ray)) continue;
            if (inside_wall(wl, ax + dx, ay + dy)) return true;
        }
    return false;
}

bool placement_free(const SceneSpec& sc, int obj_id, float x, float y) {
    const ObjectSpec& o = sc.objects[obj_id];
    for (const WallRect& wl : sc.walls)
        if (object_hits_wall(o, x, y, wl)) return false;
    for (size_t j = 0; j < sc.objects.size(); ++j) {
        if (static_cast<int>(j) == obj_id) continue;
        const ObjectSpec& b = sc.objects[j];
        if (objects_overlap(o, x, y, b, b.x, b.y)) return false;
    }
    return true;
}

}  // namespace

const char* shape_name(Shape s) {
    switch (s) {
        case Shape::box: return "box";
        case Shape::disc: return "disc";
        case Shape::ell: return "ell";
        case Shape::tee: return "tee";
        case Shape::ring: return "ring";
        case Shape::bar: return "bar";
        case Shape::wedge: return "wedge";
        case Shape::cross: return "cross";
    }
    return "box";
}

std::optional<Shape> shape_from_name(const std::string& name) {
    for (int i = 0; i < kNumShapes; ++i)
        if (name == shape_name(static_cast<Shape>(i))) return static_cast<Shape>(i);
    return std::nullopt;
}

int mass_class_of(float mass_kg) {
    if (mass_kg < 0.5f) return 0;
    if (mass_kg < 2.f) return 1;
    return 2;
}

const std::array<std::array<float, 2>, 8>& force_directions() {
    static const float s = std::sqrt(0.5f);
    static const std::array<std::array<float, 2>, 8> dirs = {{{1, 0},
                                                              {s, s},
                                                              {0, 1},
                                                              {-s, s},
                                                              {-1, 0},
                                                              {-s, -s},
                                                              {0, -1},
                                                              {s, -s}}};
    return dirs;
}

WorldState::SurfaceHit WorldState::surface_at(float x, float y) const {
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        const ObjectSpec& o = scene.objects[i];
        if (inside_object(o, x, y)) return {2, static_cast<int>(i), o.height};
    }
    for (const WallRect& wl : scene.walls)
        if (inside_wall(wl, x, y)) return {1, -1, kWallHeight};
    if (x >= 0 && x <= scene.room_w && y >= 0 && y <= scene.room_h) return {0, -1, 0.f};
    return {3, -1, 0.f};
}

RenderResult render(const WorldState& state, const Camera& cam, bool noise, std::mt19937_64& rng) {
    const int res = cam.res;
    RenderResult out{ImageRGB(res, res), DepthMap(res, res)};
    const SceneSpec& sc = state.scene;

    for (int v = 0; v < res; ++v) {
        for (int u = 0; u < res; ++u) {
            const float x = cam.world_x(static_cast<float>(u));
            const float y = cam.world_y(static_cast<float>(v));
            const WorldState::SurfaceHit hit = state.surface_at(x, y);
            std::array<float, 3> col{};
            float tex = 1.f;
            switch (hit.kind) {
                case 2: {
                    const ObjectSpec& o = sc.objects[hit.object_id];
                    col = o.color;
                    const int32_t qx = static_cast<int32_t>(std::floor((x - o.x) / 0.06f));
                    const int32_t qy = static_cast<int32_t>(std::floor((y - o.y) / 0.06f));
                    tex = 1.f + kTextureAmp * (2.f * cell_noise(o.tex_seed, qx, qy) - 1.f);
                    break;
                }
                case 1: col = kWallColor; break;
                case 0: {
                    col = sc.floor_color;
                    const int32_t qx = static_cast<int32_t>(std::floor(x / 0.08f));
                    const int32_t qy = static_cast<int32_t>(std::floor(y / 0.08f));
                    tex = 1.f + kTextureAmp * (2.f * cell_noise(sc.floor_seed, qx, qy) - 1.f);
                    break;
                }
                default: col = kVoidColor; break;
            }
            for (int c = 0; c < 3; ++c) out.rgb.at(v, u, c) = std::clamp(col[c] * tex, 0.f, 1.f);
            out.depth.at(v, u) = std::max(0.f, cam.pose.cam_height - hit.height);
        }
    }

    if (noise) {
        std::uniform_real_distribution<float> jitter(-sc.light_jitter, sc.light_jitter);
        std::normal_distribution<float> gauss(0.f, sc.pixel_noise);
        const float b = jitter(rng);
        for (float& p : out.rgb.px) p = std::clamp(p + b + gauss(rng), 0.f, 1.f);
    }
    return out;
}

ForceOutcome apply_force(WorldState& state, const Camera& cam, const InteractionRequest& req) {
    ForceOutcome out;
    if (req.u < 0 || req.u >= cam.res || req.v < 0 || req.v >= cam.res) return out;
    const float x = cam.world_x(static_cast<float>(req.u));
    const float y = cam.world_y(static_cast<float>(req.v));
    const WorldState::SurfaceHit hit = state.surface_at(x, y);

    const float dx = x - cam.pose.x, dy = y - cam.pose.y, dz = hit.height - cam.pose.cam_height;
    if (std::sqrt(dx * dx + dy * dy + dz * dz) > cam.pose.reach) return out;
    if (hit.kind != 2) return out;

    ObjectSpec& obj = state.scene.objects[hit.object_id];
    if (obj.is_static || req.force < obj.f_min) return out;

    const float delta = std::clamp(Dynamics::c * (req.force - obj.f_min) / obj.mass,
                                   Dynamics::delta_min, Dynamics::delta_max);
    const auto& dir = force_directions()[req.direction & 7];

    float moved = 0.f;
    const int steps = static_cast<int>(delta / Dynamics::slide_step);
    for (int s = 1; s <= steps; ++s) {
        const float t = s * Dynamics::slide_step;
        const float nx = obj.x + dir[0] * t, ny = obj.y + dir[1] * t;
        bool blocked = false;
        for (const WallRect& wl : state.scene.walls)
            if (object_hits_wall(obj, nx, ny, wl)) {
                blocked = true;
                break;
            }
        if (!blocked)
            for (size_t j = 0; j < state.scene.objects.size(); ++j) {
                if (static_cast<int>(j) == hit.object_id) continue;
                const ObjectSpec& b = state.scene.objects[j];
                if (objects_overlap(obj, nx, ny, b, b.x, b.y)) {
                    blocked = true;
                    break;
                }
            }
        if (blocked) break;
        moved = t;
    }
    if (moved <= 0.f) return out;

    obj.x += dir[0] * moved;
    obj.y += dir[1] * moved;
    out.moved = true;
    out.object_id = hit.object_id;
    out.displacement = moved;
    return out;
}

bool reachable_by_pixels(const BinaryMask& mask, const Camera& cam, float surface_height) {
    const float dz = surface_height - cam.pose.cam_height;
    const float r2 = cam.pose.reach * cam.pose.reach;
    int count = 0;
    for (int v = 0; v < mask.h; ++v)
        for (int u = 0; u < mask.w; ++u) {
            if (!mask.at(v, u)) continue;
            const float dx = cam.world_x(static_cast<float>(u)) - cam.pose.x;
            const float dy = cam.world_y(static_cast<float>(v)) - cam.pose.y;
            if (dx * dx + dy * dy + dz * dz <= r2 && ++count >= 10) return true;
        }
    return false;
}

std::vector<GroundTruthInstance> ground_truth(const WorldState& state, const Camera& cam) {
    std::vector<GroundTruthInstance> out;
    const int res = cam.res;
    for (size_t i = 0; i < state.scene.objects.size(); ++i) {
        const ObjectSpec& o = state.scene.objects[i];
        if (o.is_static) continue;
        GroundTruthInstance gt;
        gt.mask = BinaryMask(res, res);
        gt.x0 = res;
        gt.y0 = res;
        for (int v = 0; v < res; ++v)
            for (int u = 0; u < res; ++u) {
                if (!inside_object(o, cam.world_x(static_cast<float>(u)), cam.world_y(static_cast<float>(v))))
                    continue;
                gt.mask.at(v, u) = 1;
                gt.x0 = std::min(gt.x0, u);
                gt.y0 = std::min(gt.y0, v);
                gt.x1 = std::max(gt.x1, u);
                gt.y1 = std::max(gt.y1, v);
            }
        if (gt.x1 < gt.x0) continue;  // not visible in this view
        gt.mass_class = mass_class_of(o.mass);
        gt.reachable = reachable_by_pixels(gt.mask, cam, o.height);
        gt.object_id = static_cast<int>(i);
        out.push_back(std::move(gt));
    }
    return out;
}

Camera scene_camera(const SceneSpec& scene, int res, float view_m) {
    Camera cam;
    cam.pose.x = scene.agent_x;
    cam.pose.y = scene.agent_y;
    cam.res = res;
    cam.view_m = view_m;
    return cam;
}

namespace {

// Hue at a minimum circular distance from the hues already used.
float pick_spaced_hue(std::mt19937_64& rng, const std::vector<float>& used, float min_dist) {
    std::uniform_real_distribution<float> uh(0.f, 1.f);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const float h = uh(rng);
        bool ok = true;
        for (float u : used) {
            float d = std::fabs(h - u);
            d = std::min(d, 1.f - d);
            if (d < min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) return h;
    }
    return uh(rng);
}

std::array<float, 3> hsv_color(float h, float s, float v) {
    std::array<float, 3> c{};
    hsv_to_rgb(h, s, v, c[0], c[1], c[2]);
    return c;
}

float sample_f_min(std::mt19937_64& rng, int bucket) {
    static const std::array<float, 4> edges = {0.f, kForces[0], kForces[1], kForces[2]};
    std::uniform_real_distribution<float> u(edges[bucket], edges[bucket + 1]);
    const float f = u(rng);
    return std::max(f, 0.01f);
}

void add_perimeter_walls(SceneSpec& sc) {
    sc.walls.push_back({-kWallThick, -kWallThick, sc.room_w + kWallThick, 0.f});
    sc.walls.push_back({-kWallThick, sc.room_h, sc.room_w + kWallThick, sc.room_h + kWallThick});
    sc.walls.push_back({-kWallThick, 0.f, 0.f, sc.room_h});
    sc.walls.push_back({sc.room_w, 0.f, sc.room_w + kWallThick, sc.room_h});
}

bool try_place(SceneSpec& sc, int obj_id, std::mt19937_64& rng, float cx, float cy, float radius,
               int tries) {
    std::uniform_real_distribution<float> ur(0.f, 1.f);
    ObjectSpec& o = sc.objects[obj_id];
    for (int t = 0; t < tries; ++t) {
        const float ang = ur(rng) * 6.2831853f;
        const float rad = radius * std::sqrt(ur(rng));
        const float x = cx + rad * std::cos(ang);
        const float y = cy + rad * std::sin(ang);
        const float mx = std::max(o.sx, o.sy) * 0.5f + 0.05f;
        if (x < mx || x > sc.room_w - mx || y < mx || y > sc.room_h - mx) continue;
        if (!placement_free(sc, obj_id, x, y)) continue;
        o.x = x;
        o.y = y;
        return true;
    }
    return false;
}

}  // namespace

SceneSpec generate_scene(uint64_t seed, Split split, Role role, const SceneGenOptions& opt) {
    // Layout features come from a per-role stream under NovelLayouts (held-out
    // room seeds); object contents from a shared stream reseeded per scene.
    const uint64_t layout_pool =
        split == Split::NovelLayouts ? (role == Role::train ? 0x10ULL : 0x20ULL) : 0x10ULL;
    std::mt19937_64 layout_rng(splitmix64(seed ^ splitmix64(layout_pool ^ 0xfeedULL)));
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64((static_cast<uint64_t>(split) << 8) ^
                                                     (static_cast<uint64_t>(role) << 4) ^ 0xc0ffeeULL)));
    std::uniform_real_distribution<float> ur(0.f, 1.f);

    SceneSpec sc;
    sc.light_jitter = opt.light_jitter;
    sc.pixel_noise = opt.pixel_noise;

    std::vector<float> used_hues;
    const float floor_hue = ur(layout_rng);
    used_hues.push_back(floor_hue);
    sc.floor_color = hsv_color(floor_hue, 0.25f + 0.2f * ur(layout_rng), 0.35f + 0.25f * ur(layout_rng));
    sc.floor_seed = layout_rng();

    if (opt.style == SceneStyle::trivial_box) {
        sc.room_w = sc.room_h = 4.0f + 0.8f * ur(layout_rng);
        add_perimeter_walls(sc);
        sc.agent_x = sc.room_w * 0.5f;
        sc.agent_y = sc.room_h * 0.5f;

        ObjectSpec o;
        o.shape = Shape::box;
        o.sx = 0.7f + 0.4f * ur(rng);
        o.sy = 0.7f + 0.4f * ur(rng);
        o.height = 0.15f + 0.2f * ur(rng);
        o.color = hsv_color(pick_spaced_hue(rng, used_hues, 0.10f), 0.55f + 0.35f * ur(rng),
                            0.5f + 0.4f * ur(rng));
        o.tex_seed = static_cast<uint32_t>(rng());
        const int bucket = static_cast<int>(rng() % 3);
        static const std::array<std::array<float, 2>, 3> mass_range = {{{0.1f, 0.5f}, {0.5f, 2.f}, {2.f, 8.f}}};
        o.mass = mass_range[bucket][0] + (mass_range[bucket][1] - mass_range[bucket][0]) * ur(rng);
        int fbucket = bucket;
        if (ur(rng) < 0.05f) fbucket = std::clamp(bucket + (rng() % 2 ? 1 : -1), 0, 2);
        o.f_min = sample_f_min(rng, fbucket);
        sc.objects.push_back(o);

        const float reach_r = std::sqrt(std::max(0.01f, 1.5f * 1.5f - (1.0f - o.height) * (1.0f - o.height)));
        const float margin = std::max(o.sx, o.sy) * 0.5f;
        if (!try_place(sc, 0, rng, sc.agent_x, sc.agent_y, std::max(0.1f, reach_r - margin - 0.05f), 500))
            sc.objects[0].x = sc.agent_x + 0.6f, sc.objects[0].y = sc.agent_y;
        return sc;
    }

    sc.room_w = 5.f + 2.f * ur(layout_rng);
    sc.room_h = 5.f + 2.f * ur(layout_rng);
    add_perimeter_walls(sc);
    const bool interior_wall = ur(layout_rng) < 0.3f;

    std::uniform_real_distribution<float> ua_x(1.3f, sc.room_w - 1.3f);
    std::uniform_real_distribution<float> ua_y(1.3f, sc.room_h - 1.3f);
    sc.agent_x = ua_x(rng);
    sc.agent_y = ua_y(rng);

    if (interior_wall) {
        // A wall stub protruding from one side, kept away from the agent.
        const bool horizontal = ur(layout_rng) < 0.5f;
        const float len = 1.f + 1.5f * ur(layout_rng);
        for (int t = 0; t < 32; ++t) {
            WallRect wl;
            if (horizontal) {
                const float y = 0.8f + (sc.room_h - 1.6f) * ur(layout_rng);
                wl = {0.f, y, len, y + kWallThick};
            } else {
                const float x = 0.8f + (sc.room_w - 1.6f) * ur(layout_rng);
                wl = {x, 0.f, x + kWallThick, len};
            }
            const float cx = std::clamp(sc.agent_x, wl.x0, wl.x1) - sc.agent_x;
            const float cy = std::clamp(sc.agent_y, wl.y0, wl.y1) - sc.agent_y;
            if (cx * cx + cy * cy > 0.36f) {
                sc.walls.push_back(wl);
                break;
            }
        }
    }

    // Shape pools: NovelShapes holds ring/wedge/cross out of training and
    // makes them the majority at test time.
    static const std::array<Shape, 5> seen_pool = {Shape::box, Shape::disc, Shape::ell, Shape::tee,
                                                   Shape::bar};
    static const std::array<Shape, 3> heldout_pool = {Shape::ring, Shape::wedge, Shape::cross};
    auto draw_shape = [&](std::mt19937_64& r) -> Shape {
        if (split == Split::NovelShapes) {
            if (role == Role::train) return seen_pool[r() % seen_pool.size()];
            return ur(r) < 0.7f ? heldout_pool[r() % heldout_pool.size()]
                                : seen_pool[r() % seen_pool.size()];
        }
        return static_cast<Shape>(r() % kNumShapes);
    };

    const int n_movable = 2 + static_cast<int>(rng() % 4);
    const int n_static = static_cast<int>(rng() % 3);
    static const std::array<std::array<float, 2>, 3> mass_range = {{{0.1f, 0.5f}, {0.5f, 2.f}, {2.f, 8.f}}};

    for (int i = 0; i < n_movable + n_static; ++i) {
        ObjectSpec o;
        o.is_static = i >= n_movable;
        o.shape = o.is_static ? (rng() % 2 ? Shape::box : Shape::bar) : draw_shape(rng);
        const float base = o.is_static ? 0.6f : 0.3f;
        const float span = o.is_static ? 0.6f : 0.5f;
        o.sx = base + span * ur(rng);
        o.sy = base + span * ur(rng);
        o.height = o.is_static ? 0.45f + 0.1f * ur(rng) : 0.1f + 0.3f * ur(rng);
        const float hue = pick_spaced_hue(rng, used_hues, 0.08f);
        o.color = hsv_color(hue, 0.5f + 0.4f * ur(rng), 0.45f + 0.45f * ur(rng));
        used_hues.push_back(hue);
        o.tex_seed = static_cast<uint32_t>(rng());
        const int bucket = static_cast<int>(rng() % 3);
        o.mass = o.is_static ? 50.f
                             : mass_range[bucket][0] + (mass_range[bucket][1] - mass_range[bucket][0]) * ur(rng);
        int fbucket = bucket;
        if (ur(rng) < 0.05f) fbucket = std::clamp(bucket + (rng() % 2 ? 1 : -1), 0, 2);
        o.f_min = o.is_static ? 1e9f : sample_f_min(rng, fbucket);
        sc.objects.push_back(o);

        const int id = static_cast<int>(sc.objects.size()) - 1;
        bool placed;
        if (i == 0) {
            // First movable object goes inside the reach disc so every scene
            // has at least one reachable target.
            const float rr = 1.5f * 1.5f - (1.0f - o.height) * (1.0f - o.height);
            const float reach_r = std::sqrt(std::max(0.04f, rr));
            const float margin = std::max(o.sx, o.sy) * 0.5f;
            placed = try_place(sc, id, rng, sc.agent_x, sc.agent_y,
                               std::max(0.1f, reach_r - margin - 0.02f), 500);
            if (!placed) {
                sc.objects[id].sx = sc.objects[id].sy = 0.3f;
                placed = try_place(sc, id, rng, sc.agent_x, sc.agent_y, 0.8f, 500);
            }
        } else {
            placed = try_place(sc, id, rng, sc.room_w * 0.5f, sc.room_h * 0.5f,
                               std::max(sc.room_w, sc.room_h) * 0.7f, 200);
        }
        if (!placed) sc.objects.pop_back();
    }
    return sc;
}

}  // namespace ssia

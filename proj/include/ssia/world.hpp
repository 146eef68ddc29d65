#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ssia/image.hpp"

namespace ssia {

enum class Shape : uint8_t { box, disc, ell, tee, ring, bar, wedge, cross };
constexpr int kNumShapes = 8;
const char* shape_name(Shape s);
std::optional<Shape> shape_from_name(const std::string& name);

enum class Split : uint8_t { NovelLayouts, NovelShapes };
enum class Role : uint8_t { train, test };
enum class SceneStyle : uint8_t { standard, trivial_box };

// Quantized force magnitudes (newtons) for light / medium / heavy objects.
constexpr std::array<float, 3> kForces = {5.f, 30.f, 200.f};

// Mass buckets: <0.5 kg, 0.5..2 kg, >=2 kg.
int mass_class_of(float mass_kg);

struct ObjectSpec {
    Shape shape = Shape::box;
    float x = 0, y = 0;        // footprint center, meters (current pose lives here)
    float sx = 0.4f, sy = 0.4f;  // footprint extents, meters
    float height = 0.2f;       // meters above floor
    std::array<float, 3> color{0.5f, 0.5f, 0.5f};
    uint32_t tex_seed = 0;
    float mass = 1.f;          // kg, > 0
    float f_min = 10.f;        // minimal moving force, newtons
    bool is_static = false;
};

struct WallRect {
    float x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // axis-aligned, meters
};

struct SceneSpec {
    float room_w = 6.f, room_h = 6.f;
    std::vector<WallRect> walls;
    uint64_t floor_seed = 0;
    std::array<float, 3> floor_color{0.45f, 0.38f, 0.25f};
    std::vector<ObjectSpec> objects;
    float agent_x = 3.f, agent_y = 3.f;
    float light_jitter = 0.02f;   // global brightness jitter amplitude
    float pixel_noise = 0.02f;    // per-pixel gaussian sigma
};

struct AgentPose {
    float x = 0, y = 0;
    float cam_height = 1.0f;  // meters above floor
    float reach = 1.5f;       // interaction radius, meters (3D from camera)
};

// Square orthographic window of side view_m meters centered on the agent,
// rendered at res x res pixels. Pixel (u,v) = (column, row).
struct Camera {
    AgentPose pose;
    int res = 300;
    float view_m = 4.0f;

    float m_per_px() const { return view_m / res; }
    // center of pixel (u,v) in world coordinates
    float world_x(float u) const { return pose.x + (u + 0.5f - res * 0.5f) * m_per_px(); }
    float world_y(float v) const { return pose.y + (v + 0.5f - res * 0.5f) * m_per_px(); }
};

struct InteractionRequest {
    int u = 0, v = 0;       // pixel, input resolution
    float force = 5.f;      // one of kForces
    int direction = 0;      // 0..7, compass index into force_directions()
};

struct ForceOutcome {
    bool moved = false;
    int object_id = -1;     // index into scene objects when moved
    float displacement = 0.f;
};

struct GroundTruthInstance {
    BinaryMask mask;       // input resolution
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // tight bbox, inclusive
    int mass_class = 0;    // 0 light, 1 medium, 2 heavy
    bool reachable = false;
    int object_id = -1;
};

// The 8 planar compass directions, unit vectors.
const std::array<std::array<float, 2>, 8>& force_directions();

// Mutable simulation state: the scene plus current object poses.
struct WorldState {
    SceneSpec scene;

    explicit WorldState(SceneSpec s) : scene(std::move(s)) {}

    // Topmost surface at a world point. kind: 0 floor, 1 wall, 2 object, 3 void.
    struct SurfaceHit {
        int kind = 0;
        int object_id = -1;
        float height = 0.f;
    };
    SurfaceHit surface_at(float x, float y) const;
};

struct RenderResult {
    ImageRGB rgb;
    DepthMap depth;
};

// Orthographic top-down render. Depth = camera height - surface height.
// With noise on, a global brightness jitter and per-pixel gaussian noise are
// applied to RGB only (clamped back into [0,1]); depth stays clean.
RenderResult render(const WorldState& state, const Camera& cam, bool noise, std::mt19937_64& rng);

// Applies a point force. All failure modes (out of reach, non-object target,
// insufficient force, fully blocked displacement) come back as moved=false.
ForceOutcome apply_force(WorldState& state, const Camera& cam, const InteractionRequest& req);

std::vector<GroundTruthInstance> ground_truth(const WorldState& state, const Camera& cam);

// Displacement law constants: delta = clamp(c*(f - f_min)/mass, min, max).
struct Dynamics {
    static constexpr float c = 0.004f;       // m * kg / N
    static constexpr float delta_min = 0.15f;
    static constexpr float delta_max = 0.60f;
    static constexpr float slide_step = 0.01f;
};

struct SceneGenOptions {
    SceneStyle style = SceneStyle::standard;
    float light_jitter = 0.02f;
    float pixel_noise = 0.02f;
};

// Deterministic in (seed, split, role, options). NovelShapes holds out shape
// categories from training; NovelLayouts holds out room layout seeds.
SceneSpec generate_scene(uint64_t seed, Split split, Role role, const SceneGenOptions& opt = {});

// Camera an agent standing in this scene renders from.
Camera scene_camera(const SceneSpec& scene, int res, float view_m);

// Helper shared by ground_truth and tests: the >=10-in-reach-pixels rule.
bool reachable_by_pixels(const BinaryMask& mask, const Camera& cam, float surface_height);

}  // namespace ssia

#include "ssia/scenefile.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssia {

namespace {

std::string fmt(float v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
    return buf;
}

}  // namespace

std::string scene_to_text(const SceneSpec& sc) {
    std::ostringstream out;
    out << "room " << fmt(sc.room_w) << " " << fmt(sc.room_h) << "\n";
    out << "agent " << fmt(sc.agent_x) << " " << fmt(sc.agent_y) << "\n";
    out << "floor " << sc.floor_seed << " " << fmt(sc.floor_color[0]) << " " << fmt(sc.floor_color[1])
        << " " << fmt(sc.floor_color[2]) << "\n";
    out << "noise " << fmt(sc.light_jitter) << " " << fmt(sc.pixel_noise) << "\n";
    for (const WallRect& w : sc.walls)
        out << "wall " << fmt(w.x0) << " " << fmt(w.y0) << " " << fmt(w.x1) << " " << fmt(w.y1) << "\n";
    for (const ObjectSpec& o : sc.objects) {
        out << "object " << shape_name(o.shape) << " " << fmt(o.x) << " " << fmt(o.y) << " " << fmt(o.sx)
            << " " << fmt(o.sy) << " " << fmt(o.height) << " " << fmt(o.color[0]) << " "
            << fmt(o.color[1]) << " " << fmt(o.color[2]) << " " << o.tex_seed << " " << fmt(o.mass)
            << " " << fmt(o.f_min) << " " << (o.is_static ? 1 : 0) << "\n";
    }
    return out.str();
}

SceneSpec scene_from_text(const std::string& text) {
    SceneSpec sc;
    sc.walls.clear();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        auto fail = [&](const char* why) {
            throw std::runtime_error("scene file line " + std::to_string(lineno) + ": " + why);
        };
        if (tag == "room") {
            if (!(ls >> sc.room_w >> sc.room_h)) fail("bad room record");
        } else if (tag == "agent") {
            if (!(ls >> sc.agent_x >> sc.agent_y)) fail("bad agent record");
        } else if (tag == "floor") {
            if (!(ls >> sc.floor_seed >> sc.floor_color[0] >> sc.floor_color[1] >> sc.floor_color[2]))
                fail("bad floor record");
        } else if (tag == "noise") {
            if (!(ls >> sc.light_jitter >> sc.pixel_noise)) fail("bad noise record");
        } else if (tag == "wall") {
            WallRect w;
            if (!(ls >> w.x0 >> w.y0 >> w.x1 >> w.y1)) fail("bad wall record");
            sc.walls.push_back(w);
        } else if (tag == "object") {
            ObjectSpec o;
            std::string shape;
            int is_static = 0;
            if (!(ls >> shape >> o.x >> o.y >> o.sx >> o.sy >> o.height >> o.color[0] >> o.color[1] >>
                  o.color[2] >> o.tex_seed >> o.mass >> o.f_min >> is_static))
                fail("bad object record");
            const auto s = shape_from_name(shape);
            if (!s) fail("unknown shape");
            o.shape = *s;
            o.is_static = is_static != 0;
            sc.objects.push_back(o);
        } else {
            fail("unknown record tag");
        }
    }
    return sc;
}

void save_scene(const std::string& path, const SceneSpec& scene) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << scene_to_text(scene);
    if (!out) throw std::runtime_error("write failed: " + path);
}

SceneSpec load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return scene_from_text(ss.str());
}

}  // namespace ssia

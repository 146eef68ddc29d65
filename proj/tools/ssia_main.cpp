#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "ssia/checkpoint.hpp"
#include "ssia/config.hpp"
#include "ssia/eval.hpp"
#include "ssia/imageio.hpp"
#include "ssia/panel.hpp"
#include "ssia/scenefile.hpp"
#include "ssia/selfsup.hpp"
#include "ssia/trainer.hpp"

namespace fs = std::filesystem;
using namespace ssia;

namespace {

std::vector<SceneSpec> scenes_from_dir(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".scene") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .scene files in " + dir);
    std::vector<SceneSpec> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(load_scene(f));
    return out;
}

std::vector<SceneSpec> scenes_procedural(const std::string& split, const std::string& style, int count,
                                         uint64_t seed, float light_jitter, float pixel_noise) {
    SceneGenOptions gen;
    gen.style = style == "trivial_box" ? SceneStyle::trivial_box : SceneStyle::standard;
    gen.light_jitter = light_jitter;
    gen.pixel_noise = pixel_noise;
    std::vector<SceneSpec> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(generate_scene(seed + static_cast<uint64_t>(i), parse_split(split), Role::test, gen));
    return out;
}

int cmd_gen_scenes(const std::string& split, const std::string& style, int count, uint64_t seed,
                   const std::string& out_dir, const std::string& role) {
    fs::create_directories(out_dir);
    SceneGenOptions gen;
    gen.style = style == "trivial_box" ? SceneStyle::trivial_box : SceneStyle::standard;
    const Role r = role == "train" ? Role::train : Role::test;
    for (int i = 0; i < count; ++i) {
        const SceneSpec sc = generate_scene(seed + static_cast<uint64_t>(i), parse_split(split), r, gen);
        char name[64];
        std::snprintf(name, sizeof name, "/scene_%05d.scene", i);
        save_scene(out_dir + name, sc);
    }
    std::cout << "wrote " << count << " scenes to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised object discovery in an interactive micro-world"};
    app.require_subcommand(1);

    // gen-scenes
    auto* gen = app.add_subcommand("gen-scenes", "generate scene files");
    std::string g_split = "NovelLayouts", g_style = "standard", g_out, g_role = "test";
    int g_count = 100;
    uint64_t g_seed = 1;
    gen->add_option("--split", g_split, "NovelLayouts|NovelShapes");
    gen->add_option("--style", g_style, "standard|trivial_box");
    gen->add_option("--count", g_count)->required();
    gen->add_option("--seed", g_seed);
    gen->add_option("--role", g_role, "train|test");
    gen->add_option("--out-dir", g_out)->required();

    // train
    auto* tr = app.add_subcommand("train", "run the training loop");
    std::string t_config, t_out;
    std::vector<std::string> t_sets;
    int t_jobs = -1;
    bool t_deterministic = false;
    uint64_t t_seed = 0;
    bool t_seed_given = false;
    tr->add_option("--config", t_config, "key=value config file")->required();
    tr->add_option("--out-dir", t_out)->required();
    tr->add_option("--set", t_sets, "override config entries, key=value");
    tr->add_option("--jobs", t_jobs, "parallel rollout workers");
    tr->add_flag("--deterministic", t_deterministic, "force single-threaded rollouts");
    tr->add_option("--seed", t_seed)->each([&](const std::string&) { t_seed_given = true; });

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a scene set");
    std::string e_ckpt, e_scenes, e_out = "report.txt", e_panels, e_split = "NovelLayouts",
                e_style = "standard";
    int e_count = 100, e_n = 10;
    uint64_t e_seed = 7777;
    double e_theta = 0.0, e_view = 4.0, e_reach = 1.5, e_lj = 0.02, e_pn = 0.02;
    bool e_no_noise = false;
    ev->add_option("--ckpt", e_ckpt)->required();
    ev->add_option("--scenes", e_scenes, "directory of .scene files (else procedural)");
    ev->add_option("--split", e_split);
    ev->add_option("--style", e_style);
    ev->add_option("--count", e_count);
    ev->add_option("--seed", e_seed);
    ev->add_option("--out", e_out);
    ev->add_option("--panels-dir", e_panels);
    ev->add_option("--n", e_n, "max proposals per image");
    ev->add_option("--theta", e_theta, "interaction score threshold");
    ev->add_option("--view-m", e_view);
    ev->add_option("--reach", e_reach);
    ev->add_option("--light-jitter", e_lj);
    ev->add_option("--pixel-noise", e_pn);
    ev->add_flag("--no-noise", e_no_noise);

    // infer
    auto* in = app.add_subcommand("infer", "single-image inference");
    std::string i_ckpt, i_image, i_depth, i_panel = "panel.ppm", i_props;
    int i_n = 10;
    double i_theta = 0.0;
    in->add_option("--ckpt", i_ckpt)->required();
    in->add_option("--image", i_image, "rgb ppm")->required();
    in->add_option("--depth", i_depth, "16-bit pgm")->required();
    in->add_option("--out-panel", i_panel);
    in->add_option("--proposals", i_props, "write a machine-readable listing here");
    in->add_option("--n", i_n);
    in->add_option("--theta", i_theta);

    // selfsup-debug
    auto* sd = app.add_subcommand("selfsup-debug", "inspect the supervision pipeline");
    std::string s_before, s_after, s_point = "0,0", s_out = "selfsup_debug";
    double s_felz_k = 300.0, s_felz_sigma = 0.8;
    int s_felz_min = 60;
    sd->add_option("--before", s_before)->required();
    sd->add_option("--after", s_after)->required();
    sd->add_option("--point", s_point, "u,v at output resolution")->required();
    sd->add_option("--out-dir", s_out);
    sd->add_option("--felz-k", s_felz_k);
    sd->add_option("--felz-sigma", s_felz_sigma);
    sd->add_option("--felz-min-size", s_felz_min);

    // bank-stats
    auto* bs = app.add_subcommand("bank-stats", "print bank statistics from a run directory");
    std::string b_dir;
    bs->add_option("--ckpt-dir", b_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_scenes(g_split, g_style, g_count, g_seed, g_out, g_role);

        if (tr->parsed()) {
            KeyValueConfig kv = KeyValueConfig::from_file(t_config);
            if (const char* env = std::getenv(kSeedEnvVar)) kv.set("seed", env);
            for (const std::string& s : t_sets) {
                const size_t eq = s.find('=');
                if (eq == std::string::npos) throw std::runtime_error("--set expects key=value: " + s);
                kv.set(s.substr(0, eq), s.substr(eq + 1));
            }
            if (t_seed_given) kv.set("seed", std::to_string(t_seed));
            if (t_jobs > 0) kv.set("jobs", std::to_string(t_jobs));
            TrainConfig cfg = parse_train_config(kv);
            if (t_deterministic) cfg.jobs = 1;
            if (cfg.jobs <= 0)
                cfg.jobs = std::max(1u, std::thread::hardware_concurrency() - 1);
            fs::create_directories(t_out);
            std::ofstream echo(t_out + "/config_effective.txt");
            echo << "# " << kVersionString << "\n" << train_config_to_text(cfg);
            echo.close();
            const TrainResult res = train(cfg, t_out);
            std::cout << "trained " << res.steps << " steps over " << res.locations
                      << " locations\ncheckpoints: " << res.ckpt_phase1 << ", " << res.ckpt_final
                      << "\n";
            return 0;
        }

        if (ev->parsed()) {
            LoadedModel lm = load_checkpoint(e_ckpt);
            std::vector<SceneSpec> scenes =
                e_scenes.empty()
                    ? scenes_procedural(e_split, e_style, e_count, e_seed, static_cast<float>(e_lj),
                                        static_cast<float>(e_pn))
                    : scenes_from_dir(e_scenes);
            EvalOptions opt;
            opt.n_actions = e_n;
            opt.theta = static_cast<float>(e_theta);
            opt.input_res = lm.cfg.input_res;
            opt.view_m = static_cast<float>(e_view);
            opt.reach = static_cast<float>(e_reach);
            opt.seed = e_seed;
            opt.noise = !e_no_noise;
            opt.panels_dir = e_panels;
            const MetricsReport report = evaluate(*lm.net, scenes, opt);
            std::ofstream out(e_out);
            out << "# " << kVersionString << "\n" << report.to_text();
            std::cout << report.to_text();
            return 0;
        }

        if (in->parsed()) {
            LoadedModel lm = load_checkpoint(i_ckpt);
            const ImageRGB rgb = read_ppm(i_image);
            const DepthMap depth = read_depth_pgm(i_depth);
            if (rgb.h != lm.cfg.input_res || rgb.w != lm.cfg.input_res)
                throw std::runtime_error("image resolution does not match the checkpoint config");
            Tensor<float> x(1, 4, rgb.h, rgb.w);
            fill_input(x, 0, rgb, depth);
            UNet<float>::Out out = lm.net->forward(x, false);
            SelectResult sel = select_actions(head_view(out, 0), i_n, static_cast<float>(i_theta));
            PanelData pd;
            pd.input = &rgb;
            pd.out = &out;
            pd.proposals = &sel.proposals;
            write_ppm(i_panel, render_panel(pd));
            std::ostringstream props;
            props << "# u v force_class confidence x0 y0 x1 y1 area\n";
            for (const ActionProposal& p : sel.proposals) {
                int x0 = p.mask.w, y0 = p.mask.h, x1 = -1, y1 = -1, area = 0;
                for (int yy = 0; yy < p.mask.h; ++yy)
                    for (int xx = 0; xx < p.mask.w; ++xx)
                        if (p.mask.at(yy, xx)) {
                            ++area;
                            x0 = std::min(x0, xx);
                            y0 = std::min(y0, yy);
                            x1 = std::max(x1, xx);
                            y1 = std::max(y1, yy);
                        }
                props << p.u << " " << p.v << " " << p.force_class << " " << p.confidence << " " << x0
                      << " " << y0 << " " << x1 << " " << y1 << " " << area << "\n";
            }
            if (!i_props.empty()) {
                std::ofstream f(i_props);
                f << props.str();
            }
            std::cout << props.str();
            return 0;
        }

        if (sd->parsed()) {
            const ImageRGB before = read_ppm(s_before);
            const ImageRGB after = read_ppm(s_after);
            const size_t comma = s_point.find(',');
            if (comma == std::string::npos) throw std::runtime_error("--point expects u,v");
            const int u = std::stoi(s_point.substr(0, comma));
            const int v = std::stoi(s_point.substr(comma + 1));
            SelfSupParams params;
            params.felz_k = static_cast<float>(s_felz_k);
            params.felz_sigma = static_cast<float>(s_felz_sigma);
            params.felz_min_size = s_felz_min;
            const SupervisionResult res = supervise(before, after, u, v, params);
            fs::create_directories(s_out);
            auto mask_image = [](const BinaryMask& m) {
                ImageRGB img(m.h, m.w);
                for (size_t i = 0; i < m.m.size(); ++i)
                    img.px[i * 3] = img.px[i * 3 + 1] = img.px[i * 3 + 2] = m.m[i] ? 1.f : 0.f;
                return img;
            };
            write_ppm(s_out + "/B.ppm", mask_image(res.B));
            write_ppm(s_out + "/Bplus.ppm", mask_image(res.Bplus));
            std::ofstream rep(s_out + "/report.txt");
            rep << "point " << u << " " << v << "\n"
                << "B_cells " << res.B.count() << "\n"
                << "Bplus_cells " << res.Bplus.count() << "\n"
                << "successful " << (res.successful ? 1 : 0) << "\n";
            std::cout << (res.successful ? "successful" : "unsuccessful") << " (B " << res.B.count()
                      << " cells, B+ " << res.Bplus.count() << " cells)\n";
            return 0;
        }

        if (bs->parsed()) {
            std::ifstream f(b_dir + "/bank_stats.txt");
            if (!f) throw std::runtime_error("no bank_stats.txt in " + b_dir);
            std::cout << f.rdbuf();
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

#include "ssia/trainer.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ssia/checkpoint.hpp"
#include "ssia/eval.hpp"

namespace ssia {

namespace {

inline uint64_t mix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct PlannedAction {
    int iu = 0, iv = 0;  // input resolution
    int r = 0;
};

// The interaction oracle keeps at most one model point per reachable movable
// object, adds a point for every object the model missed, and leaves
// non-object points alone as hard negatives.
std::vector<PlannedAction> oracle_filter_actions(const std::vector<PlannedAction>& actions,
                                                 const WorldState& world, const Camera& cam,
                                                 const UNet<float>::Out& out) {
    const std::vector<GroundTruthInstance> gts = ground_truth(world, cam);
    std::vector<int> claimed(gts.size(), 0);
    std::vector<PlannedAction> kept;
    for (const PlannedAction& a : actions) {
        const float wx = cam.world_x(static_cast<float>(a.iu));
        const float wy = cam.world_y(static_cast<float>(a.iv));
        const WorldState::SurfaceHit hit = world.surface_at(wx, wy);
        int gt_idx = -1;
        for (size_t g = 0; g < gts.size(); ++g)
            if (gts[g].reachable && gts[g].object_id == hit.object_id) gt_idx = static_cast<int>(g);
        if (hit.kind == 2 && gt_idx >= 0) {
            if (claimed[gt_idx]) continue;  // one point per object
            claimed[gt_idx] = 1;
        }
        kept.push_back(a);
    }
    const int out_res = out.s.h;
    const size_t plane = static_cast<size_t>(out_res) * out_res;
    for (size_t g = 0; g < gts.size(); ++g) {
        if (!gts[g].reachable || claimed[g]) continue;
        // centroid-nearest in-reach pixel of the missed object
        long sx = 0, sy = 0, n = 0;
        for (int y = 0; y < gts[g].mask.h; ++y)
            for (int x = 0; x < gts[g].mask.w; ++x)
                if (gts[g].mask.at(y, x)) {
                    sx += x;
                    sy += y;
                    ++n;
                }
        if (n == 0) continue;
        const float cx = static_cast<float>(sx) / n, cy = static_cast<float>(sy) / n;
        int bu = -1, bv = -1;
        float bd = 1e30f;
        for (int y = 0; y < gts[g].mask.h; ++y)
            for (int x = 0; x < gts[g].mask.w; ++x) {
                if (!gts[g].mask.at(y, x)) continue;
                const float d = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                if (d < bd) {
                    bd = d;
                    bu = x;
                    bv = y;
                }
            }
        PlannedAction a;
        a.iu = bu;
        a.iv = bv;
        const int ou = std::min(bu / 3, out_res - 1), ov = std::min(bv / 3, out_res - 1);
        const float* m = out.m.data();
        int r = 0;
        for (int c = 1; c < 3; ++c)
            if (m[c * plane + ov * out_res + ou] > m[r * plane + ov * out_res + ou]) r = c;
        a.r = r;
        kept.push_back(a);
    }
    return kept;
}

BinaryMask oracle_mask_for_point(const WorldState& world, const Camera& cam, int iu, int iv,
                                 int out_res) {
    const float wx = cam.world_x(static_cast<float>(iu));
    const float wy = cam.world_y(static_cast<float>(iv));
    const WorldState::SurfaceHit hit = world.surface_at(wx, wy);
    BinaryMask empty(out_res, out_res);
    if (hit.kind != 2) return empty;
    const ObjectSpec& o = world.scene.objects[hit.object_id];
    if (o.is_static) return empty;
    const float dz = o.height - cam.pose.cam_height;
    const float dx = wx - cam.pose.x, dy = wy - cam.pose.y;
    if (dx * dx + dy * dy + dz * dz > cam.pose.reach * cam.pose.reach) return empty;
    for (const GroundTruthInstance& gt : ground_truth(world, cam))
        if (gt.object_id == hit.object_id) return downsample_majority(gt.mask, gt.mask.h / out_res);
    return empty;
}

}  // namespace

EscalationResult escalate(WorldState& world, const Camera& cam, int iu, int iv, int r, int direction,
                          const SelfSupParams& ss, const LabelMap* superpixels, ImageRGB& frame,
                          DepthMap& frame_depth, bool noise, std::mt19937_64& rng) {
    EscalationResult res;
    const int ou = iu / 3, ov = iv / 3;

    // Probe order: f^{r-1} detects "too large", f^r "correct", f^2 "too small".
    struct Step {
        int cls;
        Feedback fb;
    };
    std::vector<Step> steps;
    if (r > 0) steps.push_back({r - 1, Feedback::too_large});
    steps.push_back({r, Feedback::correct});
    if (r < 2) steps.push_back({2, Feedback::too_small});

    for (const Step& st : steps) {
        InteractionRequest req;
        req.u = iu;
        req.v = iv;
        req.force = kForces[st.cls];
        req.direction = direction;
        apply_force(world, cam, req);
        res.applied[st.cls] = true;
        RenderResult after = render(world, cam, noise, rng);
        SupervisionResult sup = supervise(frame, after.rgb, ou, ov, ss, superpixels);
        frame = std::move(after.rgb);
        frame_depth = std::move(after.depth);
        if (sup.successful) {
            res.fb = st.fb;
            res.bplus = std::move(sup.Bplus);
            res.moving_class = st.cls;
            return res;
        }
    }
    res.fb = Feedback::unsuccessful;
    return res;
}

BankEntry run_location(WorldState& world, const Camera& cam, UNet<float>& net, const TrainConfig& cfg,
                       int n_greedy, int n_random, std::mt19937_64& episode_rng) {
    const SelfSupParams ss = cfg.selfsup_params();
    const int out_res = net.config().output_res();

    RenderResult first = render(world, cam, cfg.noise, episode_rng);
    const ImageRGB i1_rgb = first.rgb;
    const DepthMap i1_depth = first.depth;

    LabelMap superpixels;
    if (ss.use_superpixels)
        superpixels = felzenszwalb(i1_rgb, ss.felz_k, ss.felz_sigma, ss.felz_min_size);

    Tensor<float> x(1, 4, cfg.input_res, cfg.input_res);
    fill_input(x, 0, i1_rgb, i1_depth);
    UNet<float>::Out out = net.forward(x, /*train=*/false);
    SelectResult sel = select_actions(head_view(out, 0), n_greedy, cfg.theta);

    std::vector<PlannedAction> actions;
    for (const ActionProposal& p : sel.proposals) actions.push_back({p.iu, p.iv, p.force_class});
    for (const RandomAction& a : random_actions(n_random, out_res, out_res, episode_rng))
        actions.push_back({a.u * 3 + 1, a.v * 3 + 1, a.force_class});

    const bool oracle_inter =
        cfg.oracle == OracleMode::interactions || cfg.oracle == OracleMode::both;
    const bool oracle_masks = cfg.oracle == OracleMode::masks || cfg.oracle == OracleMode::both;
    if (oracle_inter) actions = oracle_filter_actions(actions, world, cam, out);

    BankEntry entry;
    entry.store_images(i1_rgb, i1_depth);

    ImageRGB frame = i1_rgb;
    DepthMap frame_depth = i1_depth;
    for (const PlannedAction& a : actions) {
        const int direction = static_cast<int>(episode_rng() % 8);
        BinaryMask oracle_mask;
        if (oracle_masks) oracle_mask = oracle_mask_for_point(world, cam, a.iu, a.iv, out_res);
        EscalationResult esc = escalate(world, cam, a.iu, a.iv, a.r, direction, ss,
                                        ss.use_superpixels ? &superpixels : nullptr, frame,
                                        frame_depth, cfg.noise, episode_rng);
        const int ou = a.iu / 3, ov = a.iv / 3;
        if (esc.fb == Feedback::unsuccessful) {
            entry.failures.push_back({ou, ov});
        } else {
            SuccessRecord rec;
            rec.u = ou;
            rec.v = ov;
            rec.r = a.r;
            rec.fb = esc.fb;
            rec.bplus = oracle_masks ? std::move(oracle_mask) : std::move(esc.bplus);
            entry.successes.push_back(std::move(rec));
        }
    }
    return entry;
}

namespace {

struct StepStats {
    double gnorm_s = 0, gnorm_m = 0, gnorm_e = 0;
    double mean_priority = 0;
};

StepStats train_step(UNet<float>& net, Adam<float>& adam, Bank& bank, const TrainConfig& cfg,
                     bool force_grads, std::mt19937_64& bank_rng) {
    const int res = cfg.input_res;
    const int out_res = net.config().output_res();
    const int dim = net.config().embed_dim;
    const size_t plane = static_cast<size_t>(out_res) * out_res;
    const int B = cfg.batch_size;

    const std::vector<size_t> idx = bank.sample(B, bank_rng, cfg.prioritized);
    Tensor<float> x(B, 4, res, res);
    for (int i = 0; i < B; ++i) {
        const BankEntry& e = bank.entry(idx[i]);
        const ImageRGB rgb = e.load_rgb();
        const DepthMap depth = e.load_depth();
        fill_input(x, i, rgb, depth);
    }

    auto acts = net.new_acts();
    UNet<float>::Out out = net.forward(x, /*train=*/true, acts.get());

    UNet<float>::Out g;
    g.s.resize(B, 1, out_res, out_res);
    g.m.resize(B, 3, out_res, out_res);
    g.e.resize(B, dim, out_res, out_res);

    StepStats stats;
    std::vector<double> fg, bg;
    for (int i = 0; i < B; ++i) {
        BankEntry& e = bank.entry(idx[i]);
        const HeadView hv = head_view(out, i);

        // priorities update on every sampled forward
        bank.update_priority(idx[i], Bank::score_entry(e, hv.e, dim, out_res, out_res));

        std::vector<PointRec> succ, fail = e.failures;
        std::vector<ForceRec> frecs;
        std::vector<MaskTarget> masks;
        for (const SuccessRecord& rec : e.successes) {
            succ.push_back({rec.u, rec.v});
            frecs.push_back({rec.u, rec.v, rec.r, rec.fb});
            const int area = rec.bplus.count();
            if (area > 0) masks.push_back({&rec.bplus, area});
        }

        build_fg_bg(succ, fail, out_res, out_res, fg, bg);
        const std::vector<double> gs = score_grad(hv.s, fg.data(), bg.data(), out_res, out_res);
        std::copy(gs.begin(), gs.end(), g.s.data() + static_cast<size_t>(i) * plane);

        if (force_grads && !frecs.empty()) {
            const std::vector<double> ft = build_force_targets(frecs, out_res, out_res);
            const std::vector<double> gm = force_grad(hv.m, ft.data(), out_res, out_res);
            std::copy(gm.begin(), gm.end(), g.m.data() + static_cast<size_t>(i) * 3 * plane);
        }

        const std::vector<double> ge = embed_grad(hv.e, dim, out_res, out_res, masks);
        std::copy(ge.begin(), ge.end(), g.e.data() + static_cast<size_t>(i) * dim * plane);
    }

    auto norm = [](const Tensor<float>& t) {
        double s = 0;
        for (float v : t.v) s += static_cast<double>(v) * v;
        return std::sqrt(s);
    };
    stats.gnorm_s = norm(g.s);
    stats.gnorm_m = norm(g.m);
    stats.gnorm_e = norm(g.e);

    net.zero_grads();
    net.backward(*acts, g);
    adam.step(net.params(), cfg.lr, cfg.weight_decay);

    double mp = 0;
    for (size_t i = 0; i < bank.size(); ++i) mp += bank.entry(i).priority;
    stats.mean_priority = bank.size() ? mp / static_cast<double>(bank.size()) : 0.0;
    return stats;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::ofstream metrics(out_dir + "/metrics.txt");
    if (!metrics) throw std::runtime_error("cannot open metrics file in " + out_dir);

    UNet<float> net(cfg.model_config());
    net.init(cfg.seed);
    Adam<float> adam;
    Bank bank(cfg.bank_capacity);
    std::mt19937_64 bank_rng(mix(cfg.seed ^ 0xBA17ULL));

    SceneGenOptions gen;
    gen.style = cfg.scene_style;
    gen.light_jitter = cfg.light_jitter;
    gen.pixel_noise = cfg.pixel_noise;

    int64_t location_counter = 0;
    int64_t step_counter = 0;

    // Rollouts for [first, first+count) locations; parallel across jobs, with
    // insertion in location order to keep runs reproducible.
    auto do_locations = [&](int64_t first, int count, int n_greedy, int n_random) {
        std::vector<BankEntry> results(count);
        auto work = [&](int slot_begin, int slot_end, UNet<float>* worker_net) {
            for (int s = slot_begin; s < slot_end; ++s) {
                const int64_t loc = first + s;
                const uint64_t scene_seed = mix(cfg.seed) + static_cast<uint64_t>(loc);
                SceneSpec scene = generate_scene(scene_seed, cfg.split, Role::train, gen);
                WorldState world(scene);
                Camera cam = scene_camera(scene, cfg.input_res, cfg.view_m);
                cam.pose.reach = cfg.arm_length;
                std::mt19937_64 episode_rng(
                    mix(cfg.seed ^ (0xE0ULL + static_cast<uint64_t>(loc) * 2654435761ULL)));
                results[s] = run_location(world, cam, *worker_net, cfg, n_greedy, n_random, episode_rng);
            }
        };
        const int jobs = std::max(1, cfg.jobs);
        if (jobs <= 1 || count <= 1) {
            work(0, count, &net);
        } else {
            Eigen::setNbThreads(1);
            std::vector<std::unique_ptr<UNet<float>>> workers;
            for (int j = 0; j < jobs; ++j) {
                workers.push_back(std::make_unique<UNet<float>>(cfg.model_config()));
                workers.back()->copy_from(net);
            }
            std::vector<std::thread> threads;
            const int per = (count + jobs - 1) / jobs;
            for (int j = 0; j < jobs; ++j) {
                const int b = j * per, e = std::min(count, (j + 1) * per);
                if (b >= e) break;
                threads.emplace_back(work, b, e, workers[j].get());
            }
            for (auto& t : threads) t.join();
            Eigen::setNbThreads(0);
        }
        for (BankEntry& e : results) bank.insert(std::move(e));
        location_counter += count;
    };

    auto run_phase = [&](int phase, int locations, int k_start, int k_end, int n_greedy, int n_random,
                         bool force_grads) {
        if (locations <= 0) return;
        const int cycles = std::max(1, locations / cfg.locations_per_cycle);
        for (int cyc = 0; cyc < cycles; ++cyc) {
            const int count = cyc + 1 < cycles
                                  ? cfg.locations_per_cycle
                                  : locations - cfg.locations_per_cycle * (cycles - 1);
            do_locations(location_counter, count, n_greedy, n_random);
            const int K =
                cycles > 1
                    ? static_cast<int>(std::lround(k_start + (k_end - k_start) *
                                                                 static_cast<double>(cyc) / (cycles - 1)))
                    : k_end;
            for (int k = 0; k < K; ++k) {
                if (bank.size() < static_cast<size_t>(cfg.batch_size)) break;
                const StepStats st = train_step(net, adam, bank, cfg, force_grads, bank_rng);
                ++step_counter;
                metrics << "phase=" << phase << " cycle=" << cyc << " step=" << step_counter
                        << " bank=" << bank.size() << " K=" << K << " mean_priority="
                        << st.mean_priority << " gnorm_s=" << st.gnorm_s << " gnorm_m=" << st.gnorm_m
                        << " gnorm_e=" << st.gnorm_e << "\n";
            }
            metrics.flush();
            std::ofstream bs(out_dir + "/bank_stats.txt");
            bs << bank.stats_text(location_counter);
            if (cfg.checkpoint_every_cycles > 0 && (cyc + 1) % cfg.checkpoint_every_cycles == 0) {
                char name[64];
                std::snprintf(name, sizeof name, "/ckpt_p%d_c%05d.ssia", phase, cyc + 1);
                save_checkpoint(out_dir + name, net, &adam, step_counter);
            }
        }
    };

    do_locations(location_counter, cfg.initial_fill, cfg.n_greedy1, cfg.n_random1);
    run_phase(1, cfg.phase1_locations, cfg.k1_start, cfg.k1_end, cfg.n_greedy1, cfg.n_random1,
              /*force_grads=*/false);
    TrainResult result;
    result.ckpt_phase1 = out_dir + "/ckpt_phase1.ssia";
    save_checkpoint(result.ckpt_phase1, net, &adam, step_counter);

    if (cfg.phase2_locations > 0)
        run_phase(2, cfg.phase2_locations, cfg.k2_start, cfg.k2_end, cfg.n_greedy2, cfg.n_random2,
                  /*force_grads=*/true);
    result.ckpt_final = out_dir + "/ckpt_final.ssia";
    save_checkpoint(result.ckpt_final, net, &adam, step_counter);

    result.steps = step_counter;
    result.locations = location_counter;
    result.metrics_path = out_dir + "/metrics.txt";
    return result;
}

}  // namespace ssia

// Acceptance suite: one criterion per numbered block, one [PASS]/[FAIL]
// line each. Run `acceptance` for all criteria or `acceptance <n>` for one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "lab/commands.hpp"
#include "lab/contrastive.hpp"
#include "lab/dataset_io.hpp"
#include "lab/digest.hpp"
#include "lab/encoder.hpp"
#include "lab/evalh.hpp"
#include "lab/pipeline.hpp"
#include "lab/ris.hpp"
#include "lab/synthetic.hpp"
#include "lab/tracker.hpp"
#include "oracles.hpp"

using namespace lab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct Timer {
    double start = now_seconds();
    double elapsed() const { return now_seconds() - start; }
};

bool check(bool ok, const std::string& what) {
    if (!ok) std::printf("       check failed: %s\n", what.c_str());
    return ok;
}

// ---- shared desk-scale experiment setup -----------------------------------

VideoConfig acceptance_videos() {
    VideoConfig vc;
    vc.n_videos = 32;
    vc.frames_per_video = 9;
    vc.objects_per_scene = 2;
    vc.n_categories = 4;
    vc.jitter_boxes_per_object = 2;
    vc.background_boxes = 2;
    vc.max_pose_delta = 14.0;
    return vc;
}

TrainConfig acceptance_train(Regime regime, uint64_t seed) {
    TrainConfig cfg;
    cfg.regime = regime;
    cfg.steps = 240;
    cfg.batch_size = 24;
    cfg.queue_capacity = 256;
    cfg.lr = 0.05;
    cfg.frame_gap = 6; // 2/3 of the 9-frame videos
    cfg.seed = seed;
    return cfg;
}

double viewpoint_top10(const EncoderParams& params,
                       const std::vector<Trajectory>& trajs) {
    FiringConfig cfg;
    cfg.k_list = {10};
    const RisDataset ds =
        build_ris_dataset(trajs, params, ActivationSource::prenorm_output);
    return ris_for_dataset(ds, cfg).by_k.at(10).percentage;
}

struct ProbeData {
    Mat train_x;
    std::vector<int> train_y;
    Mat test_x;
    std::vector<int> test_y;
};

double box_probe_top1(const EncoderParams& params, const LabeledSet& train,
                      const LabeledSet& test) {
    const Mat tr = encode_images(params, train.images);
    const Mat te = encode_images(params, test.images);
    ProbeConfig pc;
    return linear_probe(tr, train.labels, te, test.labels, pc, 0).value;
}

LabeledSet boxes_as_set(const BiasDatasets& d) {
    LabeledSet s;
    for (const Sample& b : d.cropped_boxes) {
        s.images.push_back(b.image);
        s.labels.push_back(b.category);
    }
    return s;
}

LabeledSet scenes_as_set(const BiasDatasets& d) {
    LabeledSet s;
    for (const BiasScene& sc : d.scenes) {
        s.images.push_back(sc.sample.image);
        s.labels.push_back(sc.sample.category);
    }
    return s;
}

// ---- criteria --------------------------------------------------------------

bool criterion1() {
    Timer timer;
    bool ok = true;
    Rng rng(1001);

    // encoder gradients, 20 random instances over varying shapes
    for (int inst = 0; inst < 20; ++inst) {
        EncoderConfig cfg;
        cfg.width = 3 + static_cast<int>(rng.uniform_int(3));
        cfg.height = 3 + static_cast<int>(rng.uniform_int(3));
        cfg.channels = rng.bernoulli(0.5) ? 1 : 3;
        cfg.hidden = 4 + static_cast<int>(rng.uniform_int(5));
        cfg.embed_dim = 3 + static_cast<int>(rng.uniform_int(4));
        EncoderParams p = init_encoder(cfg, rng);
        const int batch = 1 + static_cast<int>(rng.uniform_int(3));
        std::vector<Image> images;
        for (int b = 0; b < batch; ++b) {
            Image img(cfg.width, cfg.height, cfg.channels);
            for (double& v : img.pixels) v = rng.uniform();
            images.push_back(img);
        }
        Mat upstream(batch, cfg.embed_dim);
        for (double& v : upstream.v) v = rng.normal();

        ForwardCache cache;
        forward(p, images, &cache);
        const ParamGrads grads = backward(p, cache, upstream);
        std::vector<double*> params;
        std::vector<double> analytic;
        for (size_t l = 0; l < p.layers.size(); ++l) {
            for (size_t i = 0; i < p.layers[l].w.v.size(); ++i) {
                params.push_back(&p.layers[l].w.v[i]);
                analytic.push_back(grads.w[l].v[i]);
            }
            for (size_t i = 0; i < p.layers[l].b.size(); ++i) {
                params.push_back(&p.layers[l].b[i]);
                analytic.push_back(grads.b[l][i]);
            }
        }
        auto eval = [&]() {
            const Mat emb = forward(p, images);
            double s = 0.0;
            for (size_t i = 0; i < emb.v.size(); ++i) s += emb.v[i] * upstream.v[i];
            return s;
        };
        const double err = oracle::fd_max_rel_error(params, analytic, eval, 1e-5);
        ok &= check(err < 1e-4, "encoder fd error " + std::to_string(err));
    }

    // loss gradients, 20 random instances
    for (int inst = 0; inst < 20; ++inst) {
        const int n = 1 + static_cast<int>(rng.uniform_int(4));
        const int d = 4 + static_cast<int>(rng.uniform_int(6));
        const int nq = 2 + static_cast<int>(rng.uniform_int(12));
        auto unit_rows = [&](int rows) {
            Mat m(rows, d);
            for (int r = 0; r < rows; ++r) {
                double norm = 0.0;
                for (int c = 0; c < d; ++c) {
                    m(r, c) = rng.normal();
                    norm += m(r, c) * m(r, c);
                }
                norm = std::sqrt(norm);
                for (int c = 0; c < d; ++c) m(r, c) /= norm;
            }
            return m;
        };
        Mat q = unit_rows(n);
        const Mat k = unit_rows(n);
        NegativeQueue queue(d, nq);
        queue.push(unit_rows(nq));
        const double tau = 0.07 + rng.uniform() * 0.5;

        const LossResult base = contrastive_loss(q, k, queue, tau);
        std::vector<double*> params;
        std::vector<double> analytic;
        for (size_t i = 0; i < q.v.size(); ++i) {
            params.push_back(&q.v[i]);
            analytic.push_back(base.grad_q.v[i]);
        }
        const double err = oracle::fd_max_rel_error(
            params, analytic,
            [&]() { return contrastive_loss(q, k, queue, tau).loss; }, 1e-6);
        ok &= check(err < 1e-6, "loss fd error " + std::to_string(err));
    }

    const double secs = timer.elapsed();
    ok &= check(secs < 60.0, "runtime " + std::to_string(secs) + "s");
    std::printf("[%s] C1 gradient suite: encoder < 1e-4, loss < 1e-6 over 20+20 "
                "instances (%.1fs)\n",
                ok ? "PASS" : "FAIL", secs);
    return ok;
}

bool criterion2() {
    Timer timer;
    bool ok = true;
    Rng rng(2002);

    // >= 100 random small instances against the brute-force oracle
    int compared = 0;
    while (compared < 100) {
        const int n_classes = 2 + static_cast<int>(rng.uniform_int(3));
        const int n_units = 2 + static_cast<int>(rng.uniform_int(7));
        RisDataset ds;
        int n = 0;
        for (int c = 0; c < n_classes; ++c) {
            const int n_traj = 1 + static_cast<int>(rng.uniform_int(3));
            for (int t = 0; t < n_traj; ++t) {
                const int len = 2 + static_cast<int>(rng.uniform_int(4));
                std::vector<int> idx;
                for (int s = 0; s < len; ++s) {
                    idx.push_back(n++);
                    ds.labels.push_back(c);
                }
                ds.trajectories.push_back(idx);
                ds.trajectory_class.push_back(c);
            }
        }
        if (n > 30) continue;
        ds.h = Mat(n, n_units);
        for (double& v : ds.h.v) v = rng.normal();
        const int k = 1 + static_cast<int>(rng.uniform_int(n_units));
        FiringConfig cfg;
        cfg.k_list = {k};
        const double impl = ris_for_dataset(ds, cfg).by_k.at(k).percentage;
        const double brute = oracle::brute_ris_percentage(
            ds.h, ds.labels, ds.trajectories, ds.trajectory_class, k);
        ok &= check(std::abs(impl - brute) < 1e-12,
                    "ris oracle mismatch " + std::to_string(impl - brute));
        ++compared;
    }

    // perfect-invariant indicator representation scores 100 everywhere
    const Transformation all_tf[6] = {
        Transformation::viewpoint,     Transformation::occlusion,
        Transformation::illum_dir,     Transformation::illum_color,
        Transformation::instance,      Transformation::instance_viewpoint};
    const int n_classes = 4;
    const int k_max = 25;
    for (Transformation tf : all_tf) {
        const auto trajs = make_trajectory_dataset(tf, n_classes, 8, 6, 42);
        RisDataset ds;
        int n = 0;
        for (const Trajectory& t : trajs) {
            std::vector<int> idx;
            for (const Sample& s : t.samples) {
                idx.push_back(n++);
                ds.labels.push_back(s.category);
            }
            ds.trajectories.push_back(idx);
            ds.trajectory_class.push_back(t.category);
        }
        ds.h = Mat(n, n_classes * k_max);
        for (int r = 0; r < n; ++r)
            for (int u = 0; u < ds.h.cols; ++u)
                ds.h(r, u) = (u % n_classes) == ds.labels[r] ? 1.0 : 0.0;
        FiringConfig cfg; // K = {10, 25}
        const RisResult res = ris_for_dataset(ds, cfg);
        for (int k : cfg.k_list)
            ok &= check(std::abs(res.by_k.at(k).percentage - 100.0) < 1e-9,
                        "perfect encoder " + to_string(tf) + " K=" +
                            std::to_string(k) + " -> " +
                            std::to_string(res.by_k.at(k).percentage));
    }

    // random encoder stays within [0, 100] on every transformation
    Rng enc_rng(77);
    EncoderConfig ecfg;
    const EncoderParams random_params = init_encoder(ecfg, enc_rng);
    std::map<Transformation, std::vector<Trajectory>> datasets;
    for (Transformation tf : all_tf)
        datasets[tf] = make_trajectory_dataset(tf, n_classes, 6, 5, 43);
    FiringConfig fcfg;
    const RISReport report = evaluate_all(random_params, datasets, fcfg);
    for (const auto& [t, by_src] : report.scores)
        for (const auto& [src, by_k] : by_src)
            for (const auto& [k, pct] : by_k)
                ok &= check(pct >= 0.0 && pct <= 100.0,
                            "random encoder out of bounds on " + t);

    const double secs = timer.elapsed();
    ok &= check(secs < 60.0, "runtime " + std::to_string(secs) + "s");
    std::printf("[%s] C2 ris oracle suite: 100 oracle instances exact, perfect "
                "encoder 100.0, random encoder bounded (%.1fs)\n",
                ok ? "PASS" : "FAIL", secs);
    return ok;
}

bool criterion3() {
    Timer timer;
    bool ok = true;
    Rng rng(3003);

    // DP vs exhaustive enumeration for every shape up to 4 frames x 4 regions
    for (int n_frames = 2; n_frames <= 4; ++n_frames) {
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<int> regions;
            for (int f = 0; f < n_frames; ++f)
                regions.push_back(1 + static_cast<int>(rng.uniform_int(4)));
            std::vector<Mat> mm;
            for (int f = 0; f + 1 < n_frames; ++f) {
                Mat m(regions[f], regions[f + 1]);
                for (double& v : m.v) v = std::max(0.0, rng.uniform(-0.3, 1.0));
                mm.push_back(m);
            }
            for (int r = 0; r < regions.front(); ++r)
                for (int r2 = 0; r2 < regions.back(); ++r2) {
                    const double dp = track_score(mm, 0, r, n_frames - 1, r2);
                    const double brute =
                        oracle::track_score_paths(mm, 0, r, n_frames - 1, r2);
                    ok &= check(std::abs(dp - brute) < 1e-12, "dp vs paths");
                }
        }
    }

    // closed form score = c^h R^(h-1) / h on constant-cosine matrices
    for (double c : {0.5, 1.0})
        for (int r : {1, 2, 3})
            for (int h : {1, 2, 3}) {
                std::vector<Mat> mm;
                for (int s = 0; s < h; ++s) {
                    Mat m(r, r);
                    std::fill(m.v.begin(), m.v.end(), c);
                    mm.push_back(m);
                }
                const double got = track_score(mm, 0, 0, h, 0);
                const double expect = std::pow(c, h) * std::pow(r, h - 1) / h;
                ok &= check(std::abs(got - expect) < 1e-12, "closed form");
            }

    const double secs = timer.elapsed();
    ok &= check(secs < 60.0, "runtime " + std::to_string(secs) + "s");
    std::printf("[%s] C3 track-score suite: dp = path enumeration (1e-12), "
                "closed-form grid exact (%.1fs)\n",
                ok ? "PASS" : "FAIL", secs);
    return ok;
}

bool criterion4() {
    Timer timer;
    bool ok = true;
    Rng rng(4004);

    for (int trial = 0; trial < 1000; ++trial) {
        const size_t cap = 1 + rng.uniform_int(32);
        const int dim = 1 + static_cast<int>(rng.uniform_int(6));
        NegativeQueue q(dim, cap);
        oracle::QueueReplay replay{cap, {}};
        const int pushes = 1 + static_cast<int>(rng.uniform_int(12));
        for (int p = 0; p < pushes; ++p) {
            Mat b(1 + static_cast<int>(rng.uniform_int(8)), dim);
            for (double& v : b.v) v = rng.normal();
            q.push(b);
            replay.push(b);
        }
        ok &= check(q.size() == replay.rows.size(), "queue size");
        ok &= check(q.as_matrix().v == replay.as_matrix(dim).v, "queue contents");
    }

    // momentum closed form at 1e-12: frozen query, n updates
    EncoderConfig cfg;
    cfg.width = 5;
    cfg.height = 5;
    cfg.channels = 1;
    cfg.hidden = 7;
    cfg.embed_dim = 4;
    EncoderParams pq = init_encoder(cfg, rng);
    EncoderParams pk = init_encoder(cfg, rng);
    for (int n : {1, 10, 100}) {
        EncoderParams k = pk;
        for (int i = 0; i < n; ++i) momentum_update(k, pq, 0.999);
        const double f = std::pow(0.999, n);
        for (size_t l = 0; l < pk.layers.size(); ++l)
            for (size_t i = 0; i < pk.layers[l].w.v.size(); ++i) {
                const double expect = pq.layers[l].w.v[i] +
                                      f * (pk.layers[l].w.v[i] - pq.layers[l].w.v[i]);
                ok &= check(std::abs(k.layers[l].w.v[i] - expect) < 1e-12,
                            "momentum closed form");
            }
    }

    std::printf("[%s] C4 queue/momentum suite: 1000 replay sequences exact, "
                "momentum closed form < 1e-12 (%.1fs)\n",
                ok ? "PASS" : "FAIL", timer.elapsed());
    return ok;
}

bool criterion5() {
    Timer timer;
    bool ok = true;

    const auto videos = make_video_dataset(acceptance_videos(), 501);
    const auto viewpoint_trajs =
        make_trajectory_dataset(Transformation::viewpoint, 4, 8, 6, 502);

    TrainData data;
    data.videos = videos;

    int wins = 0;
    double mean_improvement = 0.0;
    const std::vector<uint64_t> seeds{11, 12, 13};
    for (uint64_t seed : seeds) {
        const TrainResult base = train(data, acceptance_train(Regime::baseline, seed));
        const TrainResult temporal =
            train(data, acceptance_train(Regime::frame_temporal, seed));
        const double ris_base = viewpoint_top10(base.params, viewpoint_trajs);
        const double ris_temporal = viewpoint_top10(temporal.params, viewpoint_trajs);
        std::printf("       seed %llu: viewpoint top-10 baseline %.2f, "
                    "frame_temporal %.2f\n",
                    static_cast<unsigned long long>(seed), ris_base, ris_temporal);
        if (ris_temporal > ris_base) ++wins;
        mean_improvement += (ris_temporal - ris_base) / seeds.size();
    }
    ok &= check(wins >= 2, "frame_temporal wins " + std::to_string(wins) + "/3");
    ok &= check(mean_improvement > 0.0,
                "mean improvement " + std::to_string(mean_improvement));

    std::printf("[%s] C5 temporal invariance: frame_temporal viewpoint top-10 > "
                "baseline in %d/3 seeds, mean improvement %+.2f (%.1fs)\n",
                ok ? "PASS" : "FAIL", wins, mean_improvement, timer.elapsed());
    return ok;
}

bool criterion6() {
    Timer timer;
    bool ok = true;

    const auto videos = make_video_dataset(acceptance_videos(), 601);
    const auto iv_trajs =
        make_trajectory_dataset(Transformation::instance_viewpoint, 4, 8, 6, 602);

    BiasConfig probe_cfg;
    probe_cfg.n_scenes = 160;
    const LabeledSet probe_train = boxes_as_set(make_bias_datasets(probe_cfg, 603));
    const LabeledSet probe_test = boxes_as_set(make_bias_datasets(probe_cfg, 604));

    TrainData data;
    data.videos = videos;

    FiringConfig iv_cfg;
    iv_cfg.k_list = {10};

    auto iv_ris = [&](const EncoderParams& params) {
        const RisDataset ds =
            build_ris_dataset(iv_trajs, params, ActivationSource::prenorm_output);
        return ris_for_dataset(ds, iv_cfg).by_k.at(10).percentage;
    };

    const std::vector<uint64_t> seeds{21, 22, 23};
    int joint_wins = 0;
    std::vector<double> base_probe, gt_probe, rt_probe;
    std::vector<double> purities;

    for (uint64_t seed : seeds) {
        const TrainResult base = train(data, acceptance_train(Regime::baseline, seed));
        const TrainResult gt = train(data, acceptance_train(Regime::gt_tracks, seed));

        // two-stage region tracker: tracks from the frozen baseline checkpoint
        TrackerConfig tc;
        tc.horizon = 6;
        tc.top_r = 64;
        tc.seed = seed;
        tc.threshold = auto_threshold(videos, base.params, tc, 0.9);
        std::vector<Track> tracks;
        for (const Video& v : videos) {
            BuildTracksResult r = build_tracks(v, base.params, tc);
            for (Track& t : r.tracks) tracks.push_back(std::move(t));
        }
        const double purity = track_purity(tracks, videos);
        purities.push_back(purity);

        TrainData rt_data = data;
        rt_data.tracks = tracks;
        const TrainResult rt =
            train(rt_data, acceptance_train(Regime::region_tracker, seed));

        const double p_base = box_probe_top1(base.params, probe_train, probe_test);
        const double p_gt = box_probe_top1(gt.params, probe_train, probe_test);
        const double p_rt = box_probe_top1(rt.params, probe_train, probe_test);
        const double r_base = iv_ris(base.params);
        const double r_gt = iv_ris(gt.params);
        base_probe.push_back(p_base);
        gt_probe.push_back(p_gt);
        rt_probe.push_back(p_rt);

        std::printf("       seed %llu: probe base %.3f gt %.3f rt %.3f | iv-ris "
                    "base %.2f gt %.2f | purity %.2f (%zu tracks)\n",
                    static_cast<unsigned long long>(seed), p_base, p_gt, p_rt,
                    r_base, r_gt, purity, tracks.size());
        if (p_gt > p_base && r_gt > r_base) ++joint_wins;
    }

    ok &= check(joint_wins >= 2,
                "gt_tracks beats baseline on probe+ris in " +
                    std::to_string(joint_wins) + "/3 seeds");
    for (double p : purities)
        ok &= check(p >= 0.7, "track purity " + std::to_string(p));

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double med_base = median(base_probe), med_gt = median(gt_probe),
                 med_rt = median(rt_probe);
    ok &= check(med_base <= med_rt && med_rt <= med_gt,
                "median probe ordering base " + std::to_string(med_base) + " <= rt " +
                    std::to_string(med_rt) + " <= gt " + std::to_string(med_gt));

    std::printf("[%s] C6 tracks help: gt_tracks > baseline (probe & iv-ris) in "
                "%d/3 seeds, purity >= 0.7, region_tracker between baseline and "
                "gt_tracks in the median seed (%.1fs)\n",
                ok ? "PASS" : "FAIL", joint_wins, timer.elapsed());
    return ok;
}

bool criterion7() {
    Timer timer;
    bool ok = true;

    BiasConfig train_cfg;
    train_cfg.n_scenes = 192;
    const BiasDatasets train_sets = make_bias_datasets(train_cfg, 701);

    BiasConfig eval_cfg;
    eval_cfg.n_scenes = 160;
    const BiasDatasets eval_train = make_bias_datasets(eval_cfg, 702);
    const BiasDatasets eval_test = make_bias_datasets(eval_cfg, 703);

    BiasEvalSets eval;
    eval.scene_train = scenes_as_set(eval_train);
    eval.scene_test = scenes_as_set(eval_test);
    eval.box_train = boxes_as_set(eval_train);
    eval.box_test = boxes_as_set(eval_test);

    std::vector<Image> scene_images, box_images;
    for (const BiasScene& s : train_sets.scenes) scene_images.push_back(s.sample.image);
    for (const Sample& s : train_sets.cropped_boxes) box_images.push_back(s.image);

    const TrainConfig cfg = acceptance_train(Regime::baseline, 0);
    const BiasTable table = bias_experiment(
        scene_images, box_images, eval, cfg, cfg, ProbeConfig{}, {31, 32, 33, 34, 35});

    for (int i = 0; i < table.seeds; ++i)
        std::printf("       seed %d: boxes(box-trained %.3f, scene-trained %.3f) "
                    "scenes(box-trained %.3f, scene-trained %.3f)\n",
                    i, table.box_trained.box_eval[i].value,
                    table.scene_trained.box_eval[i].value,
                    table.box_trained.scene_eval[i].value,
                    table.scene_trained.scene_eval[i].value);

    ok &= check(table.box_wins_on_boxes >= 3,
                "box-trained wins on boxes " + std::to_string(table.box_wins_on_boxes) +
                    "/5");
    ok &= check(table.reversed_or_narrowed,
                "margins: boxes " + std::to_string(table.margin_on_boxes) +
                    " scenes " + std::to_string(table.margin_on_scenes));

    std::printf("[%s] C7 dataset bias: box-trained > scene-trained on cropped "
                "boxes in %d/5 seeds, ordering %s on scenes (%.1fs)\n",
                ok ? "PASS" : "FAIL", table.box_wins_on_boxes,
                table.margin_on_scenes < 0 ? "reversed" : "narrowed",
                timer.elapsed());
    return ok;
}

bool criterion8() {
    Timer timer;
    bool ok = true;

    const auto videos = make_video_dataset(acceptance_videos(), 801);
    TrainData data;
    data.videos = videos;

    TrackerConfig tc;
    tc.horizon = 6;
    tc.seed = 1;

    for (Regime regime : {Regime::baseline, Regime::frame_temporal,
                          Regime::gt_tracks, Regime::region_tracker}) {
        TrainData regime_data = data;
        if (regime == Regime::region_tracker) {
            const TrainResult base =
                train(data, acceptance_train(Regime::baseline, 881));
            tc.threshold = auto_threshold(videos, base.params, tc, 0.9);
            for (const Video& v : videos) {
                BuildTracksResult r = build_tracks(v, base.params, tc);
                for (Track& t : r.tracks) regime_data.tracks.push_back(std::move(t));
            }
        }
        const TrainConfig cfg = acceptance_train(regime, 882);
        const TrainResult result = train(regime_data, cfg);

        std::vector<double> losses;
        for (const StepLog& s : result.log) losses.push_back(s.loss);
        const size_t tenth = std::max<size_t>(1, losses.size() / 10);
        auto median_of = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            return v[v.size() / 2];
        };
        const double first = median_of(
            std::vector<double>(losses.begin(), losses.begin() + tenth));
        const double last =
            median_of(std::vector<double>(losses.end() - tenth, losses.end()));
        const double expected = std::log(1.0 + static_cast<double>(cfg.queue_capacity));
        const double first_step = losses.front();

        std::printf("       %s: first-step %.3f (ln(1+K)=%.3f), median first-10%% "
                    "%.3f, last-10%% %.3f\n",
                    to_string(regime).c_str(), first_step, expected, first, last);
        ok &= check(last < first, to_string(regime) + ": loss did not decrease");
        ok &= check(std::abs(first_step - expected) <= 0.15 * expected,
                    to_string(regime) + ": first-step loss off by " +
                        std::to_string(std::abs(first_step - expected) / expected));
    }

    std::printf("[%s] C8 training sanity: every regime decreasing, first-step "
                "loss within 15%% of ln(1+K) (%.1fs)\n",
                ok ? "PASS" : "FAIL", timer.elapsed());
    return ok;
}

// ---- criterion 9: CLI-level bit reproducibility ----------------------------

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

bool criterion9() {
    Timer timer;
    bool ok = true;

    const char* cli_env = std::getenv("LAB_CLI");
    if (!cli_env) {
        std::printf("[FAIL] C9 determinism: LAB_CLI not set\n");
        return false;
    }
    const std::string cli = cli_env;
    const fs::path root = fs::temp_directory_path() / "lab_acceptance_c9";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto p = [&](const std::string& s) { return (root / s).string(); };

    auto run = [&](const std::string& args) {
        const std::string cmdline = cli + " " + args + " > /dev/null 2>&1";
        const int rc = std::system(cmdline.c_str());
        return rc == 0;
    };

    // configs
    write_json_file(p("videos.json"), json{{"kind", "videos"},
                                           {"n_videos", 6},
                                           {"frames_per_video", 9},
                                           {"objects_per_scene", 2}});
    write_json_file(p("traj.json"), json{{"kind", "trajectories"},
                                         {"transformation", "viewpoint"},
                                         {"n_classes", 3},
                                         {"n_trajectories_per_class", 4},
                                         {"steps", 4}});
    write_json_file(p("bias.json"), json{{"kind", "bias"}, {"n_scenes", 24}});
    write_json_file(
        p("train.json"),
        json{{"steps", 12},
             {"batch_size", 8},
             {"queue_capacity", 32},
             {"encoder", {{"hidden", 24}, {"embed_dim", 12}}}});
    write_json_file(p("probe.json"), json{{"steps", 40}});
    write_json_file(
        p("bias_run.json"),
        json{{"n_seeds", 2},
             {"train",
              {{"steps", 8},
               {"batch_size", 8},
               {"queue_capacity", 16},
               {"encoder", {{"hidden", 12}, {"embed_dim", 8}}}}},
             {"probe", {{"steps", 30}}}});

    // every stage twice, byte-compared
    ok &= check(run("generate --config " + p("videos.json") + " --seed 5 --out " + p("vid_a")),
                "generate videos a");
    ok &= check(run("generate --config " + p("videos.json") + " --seed 5 --out " + p("vid_b")),
                "generate videos b");
    ok &= check(slurp(p("vid_a/manifest.json")) == slurp(p("vid_b/manifest.json")),
                "video manifests differ");
    ok &= check(slurp(p("vid_a/data.f32")) == slurp(p("vid_b/data.f32")),
                "video blobs differ");

    ok &= check(run("generate --config " + p("traj.json") + " --seed 6 --out " + p("tr_a")),
                "generate trajectories a");
    ok &= check(run("generate --config " + p("traj.json") + " --seed 6 --out " + p("tr_b")),
                "generate trajectories b");
    ok &= check(slurp(p("tr_a/data.f32")) == slurp(p("tr_b/data.f32")),
                "trajectory blobs differ");

    ok &= check(run("generate --config " + p("bias.json") + " --seed 7 --out " + p("bias_a")),
                "generate bias a");
    ok &= check(run("generate --config " + p("bias.json") + " --seed 7 --out " + p("bias_b")),
                "generate bias b");
    ok &= check(sha256_path(p("bias_a")) == sha256_path(p("bias_b")),
                "bias datasets differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("train --regime frame-temporal --config " + p("train.json") +
                        " --data " + p("vid_a") + " --seed 9 --out " +
                        p(std::string("ck_") + suffix) + " --metrics " +
                        p(std::string("m_") + suffix + ".csv")),
                    "train run");
    ok &= check(slurp(p("ck_a")) == slurp(p("ck_b")), "checkpoints differ");
    ok &= check(slurp(p("m_a.csv")) == slurp(p("m_b.csv")), "metrics differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("track --data " + p("vid_a") + " --ckpt " + p("ck_a") +
                        " --threshold auto --seed 3 --out " +
                        p(std::string("tracks_") + suffix + ".json")),
                    "track run");
    ok &= check(slurp(p("tracks_a.json")) == slurp(p("tracks_b.json")),
                "tracks differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("ris --ckpt " + p("ck_a") + " --data " + p("tr_a") +
                        " --k 5,10 --out " + p(std::string("ris_") + suffix + ".json")),
                    "ris run");
    ok &= check(slurp(p("ris_a.json")) == slurp(p("ris_b.json")), "ris reports differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("probe --ckpt " + p("ck_a") + " --config " + p("probe.json") +
                        " --train-data " + p("bias_a/boxes") + " --test-data " +
                        p("bias_b/boxes") + " --seed 2 --out " +
                        p(std::string("probe_") + suffix + ".json")),
                    "probe run");
    ok &= check(slurp(p("probe_a.json")) == slurp(p("probe_b.json")),
                "probe results differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("bias --config " + p("bias_run.json") + " --train-data " +
                        p("bias_a") + " --eval-train " + p("bias_a") +
                        " --eval-test " + p("bias_b") + " --seed 4 --out " +
                        p(std::string("biasres_") + suffix + ".json")),
                    "bias run");
    ok &= check(slurp(p("biasres_a.json")) == slurp(p("biasres_b.json")),
                "bias results differ");

    for (const char* suffix : {"a", "b"})
        ok &= check(run("report --in ris=" + p("ris_a.json") + " probe=" +
                        p("probe_a.json") + " --out " +
                        p(std::string("report_") + suffix + ".md")),
                    "report run");
    ok &= check(slurp(p("report_a.md")) == slurp(p("report_b.md")),
                "reports differ");

    // pipeline rerun is a no-op
    json manifest;
    manifest["stages"] = json::array();
    manifest["stages"].push_back({{"name", "gen"},
                                  {"kind", "generate"},
                                  {"seed", 5},
                                  {"config", read_json_file(p("traj.json"))},
                                  {"outputs", {{"data", p("pl_data")}}}});
    manifest["stages"].push_back(
        {{"name", "train"},
         {"kind", "train"},
         {"seed", 5},
         {"config", read_json_file(p("train.json"))},
         {"inputs", {{"data", p("pl_data")}}},
         {"outputs", {{"ckpt", p("pl_ckpt")}}}});
    write_json_file(p("pipeline.json"), manifest);

    ok &= check(run("pipeline --manifest " + p("pipeline.json") + " --out " +
                    p("pl_report1.json")),
                "pipeline first run");
    ok &= check(run("pipeline --manifest " + p("pipeline.json") + " --out " +
                    p("pl_report2.json")),
                "pipeline second run");
    const json rep1 = read_json_file(p("pl_report1.json"));
    const json rep2 = read_json_file(p("pl_report2.json"));
    ok &= check(rep1["executed"] == 2, "first pipeline run executed all stages");
    ok &= check(rep2["executed"] == 0 && rep2["skipped"] == 2,
                "pipeline rerun was not a no-op");

    std::printf("[%s] C9 determinism: all CLI stages byte-identical across "
                "reruns, pipeline rerun executed 0 stages (%.1fs)\n",
                ok ? "PASS" : "FAIL", timer.elapsed());
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    } else {
        for (int c = 1; c <= 9; ++c) selected.push_back(c);
    }

    bool all_ok = true;
    for (int c : selected) {
        bool ok = false;
        switch (c) {
            case 1: ok = criterion1(); break;
            case 2: ok = criterion2(); break;
            case 3: ok = criterion3(); break;
            case 4: ok = criterion4(); break;
            case 5: ok = criterion5(); break;
            case 6: ok = criterion6(); break;
            case 7: ok = criterion7(); break;
            case 8: ok = criterion8(); break;
            case 9: ok = criterion9(); break;
            default:
                std::printf("[FAIL] unknown criterion %d\n", c);
        }
        all_ok &= ok;
    }
    return all_ok ? 0 : 1;
}

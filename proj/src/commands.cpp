#include "lab/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include "lab/dataset_io.hpp"

namespace lab::cmd {

namespace fs = std::filesystem;
using nlohmann::json;

TrainConfig parse_train_config(const json& j) {
    TrainConfig c;
    c.regime = regime_from_string(j.value("regime", "baseline"));
    c.temperature = j.value("temperature", c.temperature);
    c.momentum = j.value("momentum", c.momentum);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.sgd_momentum = j.value("sgd_momentum", c.sgd_momentum);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.queue_capacity = j.value("queue_capacity", c.queue_capacity);
    c.frame_gap = j.value("frame_gap", c.frame_gap);
    if (j.contains("aug")) {
        const json& a = j["aug"];
        c.aug.crop_area_min = a.value("crop_area_min", c.aug.crop_area_min);
        c.aug.crop_area_max = a.value("crop_area_max", c.aug.crop_area_max);
        c.aug.flip_prob = a.value("flip_prob", c.aug.flip_prob);
        c.aug.brightness = a.value("brightness", c.aug.brightness);
        c.aug.contrast = a.value("contrast", c.aug.contrast);
        c.aug.grayscale_prob = a.value("grayscale_prob", c.aug.grayscale_prob);
        c.aug.blur_prob = a.value("blur_prob", c.aug.blur_prob);
    }
    if (j.contains("encoder")) {
        const json& e = j["encoder"];
        c.encoder.width = e.value("width", c.encoder.width);
        c.encoder.height = e.value("height", c.encoder.height);
        c.encoder.channels = e.value("channels", c.encoder.channels);
        c.encoder.hidden = e.value("hidden", c.encoder.hidden);
        c.encoder.embed_dim = e.value("embed_dim", c.encoder.embed_dim);
    }
    c.aug.out_width = c.encoder.width;
    c.aug.out_height = c.encoder.height;
    return c;
}

TrackerConfig parse_tracker_config(const json& j) {
    TrackerConfig c;
    c.stride = j.value("stride", c.stride);
    c.horizon = j.value("horizon", c.horizon);
    c.top_r = j.value("top_r", c.top_r);
    if (j.contains("threshold") && j["threshold"].is_number())
        c.threshold = j["threshold"];
    return c;
}

FiringConfig parse_firing_config(const json& j) {
    FiringConfig c;
    const std::string mode = j.value("mode", "class-adaptive");
    if (mode == "class-adaptive" || mode == "class_adaptive")
        c.mode = FiringConfig::Mode::class_adaptive;
    else if (mode == "fixed-rate" || mode == "fixed_rate")
        c.mode = FiringConfig::Mode::fixed_rate;
    else
        throw std::invalid_argument("unknown ris mode: " + mode);
    c.rate = j.value("rate", c.rate);
    if (j.contains("k")) c.k_list = j["k"].get<std::vector<int>>();
    return c;
}

ProbeConfig parse_probe_config(const json& j) {
    ProbeConfig c;
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    return c;
}

void generate(const json& config, uint64_t seed, const std::string& out_dir) {
    const std::string kind = config.at("kind");
    if (kind == "trajectories") {
        const auto trajs = make_trajectory_dataset(
            transformation_from_string(config.at("transformation")),
            config.value("n_classes", 4), config.value("n_trajectories_per_class", 8),
            config.value("steps", 6), seed, config.value("width", 16),
            config.value("height", 16));
        save_trajectories(out_dir, trajs, seed);
    } else if (kind == "videos") {
        VideoConfig vc;
        vc.n_videos = config.value("n_videos", vc.n_videos);
        vc.frames_per_video = config.value("frames_per_video", vc.frames_per_video);
        vc.objects_per_scene = config.value("objects_per_scene", vc.objects_per_scene);
        vc.n_categories = config.value("n_categories", vc.n_categories);
        vc.scene_width = config.value("scene_width", vc.scene_width);
        vc.scene_height = config.value("scene_height", vc.scene_height);
        vc.channels = config.value("channels", vc.channels);
        vc.min_object_px = config.value("min_object_px", vc.min_object_px);
        vc.max_object_px = config.value("max_object_px", vc.max_object_px);
        vc.jitter_boxes_per_object =
            config.value("jitter_boxes_per_object", vc.jitter_boxes_per_object);
        vc.background_boxes = config.value("background_boxes", vc.background_boxes);
        vc.jitter_frac = config.value("jitter_frac", vc.jitter_frac);
        vc.max_pose_delta = config.value("max_pose_delta", vc.max_pose_delta);
        vc.max_occlusion_delta =
            config.value("max_occlusion_delta", vc.max_occlusion_delta);
        vc.max_illum_delta = config.value("max_illum_delta", vc.max_illum_delta);
        vc.max_occlusion = config.value("max_occlusion", vc.max_occlusion);
        vc.background_amplitude =
            config.value("background_amplitude", vc.background_amplitude);
        save_videos(out_dir, make_video_dataset(vc, seed), seed);
    } else if (kind == "bias") {
        BiasConfig bc;
        bc.n_scenes = config.value("n_scenes", bc.n_scenes);
        bc.objects_per_scene = config.value("objects_per_scene", bc.objects_per_scene);
        bc.n_categories = config.value("n_categories", bc.n_categories);
        bc.scene_width = config.value("scene_width", bc.scene_width);
        bc.scene_height = config.value("scene_height", bc.scene_height);
        bc.channels = config.value("channels", bc.channels);
        bc.box_size = config.value("box_size", bc.box_size);
        bc.background_amplitude =
            config.value("background_amplitude", bc.background_amplitude);
        save_bias(out_dir, make_bias_datasets(bc, seed), seed);
    } else {
        throw std::invalid_argument("generate: unknown kind: " + kind);
    }
}

void train_cmd(const json& config, uint64_t seed, const std::string& data_dir,
               const std::string& tracks_path, const std::string& out_ckpt,
               const std::string& metrics_path) {
    TrainConfig cfg = parse_train_config(config);
    cfg.seed = seed;

    const LoadedDataset ds = load_dataset(data_dir);
    TrainData data;
    if (cfg.regime == Regime::baseline) {
        data.frames = ds.all_images();
    } else {
        if (ds.kind != DatasetKind::videos)
            throw std::invalid_argument("train: regime requires a videos dataset");
        data.videos = ds.videos;
    }
    if (cfg.regime == Regime::region_tracker) {
        if (tracks_path.empty())
            throw std::invalid_argument("train: region-tracker regime requires --tracks");
        data.tracks = load_tracks(tracks_path);
    }

    const TrainResult result = train(data, cfg);
    save_checkpoint(out_ckpt, result.params, result.steps);
    if (!metrics_path.empty()) write_metrics_csv(metrics_path, result.log);
    if (result.patch_fallbacks > 0)
        std::cerr << "train: " << result.patch_fallbacks
                  << " frame pairs had no usable track (frame loss only)\n";
}

void track_cmd(const json& config, uint64_t seed, const std::string& data_dir,
               const std::string& ckpt_path, const std::string& out_tracks) {
    TrackerConfig cfg = parse_tracker_config(config);
    cfg.seed = seed;
    const EncoderParams params = load_checkpoint(ckpt_path);
    const LoadedDataset ds = load_dataset(data_dir);
    if (ds.kind != DatasetKind::videos)
        throw std::invalid_argument("track: need a videos dataset");

    const bool auto_thr =
        !config.contains("threshold") ||
        (config["threshold"].is_string() && config["threshold"] == "auto");
    if (auto_thr)
        cfg.threshold = auto_threshold(ds.videos, params, cfg,
                                       config.value("auto_quantile", 0.9));

    std::vector<Track> all;
    int warnings = 0;
    for (const Video& v : ds.videos) {
        BuildTracksResult r = build_tracks(v, params, cfg);
        warnings += r.frames_without_regions;
        for (Track& t : r.tracks) all.push_back(std::move(t));
    }
    save_tracks(out_tracks, all);
    if (warnings > 0)
        std::cerr << "track: " << warnings << " frames had no regions\n";
    std::cerr << "track: kept " << all.size() << " tracks at threshold "
              << cfg.threshold << "\n";
}

void ris_cmd(const json& config, const std::string& ckpt_path,
             const std::vector<std::string>& data_dirs, const std::string& out_path) {
    const FiringConfig cfg = parse_firing_config(config);
    const EncoderParams params = load_checkpoint(ckpt_path);

    std::map<Transformation, std::vector<Trajectory>> datasets;
    for (const std::string& dir : data_dirs) {
        const LoadedDataset ds = load_dataset(dir);
        if (ds.kind != DatasetKind::trajectories)
            throw std::invalid_argument("ris: need trajectory datasets");
        const Transformation t =
            transformation_from_string(ds.manifest.at("transformation"));
        auto& bucket = datasets[t];
        bucket.insert(bucket.end(), ds.trajectories.begin(), ds.trajectories.end());
    }

    RISReport report = evaluate_all(params, datasets, cfg);
    report.meta["checkpoint"] = ckpt_path;
    write_json_file(out_path, ris_report_to_json(report));
    for (const std::string& s : report.skipped)
        std::cerr << "ris: skipped transformation " << s << " (no data)\n";
}

namespace {

void labeled_set_from_dir(const std::string& dir, LabeledSet* out) {
    const LoadedDataset ds = load_dataset(dir);
    out->images = ds.all_images();
    out->labels = ds.all_labels();
    if (out->images.empty() || out->labels.empty())
        throw std::invalid_argument("probe: dataset has no labeled samples: " + dir);
}

} // namespace

void probe_cmd(const json& config, uint64_t seed, const std::string& ckpt_path,
               const std::string& train_dir, const std::string& test_dir,
               const std::string& out_path) {
    const ProbeConfig cfg = parse_probe_config(config);
    const EncoderParams params = load_checkpoint(ckpt_path);

    LabeledSet train_set, test_set;
    labeled_set_from_dir(train_dir, &train_set);
    labeled_set_from_dir(test_dir, &test_set);

    const Mat train_x = encode_images(params, train_set.images);
    const Mat test_x = encode_images(params, test_set.images);

    ProbeResult res = linear_probe(train_x, train_set.labels, test_x,
                                   test_set.labels, cfg, seed);
    res.task = config.value("task", "category");
    res.checkpoint_id = ckpt_path;

    json out = probe_result_to_json(res);
    if (config.value("mean_ap", false)) {
        const Mat scores = probe_scores(train_x, train_set.labels, test_x, cfg);
        out["mean_ap"] = mean_ap(scores, test_set.labels);
    }
    write_json_file(out_path, out);
}

void bias_cmd(const json& config, uint64_t seed, const std::string& train_dir,
              const std::string& eval_train_dir, const std::string& eval_test_dir,
              const std::string& out_path) {
    const LoadedDataset train_scenes =
        load_dataset((fs::path(train_dir) / "scenes").string());
    const LoadedDataset train_boxes =
        load_dataset((fs::path(train_dir) / "boxes").string());

    BiasEvalSets eval;
    labeled_set_from_dir((fs::path(eval_train_dir) / "scenes").string(),
                         &eval.scene_train);
    labeled_set_from_dir((fs::path(eval_test_dir) / "scenes").string(),
                         &eval.scene_test);
    labeled_set_from_dir((fs::path(eval_train_dir) / "boxes").string(),
                         &eval.box_train);
    labeled_set_from_dir((fs::path(eval_test_dir) / "boxes").string(), &eval.box_test);

    const TrainConfig train_cfg = parse_train_config(config.value("train", json::object()));
    const ProbeConfig probe_cfg = parse_probe_config(config.value("probe", json::object()));

    std::vector<uint64_t> seeds;
    if (config.contains("seeds"))
        seeds = config["seeds"].get<std::vector<uint64_t>>();
    else
        for (int i = 0; i < config.value("n_seeds", 5); ++i)
            seeds.push_back(seed + static_cast<uint64_t>(i));

    const BiasTable table =
        bias_experiment(train_scenes.all_images(), train_boxes.all_images(), eval,
                        train_cfg, train_cfg, probe_cfg, seeds);
    write_json_file(out_path, bias_table_to_json(table));
}

void report_cmd(const std::vector<std::pair<std::string, std::string>>& inputs,
                const std::string& out_path) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write report: " + out_path);

    std::vector<std::pair<std::string, RISReport>> ris_reports;
    std::vector<std::pair<std::string, json>> others;
    for (const auto& [label, path] : inputs) {
        const json j = read_json_file(path);
        if (j.is_object() && j.contains("scores") && j.contains("meta"))
            ris_reports.emplace_back(label, ris_report_from_json(j));
        else
            others.emplace_back(label, j);
    }

    if (!ris_reports.empty()) {
        // column layout mirrors the invariance tables: transformation x K
        std::vector<std::string> transformations;
        std::vector<int> ks;
        for (const auto& [t, by_src] : ris_reports.front().second.scores) {
            transformations.push_back(t);
            if (ks.empty())
                for (const auto& [src, by_k] : by_src) {
                    for (const auto& [k, v] : by_k) ks.push_back(k);
                    break;
                }
        }
        out << "# Top-K representation invariance (percent of maximum)\n\n";
        for (const char* source : {"prenorm", "normalized"}) {
            out << "## Activations: " << source << "\n\n|Method|";
            for (const auto& t : transformations)
                for (int k : ks) out << t << " Top-" << k << "|";
            out << "\n|---|";
            for (size_t i = 0; i < transformations.size() * ks.size(); ++i) out << "---|";
            out << "\n";
            for (const auto& [label, rep] : ris_reports) {
                out << "|" << label << "|";
                for (const auto& t : transformations)
                    for (int k : ks) {
                        const auto ti = rep.scores.find(t);
                        char buf[32];
                        double v = -1.0;
                        if (ti != rep.scores.end()) {
                            const auto si = ti->second.find(source);
                            if (si != ti->second.end()) {
                                const auto ki = si->second.find(k);
                                if (ki != si->second.end()) v = ki->second;
                            }
                        }
                        if (v >= 0.0) {
                            std::snprintf(buf, sizeof(buf), "%.2f", v);
                            out << buf << "|";
                        } else {
                            out << "-|";
                        }
                    }
                out << "\n";
            }
            out << "\n";
        }
    }
    for (const auto& [label, j] : others) {
        out << "## " << label << "\n\n```json\n" << j.dump(2) << "\n```\n\n";
    }
    if (!out) throw std::runtime_error("report write failed: " + out_path);
}

} // namespace lab::cmd

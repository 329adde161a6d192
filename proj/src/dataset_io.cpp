#include "lab/dataset_io.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace lab {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "trajectories") return DatasetKind::trajectories;
    if (s == "videos") return DatasetKind::videos;
    if (s == "bias_scenes") return DatasetKind::bias_scenes;
    if (s == "bias_boxes") return DatasetKind::bias_boxes;
    throw std::invalid_argument("unknown dataset kind: " + s);
}

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::trajectories: return "trajectories";
        case DatasetKind::videos: return "videos";
        case DatasetKind::bias_scenes: return "bias_scenes";
        case DatasetKind::bias_boxes: return "bias_boxes";
    }
    throw std::invalid_argument("bad dataset kind");
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    json j;
    in >> j;
    return j;
}

json spec_to_json(const ObjectSpec& s) {
    return json{{"category", s.category},
                {"instance_id", s.instance_id},
                {"size", s.size},
                {"aspect", s.aspect},
                {"marking", s.marking},
                {"pose", s.pose},
                {"occlusion", s.occlusion},
                {"illum_dir", s.illum_dir},
                {"illum_color", {s.illum_color[0], s.illum_color[1], s.illum_color[2]}}};
}

ObjectSpec spec_from_json(const json& j) {
    ObjectSpec s;
    s.category = j.at("category");
    s.instance_id = j.at("instance_id");
    s.size = j.at("size");
    s.aspect = j.at("aspect");
    s.marking = j.at("marking");
    s.pose = j.at("pose");
    s.occlusion = j.at("occlusion");
    s.illum_dir = j.at("illum_dir");
    for (int c = 0; c < 3; ++c) s.illum_color[c] = j.at("illum_color")[c];
    return s;
}

namespace {

json box_to_json(const Box& b) {
    return json{{"id", b.id}, {"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

Box box_from_json(const json& j) {
    return Box{j.at("x"), j.at("y"), j.at("w"), j.at("h"), j.at("id")};
}

void write_blob(const std::string& dir, const std::vector<const Image*>& images) {
    std::ofstream out(fs::path(dir) / kBlobName, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write blob in " + dir);
    std::vector<float> buf;
    for (const Image* img : images) {
        buf.resize(img->pixels.size());
        for (size_t i = 0; i < img->pixels.size(); ++i)
            buf[i] = static_cast<float>(img->pixels[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("blob write failed in " + dir);
}

std::vector<Image> read_blob(const std::string& dir, int count, int w, int h, int c) {
    std::ifstream in(fs::path(dir) / kBlobName, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open blob in " + dir);
    std::vector<Image> images;
    const size_t per = static_cast<size_t>(w) * h * c;
    std::vector<float> buf(per);
    for (int i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(per * sizeof(float)));
        if (!in) throw std::runtime_error("truncated blob in " + dir);
        Image img(w, h, c);
        for (size_t p = 0; p < per; ++p) img.pixels[p] = static_cast<double>(buf[p]);
        images.push_back(std::move(img));
    }
    return images;
}

void base_manifest(json& m, DatasetKind kind, int w, int h, int c, uint64_t seed,
                   int count) {
    m["kind"] = to_string(kind);
    m["width"] = w;
    m["height"] = h;
    m["channels"] = c;
    m["seed"] = seed;
    m["count"] = count;
    m["blob"] = kBlobName;
}

} // namespace

void save_trajectories(const std::string& dir, const std::vector<Trajectory>& trajs,
                       uint64_t seed) {
    if (trajs.empty() || trajs.front().samples.empty())
        throw std::invalid_argument("save_trajectories: empty dataset");
    fs::create_directories(dir);
    const Image& first = trajs.front().samples.front().image;

    json manifest;
    json jtrajs = json::array();
    json jsamples = json::array();
    std::vector<const Image*> images;
    int n_classes = 0;
    for (const Trajectory& t : trajs) {
        json jt;
        jt["category"] = t.category;
        json idx = json::array();
        for (const Sample& s : t.samples) {
            idx.push_back(static_cast<int>(images.size()));
            images.push_back(&s.image);
            jsamples.push_back({{"category", s.category},
                                {"instance_id", s.instance_id},
                                {"spec", spec_to_json(s.spec)}});
            n_classes = std::max(n_classes, s.category + 1);
        }
        jt["sample_indices"] = idx;
        jtrajs.push_back(jt);
    }
    base_manifest(manifest, DatasetKind::trajectories, first.width, first.height,
                  first.channels, seed, static_cast<int>(images.size()));
    manifest["transformation"] = to_string(trajs.front().transformation);
    manifest["n_classes"] = n_classes;
    manifest["trajectories"] = jtrajs;
    manifest["samples"] = jsamples;
    write_json_file((fs::path(dir) / kManifestName).string(), manifest);
    write_blob(dir, images);
}

void save_videos(const std::string& dir, const std::vector<Video>& videos,
                 uint64_t seed) {
    if (videos.empty() || videos.front().frames.empty())
        throw std::invalid_argument("save_videos: empty dataset");
    fs::create_directories(dir);
    const Image& first = videos.front().frames.front();

    json manifest;
    json jvideos = json::array();
    std::vector<const Image*> images;
    for (const Video& v : videos) {
        json jv;
        jv["id"] = v.id;
        json fidx = json::array();
        for (const Image& f : v.frames) {
            fidx.push_back(static_cast<int>(images.size()));
            images.push_back(&f);
        }
        jv["frame_indices"] = fidx;
        json jregions = json::array();
        for (const auto& frame_regions : v.regions) {
            json jr = json::array();
            for (const Box& b : frame_regions) jr.push_back(box_to_json(b));
            jregions.push_back(jr);
        }
        jv["regions"] = jregions;
        json jtracks = json::array();
        for (const auto& track : v.gt_tracks) {
            json jt = json::array();
            for (const auto& [f, r] : track) jt.push_back({f, r});
            jtracks.push_back(jt);
        }
        jv["gt_tracks"] = jtracks;
        json jplaced = json::array();
        for (const auto& frame_placed : v.placed) {
            json jp = json::array();
            for (const PlacedObject& p : frame_placed)
                jp.push_back({{"spec", spec_to_json(p.spec)},
                              {"x", p.x},
                              {"y", p.y},
                              {"w", p.w},
                              {"h", p.h}});
            jplaced.push_back(jp);
        }
        jv["placed"] = jplaced;
        jvideos.push_back(jv);
    }
    base_manifest(manifest, DatasetKind::videos, first.width, first.height,
                  first.channels, seed, static_cast<int>(images.size()));
    manifest["videos"] = jvideos;
    write_json_file((fs::path(dir) / kManifestName).string(), manifest);
    write_blob(dir, images);
}

void save_bias(const std::string& dir, const BiasDatasets& data, uint64_t seed) {
    if (data.scenes.empty()) throw std::invalid_argument("save_bias: empty dataset");
    const std::string scenes_dir = (fs::path(dir) / "scenes").string();
    const std::string boxes_dir = (fs::path(dir) / "boxes").string();
    fs::create_directories(scenes_dir);
    fs::create_directories(boxes_dir);

    {
        const Image& first = data.scenes.front().sample.image;
        json manifest;
        json jsamples = json::array();
        std::vector<const Image*> images;
        for (const BiasScene& s : data.scenes) {
            json js;
            js["category"] = s.sample.category;
            json jboxes = json::array();
            for (size_t b = 0; b < s.boxes.size(); ++b) {
                json jb = box_to_json(s.boxes[b]);
                jb["category"] = s.box_categories[b];
                jboxes.push_back(jb);
            }
            js["boxes"] = jboxes;
            images.push_back(&s.sample.image);
            jsamples.push_back(js);
        }
        base_manifest(manifest, DatasetKind::bias_scenes, first.width, first.height,
                      first.channels, seed, static_cast<int>(images.size()));
        manifest["samples"] = jsamples;
        write_json_file((fs::path(scenes_dir) / kManifestName).string(), manifest);
        write_blob(scenes_dir, images);
    }
    {
        const Image& first = data.cropped_boxes.front().image;
        json manifest;
        json jsamples = json::array();
        std::vector<const Image*> images;
        for (const Sample& s : data.cropped_boxes) {
            images.push_back(&s.image);
            jsamples.push_back({{"category", s.category},
                                {"instance_id", s.instance_id},
                                {"spec", spec_to_json(s.spec)}});
        }
        base_manifest(manifest, DatasetKind::bias_boxes, first.width, first.height,
                      first.channels, seed, static_cast<int>(images.size()));
        manifest["samples"] = jsamples;
        write_json_file((fs::path(boxes_dir) / kManifestName).string(), manifest);
        write_blob(boxes_dir, images);
    }
}

std::vector<Image> LoadedDataset::all_images() const {
    std::vector<Image> out;
    switch (kind) {
        case DatasetKind::trajectories:
            for (const Trajectory& t : trajectories)
                for (const Sample& s : t.samples) out.push_back(s.image);
            break;
        case DatasetKind::videos:
            for (const Video& v : videos)
                for (const Image& f : v.frames) out.push_back(f);
            break;
        case DatasetKind::bias_scenes:
        case DatasetKind::bias_boxes:
            for (const Sample& s : samples) out.push_back(s.image);
            break;
    }
    return out;
}

std::vector<int> LoadedDataset::all_labels() const {
    std::vector<int> out;
    switch (kind) {
        case DatasetKind::trajectories:
            for (const Trajectory& t : trajectories)
                for (const Sample& s : t.samples) out.push_back(s.category);
            break;
        case DatasetKind::videos:
            break; // frames carry no single-label ground truth
        case DatasetKind::bias_scenes:
        case DatasetKind::bias_boxes:
            for (const Sample& s : samples) out.push_back(s.category);
            break;
    }
    return out;
}

LoadedDataset load_dataset(const std::string& dir) {
    const json manifest = read_json_file((fs::path(dir) / kManifestName).string());
    LoadedDataset ds;
    ds.manifest = manifest;
    ds.kind = dataset_kind_from_string(manifest.at("kind"));
    const int w = manifest.at("width"), h = manifest.at("height"),
              c = manifest.at("channels");
    std::vector<Image> images = read_blob(dir, manifest.at("count"), w, h, c);

    switch (ds.kind) {
        case DatasetKind::trajectories: {
            const json& jsamples = manifest.at("samples");
            const Transformation tf =
                transformation_from_string(manifest.at("transformation"));
            for (const json& jt : manifest.at("trajectories")) {
                Trajectory t;
                t.transformation = tf;
                t.category = jt.at("category");
                for (int idx : jt.at("sample_indices")) {
                    Sample s;
                    s.image = images[idx];
                    s.category = jsamples[idx].at("category");
                    s.instance_id = jsamples[idx].at("instance_id");
                    s.spec = spec_from_json(jsamples[idx].at("spec"));
                    t.samples.push_back(std::move(s));
                }
                ds.trajectories.push_back(std::move(t));
            }
            break;
        }
        case DatasetKind::videos: {
            for (const json& jv : manifest.at("videos")) {
                Video v;
                v.id = jv.at("id");
                for (int idx : jv.at("frame_indices")) v.frames.push_back(images[idx]);
                for (const json& jr : jv.at("regions")) {
                    std::vector<Box> frame_regions;
                    for (const json& jb : jr) frame_regions.push_back(box_from_json(jb));
                    v.regions.push_back(std::move(frame_regions));
                }
                for (const json& jt : jv.at("gt_tracks")) {
                    std::vector<std::pair<int, int>> track;
                    for (const json& e : jt) track.emplace_back(e[0], e[1]);
                    v.gt_tracks.push_back(std::move(track));
                }
                if (jv.contains("placed")) {
                    for (const json& jf : jv.at("placed")) {
                        std::vector<PlacedObject> frame_placed;
                        for (const json& jp : jf)
                            frame_placed.push_back({spec_from_json(jp.at("spec")),
                                                    jp.at("x"), jp.at("y"), jp.at("w"),
                                                    jp.at("h")});
                        v.placed.push_back(std::move(frame_placed));
                    }
                }
                ds.videos.push_back(std::move(v));
            }
            break;
        }
        case DatasetKind::bias_scenes: {
            int i = 0;
            for (const json& js : manifest.at("samples")) {
                BiasScene scene;
                scene.sample.image = images[i];
                scene.sample.category = js.at("category");
                for (const json& jb : js.at("boxes")) {
                    scene.boxes.push_back(box_from_json(jb));
                    scene.box_categories.push_back(jb.at("category"));
                }
                Sample s;
                s.image = images[i];
                s.category = js.at("category");
                ds.samples.push_back(std::move(s));
                ds.scenes.push_back(std::move(scene));
                ++i;
            }
            break;
        }
        case DatasetKind::bias_boxes: {
            int i = 0;
            for (const json& js : manifest.at("samples")) {
                Sample s;
                s.image = images[i];
                s.category = js.at("category");
                s.instance_id = js.at("instance_id");
                s.spec = spec_from_json(js.at("spec"));
                ds.samples.push_back(std::move(s));
                ++i;
            }
            break;
        }
    }
    return ds;
}

void save_tracks(const std::string& path, const std::vector<Track>& tracks) {
    json j = json::array();
    for (const Track& t : tracks) {
        json entries = json::array();
        for (const auto& [f, r] : t.entries) entries.push_back({f, r});
        j.push_back({{"video", t.video}, {"entries", entries}, {"score", t.score}});
    }
    write_json_file(path, j);
}

std::vector<Track> load_tracks(const std::string& path) {
    const json j = read_json_file(path);
    std::vector<Track> out;
    for (const json& jt : j) {
        Track t;
        t.video = jt.at("video");
        t.score = jt.at("score");
        for (const json& e : jt.at("entries")) t.entries.emplace_back(e[0], e[1]);
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace lab

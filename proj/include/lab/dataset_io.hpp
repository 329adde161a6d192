#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lab/synthetic.hpp"
#include "lab/tracker_types.hpp"

namespace lab {

// On-disk dataset layout: <dir>/manifest.json plus <dir>/data.f32, a raw
// little-endian float32 pixel blob, row-major, samples concatenated in
// manifest order.
constexpr const char* kManifestName = "manifest.json";
constexpr const char* kBlobName = "data.f32";

enum class DatasetKind { trajectories, videos, bias_scenes, bias_boxes };

DatasetKind dataset_kind_from_string(const std::string& s);
std::string to_string(DatasetKind k);

void save_trajectories(const std::string& dir, const std::vector<Trajectory>& trajs,
                       uint64_t seed);
void save_videos(const std::string& dir, const std::vector<Video>& videos,
                 uint64_t seed);
// Writes <dir>/scenes and <dir>/boxes.
void save_bias(const std::string& dir, const BiasDatasets& data, uint64_t seed);

struct LoadedDataset {
    DatasetKind kind = DatasetKind::trajectories;
    nlohmann::json manifest;
    std::vector<Trajectory> trajectories;
    std::vector<Video> videos;       // videos kind
    std::vector<Sample> samples;     // bias kinds
    std::vector<BiasScene> scenes;   // bias_scenes kind only

    // All images with their classification labels, whatever the kind.
    std::vector<Image> all_images() const;
    std::vector<int> all_labels() const;
};

LoadedDataset load_dataset(const std::string& dir);

void save_tracks(const std::string& path, const std::vector<Track>& tracks);
std::vector<Track> load_tracks(const std::string& path);

nlohmann::json spec_to_json(const ObjectSpec& spec);
ObjectSpec spec_from_json(const nlohmann::json& j);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

} // namespace lab

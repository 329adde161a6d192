#include "lab/ris.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lab {

using nlohmann::json;

namespace {

void validate_dataset(const RisDataset& ds) {
    const int n = ds.h.rows;
    if (n < 2) throw std::invalid_argument("ris: need at least 2 samples");
    if (static_cast<int>(ds.labels.size()) != n)
        throw std::invalid_argument("ris: label count mismatch");
    if (ds.trajectories.size() != ds.trajectory_class.size())
        throw std::invalid_argument("ris: trajectory class count mismatch");
    for (const auto& t : ds.trajectories) {
        if (t.empty()) throw std::invalid_argument("ris: empty trajectory");
        for (int idx : t)
            if (idx < 0 || idx >= n)
                throw std::invalid_argument("ris: trajectory index out of range");
    }
}

int count_classes(const RisDataset& ds) {
    int c = 0;
    for (int l : ds.labels) {
        if (l < 0) throw std::invalid_argument("ris: negative label");
        c = std::max(c, l + 1);
    }
    return c;
}

double local_rate_for(const RisDataset& ds,
                      const std::vector<int>& class_trajectories, int unit,
                      int sign, double threshold) {
    if (class_trajectories.empty()) return 0.0;
    double sum = 0.0;
    for (int ti : class_trajectories) {
        const std::vector<int>& traj = ds.trajectories[ti];
        int fired = 0;
        for (int idx : traj)
            if (sign * ds.h(idx, unit) > threshold) ++fired;
        sum += static_cast<double>(fired) / traj.size();
    }
    return sum / class_trajectories.size();
}

// Calibration for one (unit, target rate, trajectory group) under one sign.
UnitClassCalibration calibrate_sign(const RisDataset& ds,
                                    const std::vector<double>& sorted_desc,
                                    const std::vector<int>& class_trajectories,
                                    int unit, int sign, int m) {
    const int n = ds.h.rows;
    UnitClassCalibration c;
    c.sign = sign;
    if (m <= 0 || m >= n) {
        c.degenerate = true;
        return c;
    }
    c.threshold = 0.5 * (sorted_desc[m - 1] + sorted_desc[m]);
    int fired = 0;
    for (double v : sorted_desc) {
        if (v > c.threshold)
            ++fired;
        else
            break;
    }
    c.global_rate = static_cast<double>(fired) / n;
    if (fired == 0) {
        c.degenerate = true;
        return c;
    }
    c.local_rate = local_rate_for(ds, class_trajectories, unit, sign, c.threshold);
    c.invariance = c.local_rate / c.global_rate;
    return c;
}

} // namespace

UnitCalibration calibrate(const RisDataset& ds, const FiringConfig& cfg) {
    validate_dataset(ds);
    const int n = ds.h.rows;
    const int n_units = ds.h.cols;
    const int n_classes = count_classes(ds);

    std::vector<int> class_count(n_classes, 0);
    for (int l : ds.labels) class_count[l]++;
    for (int y = 0; y < n_classes; ++y)
        if (class_count[y] == 0)
            throw std::invalid_argument("ris: class without samples");

    std::vector<std::vector<int>> class_trajs(n_classes);
    for (size_t t = 0; t < ds.trajectories.size(); ++t) {
        const int y = ds.trajectory_class[t];
        if (y < 0 || y >= n_classes)
            throw std::invalid_argument("ris: trajectory class out of range");
        class_trajs[y].push_back(static_cast<int>(t));
    }

    UnitCalibration out;
    out.mode = cfg.mode;
    out.n_units = n_units;
    out.n_classes = n_classes;
    for (int y = 0; y < n_classes; ++y)
        out.class_prior.push_back(static_cast<double>(class_count[y]) / n);

    std::vector<int> all_trajs(ds.trajectories.size());
    std::iota(all_trajs.begin(), all_trajs.end(), 0);

    std::vector<double> pos(n), neg(n);
    for (int i = 0; i < n_units; ++i) {
        for (int r = 0; r < n; ++r) pos[r] = ds.h(r, i);
        std::sort(pos.begin(), pos.end(), std::greater<double>());
        for (int r = 0; r < n; ++r) neg[r] = -pos[n - 1 - r]; // descending -h

        std::vector<UnitClassCalibration> per_class;
        if (cfg.mode == FiringConfig::Mode::class_adaptive) {
            for (int y = 0; y < n_classes; ++y) {
                const int m = static_cast<int>(
                    std::llround(out.class_prior[y] * static_cast<double>(n)));
                UnitClassCalibration cp =
                    calibrate_sign(ds, pos, class_trajs[y], i, 1, m);
                UnitClassCalibration cn =
                    calibrate_sign(ds, neg, class_trajs[y], i, -1, m);
                per_class.push_back(cn.invariance > cp.invariance ? cn : cp);
            }
        } else {
            const int m = static_cast<int>(
                std::llround(cfg.rate * static_cast<double>(n)));
            UnitClassCalibration cp = calibrate_sign(ds, pos, all_trajs, i, 1, m);
            UnitClassCalibration cn = calibrate_sign(ds, neg, all_trajs, i, -1, m);
            per_class.push_back(cn.invariance > cp.invariance ? cn : cp);
        }
        out.units.push_back(std::move(per_class));
    }
    return out;
}

double local_firing_rate(const UnitCalibration& calib, const RisDataset& ds,
                         int cls, int unit) {
    const int col = calib.mode == FiringConfig::Mode::class_adaptive ? cls : 0;
    const UnitClassCalibration& c = calib.units.at(unit).at(col);
    std::vector<int> trajs;
    for (size_t t = 0; t < ds.trajectories.size(); ++t)
        if (calib.mode != FiringConfig::Mode::class_adaptive ||
            ds.trajectory_class[t] == cls)
            trajs.push_back(static_cast<int>(t));
    for (int ti : trajs)
        if (ds.trajectories[ti].empty())
            throw std::invalid_argument("local_firing_rate: empty trajectory");
    return local_rate_for(ds, trajs, unit, c.sign, c.threshold);
}

TopKResult top_k_ris(const UnitCalibration& calib, int k) {
    if (k < 1 || k > calib.n_units)
        throw std::invalid_argument("top_k_ris: K out of range");
    TopKResult res;
    const int n_groups =
        calib.mode == FiringConfig::Mode::class_adaptive ? calib.n_classes : 1;

    for (int y = 0; y < n_groups; ++y) {
        std::vector<int> eligible;
        for (int i = 0; i < calib.n_units; ++i)
            if (!calib.units[i][y].degenerate) eligible.push_back(i);

        if (eligible.empty()) {
            res.class_percentage.push_back(0.0);
            res.class_top_units.emplace_back();
            res.degenerate_classes++;
            continue;
        }
        if (static_cast<int>(eligible.size()) < k)
            throw std::invalid_argument(
                "top_k_ris: K exceeds the non-degenerate unit count");

        std::sort(eligible.begin(), eligible.end(), [&](int a, int b) {
            const double ia = calib.units[a][y].invariance;
            const double ib = calib.units[b][y].invariance;
            if (ia != ib) return ia > ib;
            return a < b;
        });
        eligible.resize(k);

        double num = 0.0, den = 0.0;
        for (int i : eligible) {
            num += calib.units[i][y].invariance;
            den += 1.0 / calib.units[i][y].global_rate;
        }
        res.class_percentage.push_back(den > 0.0 ? num / den : 0.0);
        res.class_top_units.push_back(eligible);
    }

    double mean = 0.0;
    for (double p : res.class_percentage) mean += p;
    res.percentage = 100.0 * mean / n_groups;
    return res;
}

RisResult ris_for_dataset(const RisDataset& ds, const FiringConfig& cfg) {
    RisResult res;
    res.calibration = calibrate(ds, cfg);
    for (int k : cfg.k_list) res.by_k[k] = top_k_ris(res.calibration, k);
    return res;
}

RisDataset build_ris_dataset(const std::vector<Trajectory>& trajectories,
                             const EncoderParams& params, ActivationSource source) {
    RisDataset ds;
    std::vector<Image> images;
    for (const Trajectory& t : trajectories) {
        std::vector<int> idx;
        for (const Sample& s : t.samples) {
            idx.push_back(static_cast<int>(images.size()));
            images.push_back(s.image);
            ds.labels.push_back(s.category);
        }
        ds.trajectories.push_back(std::move(idx));
        ds.trajectory_class.push_back(t.category);
    }
    if (images.empty()) throw std::invalid_argument("build_ris_dataset: no samples");
    ds.h = activations(params, images, source);
    return ds;
}

RISReport evaluate_all(const EncoderParams& params,
                       const std::map<Transformation, std::vector<Trajectory>>& datasets,
                       const FiringConfig& cfg) {
    RISReport report;
    report.meta["mode"] = cfg.mode == FiringConfig::Mode::class_adaptive
                              ? "class_adaptive"
                              : "fixed_rate";
    report.meta["k_list"] = cfg.k_list;
    report.meta["embed_dim"] = params.cfg.embed_dim;

    const ActivationSource sources[2] = {ActivationSource::prenorm_output,
                                         ActivationSource::normalized_output};
    for (const auto& [transformation, trajs] : datasets) {
        const std::string tname = to_string(transformation);
        if (trajs.empty()) {
            report.skipped.push_back(tname);
            continue;
        }
        for (ActivationSource src : sources) {
            const RisDataset ds = build_ris_dataset(trajs, params, src);
            const RisResult res = ris_for_dataset(ds, cfg);
            for (const auto& [k, topk] : res.by_k)
                report.scores[tname][to_string(src)][k] = topk.percentage;
            if (src == ActivationSource::prenorm_output) {
                json table = json::array();
                for (int i = 0; i < res.calibration.n_units; ++i) {
                    json row = json::array();
                    for (const auto& c : res.calibration.units[i])
                        row.push_back(c.invariance);
                    table.push_back(row);
                }
                report.tables[tname] = table;
            }
        }
    }
    return report;
}

json ris_report_to_json(const RISReport& report) {
    json j;
    j["meta"] = report.meta;
    json scores;
    for (const auto& [t, by_src] : report.scores) {
        json src_obj;
        for (const auto& [src, by_k] : by_src) {
            json k_obj;
            for (const auto& [k, pct] : by_k) k_obj[std::to_string(k)] = pct;
            src_obj[src] = k_obj;
        }
        scores[t] = src_obj;
    }
    j["scores"] = scores;
    json tables;
    for (const auto& [t, table] : report.tables) tables[t] = table;
    j["invariance_tables"] = tables;
    j["skipped"] = report.skipped;
    return j;
}

RISReport ris_report_from_json(const json& j) {
    RISReport r;
    r.meta = j.at("meta");
    for (const auto& [t, by_src] : j.at("scores").items())
        for (const auto& [src, by_k] : by_src.items())
            for (const auto& [k, pct] : by_k.items())
                r.scores[t][src][std::stoi(k)] = pct.get<double>();
    if (j.contains("invariance_tables"))
        for (const auto& [t, table] : j.at("invariance_tables").items())
            r.tables[t] = table;
    if (j.contains("skipped"))
        for (const auto& s : j.at("skipped")) r.skipped.push_back(s.get<std::string>());
    return r;
}

} // namespace lab

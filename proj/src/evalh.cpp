#include "lab/evalh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace lab {

using nlohmann::json;

namespace {

int n_classes_of(const std::vector<int>& labels) {
    int c = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("probe: negative label");
        c = std::max(c, l + 1);
    }
    return c;
}

struct SoftmaxModel {
    Mat w; // (D, C)
    std::vector<double> b;
};

SoftmaxModel fit_softmax(const Mat& x, const std::vector<int>& y, int n_classes,
                         const ProbeConfig& cfg) {
    SoftmaxModel m;
    m.w = Mat(x.cols, n_classes);
    m.b.assign(n_classes, 0.0);
    const int n = x.rows;

    Mat grad_w(x.cols, n_classes);
    std::vector<double> grad_b(n_classes);
    std::vector<double> logits(n_classes);
    for (int step = 0; step < cfg.steps; ++step) {
        std::fill(grad_w.v.begin(), grad_w.v.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        for (int r = 0; r < n; ++r) {
            const double* xr = x.row(r);
            for (int c = 0; c < n_classes; ++c) logits[c] = m.b[c];
            for (int d = 0; d < x.cols; ++d) {
                const double xv = xr[d];
                if (xv == 0.0) continue;
                const double* wr = m.w.row(d);
                for (int c = 0; c < n_classes; ++c) logits[c] += xv * wr[c];
            }
            const double mx = *std::max_element(logits.begin(), logits.end());
            double sum = 0.0;
            for (int c = 0; c < n_classes; ++c) {
                logits[c] = std::exp(logits[c] - mx);
                sum += logits[c];
            }
            for (int c = 0; c < n_classes; ++c) {
                const double p = logits[c] / sum - (y[r] == c ? 1.0 : 0.0);
                grad_b[c] += p;
                for (int d = 0; d < x.cols; ++d) grad_w(d, c) += xr[d] * p;
            }
        }
        const double scale = cfg.lr / n;
        for (size_t i = 0; i < m.w.v.size(); ++i) m.w.v[i] -= scale * grad_w.v[i];
        for (int c = 0; c < n_classes; ++c) m.b[c] -= scale * grad_b[c];
    }
    return m;
}

Mat model_scores(const SoftmaxModel& m, const Mat& x) {
    Mat s(x.rows, static_cast<int>(m.b.size()));
    for (int r = 0; r < x.rows; ++r) {
        double* sr = s.row(r);
        for (size_t c = 0; c < m.b.size(); ++c) sr[c] = m.b[c];
        const double* xr = x.row(r);
        for (int d = 0; d < x.cols; ++d) {
            const double xv = xr[d];
            if (xv == 0.0) continue;
            const double* wr = m.w.row(d);
            for (size_t c = 0; c < m.b.size(); ++c) sr[c] += xv * wr[c];
        }
    }
    return s;
}

} // namespace

ProbeResult linear_probe(const Mat& train_x, const std::vector<int>& train_y,
                         const Mat& test_x, const std::vector<int>& test_y,
                         const ProbeConfig& cfg, uint64_t seed) {
    if (train_x.rows != static_cast<int>(train_y.size()) ||
        test_x.rows != static_cast<int>(test_y.size()))
        throw std::invalid_argument("linear_probe: label count mismatch");
    if (train_x.cols != test_x.cols)
        throw std::invalid_argument("linear_probe: feature dim mismatch");

    const int n_classes = std::max(n_classes_of(train_y), n_classes_of(test_y));
    std::set<int> train_classes(train_y.begin(), train_y.end());
    for (int c = 0; c < n_classes; ++c)
        if (!train_classes.count(c))
            throw std::invalid_argument("linear_probe: class missing from train set");

    const SoftmaxModel model = fit_softmax(train_x, train_y, n_classes, cfg);
    const Mat scores = model_scores(model, test_x);

    int correct = 0;
    for (int r = 0; r < scores.rows; ++r) {
        int best = 0;
        for (int c = 1; c < n_classes; ++c)
            if (scores(r, c) > scores(r, best)) best = c; // ties: lowest class id
        if (best == test_y[r]) ++correct;
    }

    ProbeResult res;
    res.metric = "top1";
    res.value = static_cast<double>(correct) / std::max(1, scores.rows);
    res.train_size = train_x.rows;
    res.test_size = test_x.rows;
    res.seed = seed;
    return res;
}

Mat probe_scores(const Mat& train_x, const std::vector<int>& train_y,
                 const Mat& eval_x, const ProbeConfig& cfg) {
    const int n_classes = n_classes_of(train_y);
    return model_scores(fit_softmax(train_x, train_y, n_classes, cfg), eval_x);
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& positive) {
    if (scores.size() != positive.size())
        throw std::invalid_argument("average_precision: size mismatch");
    int n_pos = 0;
    for (int p : positive) n_pos += p ? 1 : 0;
    if (n_pos == 0)
        throw std::invalid_argument("average_precision: no positives");

    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    int hits = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (positive[order[rank]]) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
        }
    }
    return ap / n_pos;
}

double mean_ap(const Mat& scores, const std::vector<int>& labels) {
    if (scores.rows != static_cast<int>(labels.size()))
        throw std::invalid_argument("mean_ap: label count mismatch");
    double sum = 0.0;
    for (int c = 0; c < scores.cols; ++c) {
        std::vector<double> col(scores.rows);
        std::vector<int> pos(scores.rows);
        for (int r = 0; r < scores.rows; ++r) {
            col[r] = scores(r, c);
            pos[r] = labels[r] == c ? 1 : 0;
        }
        sum += average_precision(col, pos);
    }
    return sum / scores.cols;
}

BiasTable bias_experiment(const std::vector<Image>& scene_training_images,
                          const std::vector<Image>& box_training_images,
                          const BiasEvalSets& eval_sets,
                          const TrainConfig& scene_arm_config,
                          const TrainConfig& box_arm_config,
                          const ProbeConfig& probe_cfg,
                          const std::vector<uint64_t>& seeds) {
    if (scene_arm_config.steps != box_arm_config.steps ||
        scene_arm_config.batch_size != box_arm_config.batch_size)
        throw std::invalid_argument("bias_experiment: unmatched training budgets");
    if (seeds.empty()) throw std::invalid_argument("bias_experiment: no seeds");

    BiasTable table;
    table.scene_trained.name = "scene_trained";
    table.box_trained.name = "box_trained";
    table.seeds = static_cast<int>(seeds.size());

    auto probe_on = [&](const EncoderParams& params, const LabeledSet& train,
                        const LabeledSet& test, const std::string& task,
                        uint64_t seed) {
        const Mat tr = encode_images(params, train.images);
        const Mat te = encode_images(params, test.images);
        ProbeResult r =
            linear_probe(tr, train.labels, te, test.labels, probe_cfg, seed);
        r.task = task;
        return r;
    };

    for (uint64_t seed : seeds) {
        TrainConfig cfg_s = scene_arm_config;
        TrainConfig cfg_b = box_arm_config;
        cfg_s.regime = Regime::baseline;
        cfg_b.regime = Regime::baseline;
        cfg_s.seed = seed;
        cfg_b.seed = seed;

        TrainData scene_data;
        scene_data.frames = scene_training_images;
        TrainData box_data;
        box_data.frames = box_training_images;

        const TrainResult arm_scene = train(scene_data, cfg_s);
        const TrainResult arm_box = train(box_data, cfg_b);

        table.scene_trained.box_eval.push_back(probe_on(
            arm_scene.params, eval_sets.box_train, eval_sets.box_test, "boxes", seed));
        table.scene_trained.scene_eval.push_back(probe_on(
            arm_scene.params, eval_sets.scene_train, eval_sets.scene_test, "scenes", seed));
        table.box_trained.box_eval.push_back(probe_on(
            arm_box.params, eval_sets.box_train, eval_sets.box_test, "boxes", seed));
        table.box_trained.scene_eval.push_back(probe_on(
            arm_box.params, eval_sets.scene_train, eval_sets.scene_test, "scenes", seed));
    }

    for (int i = 0; i < table.seeds; ++i) {
        const double b_box = table.box_trained.box_eval[i].value;
        const double s_box = table.scene_trained.box_eval[i].value;
        const double b_scene = table.box_trained.scene_eval[i].value;
        const double s_scene = table.scene_trained.scene_eval[i].value;
        if (b_box > s_box) table.box_wins_on_boxes++;
        table.margin_on_boxes += (b_box - s_box) / table.seeds;
        table.margin_on_scenes += (b_scene - s_scene) / table.seeds;
    }
    table.reversed_or_narrowed = table.margin_on_scenes < table.margin_on_boxes;
    return table;
}

json probe_result_to_json(const ProbeResult& r) {
    return json{{"task", r.task},       {"metric", r.metric},
                {"value", r.value},     {"train_size", r.train_size},
                {"test_size", r.test_size}, {"seed", r.seed},
                {"checkpoint", r.checkpoint_id}};
}

json bias_table_to_json(const BiasTable& t) {
    auto arm = [](const BiasArm& a) {
        json j;
        j["name"] = a.name;
        j["box_eval"] = json::array();
        j["scene_eval"] = json::array();
        for (const auto& r : a.box_eval) j["box_eval"].push_back(probe_result_to_json(r));
        for (const auto& r : a.scene_eval)
            j["scene_eval"].push_back(probe_result_to_json(r));
        return j;
    };
    json j;
    j["seeds"] = t.seeds;
    j["scene_trained"] = arm(t.scene_trained);
    j["box_trained"] = arm(t.box_trained);
    j["verdict"] = {{"box_wins_on_boxes", t.box_wins_on_boxes},
                    {"margin_on_boxes", t.margin_on_boxes},
                    {"margin_on_scenes", t.margin_on_scenes},
                    {"reversed_or_narrowed", t.reversed_or_narrowed}};
    return j;
}

} // namespace lab

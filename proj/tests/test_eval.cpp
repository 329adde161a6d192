#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lab/evalh.hpp"
#include "lab/rng.hpp"
#include "oracles.hpp"

using namespace lab;

TEST_CASE("linearly separable embeddings probe to 1.0") {
    Rng rng(80);
    const int n = 40, d = 4;
    Mat train_x(n, d), test_x(n, d);
    std::vector<int> train_y(n), test_y(n);
    for (int r = 0; r < n; ++r) {
        const int cls = r % 2;
        for (int c = 0; c < d; ++c) {
            train_x(r, c) = rng.uniform() * 0.1 + (c == cls ? 1.0 : 0.0);
            test_x(r, c) = rng.uniform() * 0.1 + (c == cls ? 1.0 : 0.0);
        }
        train_y[r] = cls;
        test_y[r] = cls;
    }
    const ProbeResult res = linear_probe(train_x, train_y, test_x, test_y, {}, 1);
    CHECK(res.value == 1.0);
    CHECK(res.metric == "top1");

    // determinism: identical inputs, identical result
    const ProbeResult res2 = linear_probe(train_x, train_y, test_x, test_y, {}, 1);
    CHECK(res2.value == res.value);
}

TEST_CASE("shuffled labels probe to chance level") {
    Rng rng(81);
    const int n = 160, d = 8, classes = 4;
    double mean = 0.0;
    const int n_seeds = 5;
    for (int trial = 0; trial < n_seeds; ++trial) {
        Mat train_x(n, d), test_x(n, d);
        std::vector<int> train_y(n), test_y(n);
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < d; ++c) {
                train_x(r, c) = rng.normal();
                test_x(r, c) = rng.normal();
            }
            train_y[r] = r % classes; // labels independent of features
            test_y[r] = static_cast<int>(rng.uniform_int(classes));
        }
        mean += linear_probe(train_x, train_y, test_x, test_y, {}, trial).value;
    }
    mean /= n_seeds;
    CHECK(mean > 0.25 - 0.05);
    CHECK(mean < 0.25 + 0.05);
}

TEST_CASE("missing train class is an error") {
    Mat x(4, 2);
    std::vector<int> y{0, 0, 0, 0};
    Mat tx(2, 2);
    std::vector<int> ty{0, 1};
    CHECK_THROWS_AS(linear_probe(x, y, tx, ty, {}, 0), std::invalid_argument);
}

TEST_CASE("average precision: perfect ranking and the worked example") {
    CHECK(average_precision({0.9, 0.5, 0.1}, {1, 0, 0}) == 1.0);
    CHECK(average_precision({0.9, 0.8, 0.7}, {1, 0, 1}) ==
          doctest::Approx(0.8333333333333333).epsilon(1e-15));
    CHECK_THROWS_AS(average_precision({0.5}, {0}), std::invalid_argument);
}

TEST_CASE("tied scores follow the stable-sort rule, matching the oracle") {
    const std::vector<double> scores{0.5, 0.5, 0.5, 0.5};
    const std::vector<int> pos{0, 1, 1, 0};
    CHECK(average_precision(scores, pos) ==
          doctest::Approx(oracle::ap_rank_arithmetic(scores, pos)).epsilon(1e-15));
}

TEST_CASE("average precision equals the rank-arithmetic oracle exhaustively") {
    Rng rng(82);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(10));
        std::vector<double> scores(n);
        std::vector<int> pos(n);
        int n_pos = 0;
        for (int i = 0; i < n; ++i) {
            // coarse grid of scores makes ties frequent
            scores[i] = std::floor(rng.uniform() * 4.0) / 4.0;
            pos[i] = rng.bernoulli(0.4) ? 1 : 0;
            n_pos += pos[i];
        }
        if (n_pos == 0) pos[0] = 1;
        CHECK(average_precision(scores, pos) ==
              doctest::Approx(oracle::ap_rank_arithmetic(scores, pos)).epsilon(1e-12));
    }
}

TEST_CASE("mean_ap averages per-class AP and rejects empty classes") {
    Mat scores(3, 2);
    scores(0, 0) = 0.9;
    scores(1, 0) = 0.8;
    scores(2, 0) = 0.7;
    scores(0, 1) = 0.1;
    scores(1, 1) = 0.9;
    scores(2, 1) = 0.2;
    const std::vector<int> labels{0, 1, 0};
    // class 0: scores {0.9, 0.8, 0.7}, positives at items 0 and 2 -> 0.8333...
    // class 1: scores {0.1, 0.9, 0.2}, positive at item 1 -> 1.0
    CHECK(mean_ap(scores, labels) ==
          doctest::Approx((0.8333333333333333 + 1.0) / 2).epsilon(1e-12));

    const std::vector<int> bad{0, 0, 0}; // class 1 has no positives
    CHECK_THROWS_AS(mean_ap(scores, bad), std::invalid_argument);
}

TEST_CASE("bias experiment control: identical arms give identical tables") {
    Rng rng(83);
    std::vector<Image> frames;
    for (int i = 0; i < 12; ++i) {
        Image img(16, 16, 1);
        for (double& v : img.pixels) v = rng.uniform();
        frames.push_back(img);
    }
    BiasEvalSets eval;
    auto fill = [&](LabeledSet& s, int n) {
        for (int i = 0; i < n; ++i) {
            Image img(16, 16, 1);
            for (double& v : img.pixels) v = rng.uniform() * (1 + i % 2);
            for (double& v : img.pixels) v = std::min(v, 1.0);
            s.images.push_back(img);
            s.labels.push_back(i % 2);
        }
    };
    fill(eval.scene_train, 8);
    fill(eval.scene_test, 8);
    fill(eval.box_train, 8);
    fill(eval.box_test, 8);

    TrainConfig cfg;
    cfg.steps = 2;
    cfg.batch_size = 4;
    cfg.queue_capacity = 8;
    cfg.encoder.hidden = 8;
    cfg.encoder.embed_dim = 6;
    const BiasTable t =
        bias_experiment(frames, frames, eval, cfg, cfg, {50, 0.1}, {5, 6});
    CHECK(t.seeds == 2);
    CHECK(t.scene_trained.box_eval.size() == 2);
    CHECK(t.box_trained.scene_eval.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(t.scene_trained.box_eval[i].value == t.box_trained.box_eval[i].value);
        CHECK(t.scene_trained.scene_eval[i].value == t.box_trained.scene_eval[i].value);
    }

    // table schema: 2x2 probe results per seed
    const auto j = bias_table_to_json(t);
    CHECK(j["scene_trained"]["box_eval"].size() == 2);
    CHECK(j["scene_trained"]["scene_eval"].size() == 2);
    CHECK(j["box_trained"]["box_eval"].size() == 2);
    CHECK(j["box_trained"]["scene_eval"].size() == 2);

    TrainConfig other = cfg;
    other.steps = 3;
    CHECK_THROWS_AS(bias_experiment(frames, frames, eval, cfg, other, {50, 0.1}, {1}),
                    std::invalid_argument);
}

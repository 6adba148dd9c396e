#include "doctest.h"

#include "procwarm/dataset.hpp"
#include "procwarm/errors.hpp"
#include "procwarm/loss.hpp"
#include "procwarm/metrics.hpp"
#include "procwarm/model.hpp"
#include "procwarm/optimizer.hpp"
#include "procwarm/rng.hpp"
#include "procwarm/trainer.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

using namespace procwarm;
using namespace procwarm::model;
using namespace procwarm::train;

namespace {

ModelConfig tiny_warm_config(int k, int seq_len) {
    ModelConfig c;
    c.depth = 2;
    c.width = 16;
    c.heads = 2;
    c.mlp_ratio = 2;
    c.seq_len = seq_len;
    c.vocab_size_with_mask = 2 * k + 1;
    c.preset = "test";
    return c;
}

grammar::GrammarSpec tiny_dyck(int k, int seq_len) {
    grammar::GrammarSpec spec;
    spec.language = grammar::Language::Dyck;
    spec.k = k;
    spec.vocab_size = 2 * k;
    spec.seq_len = seq_len;
    return spec;
}

// Two trivially separable classes: the bright half of the image is on the
// left for class 0 and on the right for class 1.
data::ImageDataset half_field_dataset(std::size_t count, std::uint64_t seed) {
    data::ImageDataset ds;
    ds.name = "half-field";
    ds.num_classes = 2;
    ds.channels = 1;
    ds.height = 8;
    ds.width = 8;
    ds.labels.resize(count);
    ds.images.resize(count * ds.image_elems());
    CounterRng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % 2);
        ds.labels[i] = static_cast<std::uint16_t>(label);
        float* img = ds.images.data() + i * ds.image_elems();
        for (int y = 0; y < 8; ++y) {
            for (int x = 0; x < 8; ++x) {
                const bool bright = label == 0 ? x < 4 : x >= 4;
                const float noise = static_cast<float>(rng.next_double()) * 0.1f;
                img[y * 8 + x] = (bright ? 0.8f : 0.1f) + noise;
            }
        }
    }
    return ds;
}

ModelConfig half_field_config() {
    ModelConfig c;
    c.depth = 2;
    c.width = 16;
    c.heads = 2;
    c.mlp_ratio = 2;
    c.num_classes = 2;
    c.patch_size = 4;
    c.image_size = 8;
    c.image_channels = 1;
    c.preset = "test";
    return c;
}

}  // namespace

// ====================================================================
// Losses
// ====================================================================

TEST_CASE("uniform logits give log-vocabulary loss") {
    Tensor<float> logits({2, 4, 8});  // all zeros
    std::vector<std::vector<grammar::MaskTarget>> targets = {{{0, 3}}, {{2, 5}}};
    const auto r = masked_loss(logits, targets);
    CHECK(r.loss == doctest::Approx(std::log(8.0)).epsilon(1e-6));
    // both rows tie at symbol 0, so only the target-0 row could score
    CHECK(r.accuracy <= 0.5);

    // gradient rows at masked positions sum to zero, elsewhere vanish
    for (int e = 0; e < 2; ++e) {
        for (int p = 0; p < 4; ++p) {
            double sum = 0, mag = 0;
            for (int v = 0; v < 8; ++v) {
                const double g = r.dlogits.data[static_cast<std::size_t>((e * 4 + p) * 8 + v)];
                sum += g;
                mag += std::abs(g);
            }
            const bool masked = (e == 0 && p == 0) || (e == 1 && p == 2);
            CHECK(std::abs(sum) < 1e-6);
            if (masked) {
                CHECK(mag > 0.1);
            } else {
                CHECK(mag == 0.0);
            }
        }
    }
}

TEST_CASE("confident correct logits drive the loss to zero") {
    Tensor<float> logits({1, 2, 4});
    logits.data[2] = 50.0f;  // position 0 predicts symbol 2
    std::vector<std::vector<grammar::MaskTarget>> targets = {{{0, 2}}};
    const auto r = masked_loss(logits, targets);
    CHECK(r.loss < 1e-4f);
    CHECK(r.accuracy == 1.0);

    targets[0][0].symbol = 1;  // now the confident answer is wrong
    const auto w = masked_loss(logits, targets);
    CHECK(w.loss > 10.0f);
    CHECK(w.accuracy == 0.0);
}

TEST_CASE("masked loss rejects empty or out-of-range targets") {
    Tensor<float> logits({1, 2, 4});
    std::vector<std::vector<grammar::MaskTarget>> empty = {{}};
    CHECK_THROWS_AS(masked_loss(logits, empty), ValidationError);
    std::vector<std::vector<grammar::MaskTarget>> bad_pos = {{{2, 0}}};
    CHECK_THROWS_AS(masked_loss(logits, bad_pos), ValidationError);
    std::vector<std::vector<grammar::MaskTarget>> bad_sym = {{{0, 4}}};
    CHECK_THROWS_AS(masked_loss(logits, bad_sym), ValidationError);
    std::vector<std::vector<grammar::MaskTarget>> wrong_batch = {{{0, 1}}, {{0, 1}}};
    CHECK_THROWS_AS(masked_loss(logits, wrong_batch), ValidationError);
}

TEST_CASE("class loss matches a hand computation with label smoothing") {
    Tensor<double> logits({1, 2});
    logits.data = {1.0, -1.0};
    const std::vector<std::uint16_t> labels = {0};
    const double eps = 0.2;

    // softmax: p0 = e^1 / (e^1 + e^-1)
    const double p0 = std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0));
    const double p1 = 1.0 - p0;
    const double t0 = 1.0 - eps + eps / 2.0;
    const double t1 = eps / 2.0;
    const double want = -(t0 * std::log(p0) + t1 * std::log(p1));

    const auto r = class_loss(logits, labels, eps);
    CHECK(r.loss == doctest::Approx(want).epsilon(1e-12));
    CHECK(r.accuracy == 1.0);
    CHECK(r.dlogits.data[0] == doctest::Approx(p0 - t0).epsilon(1e-12));
    CHECK(r.dlogits.data[1] == doctest::Approx(p1 - t1).epsilon(1e-12));
}

TEST_CASE("class loss validates labels") {
    Tensor<float> logits({2, 3});
    CHECK_THROWS_AS(class_loss(logits, {0}), ValidationError);
    CHECK_THROWS_AS(class_loss(logits, {0, 3}), ValidationError);
}

// ====================================================================
// Schedule and optimizer
// ====================================================================

TEST_CASE("learning-rate schedule hits its landmarks") {
    const double peak = 2e-3;
    CHECK(lr_schedule(peak, 0, 1000, 15000) == 0.0);
    CHECK(lr_schedule(peak, 500, 1000, 15000) == doctest::Approx(peak / 2).epsilon(1e-12));
    CHECK(lr_schedule(peak, 1000, 1000, 15000) == doctest::Approx(peak).epsilon(1e-12));
    const auto mid = lr_schedule(peak, 8000, 1000, 15000);
    CHECK(mid == doctest::Approx(peak * 0.5).epsilon(1e-9));  // halfway through the cosine
    CHECK(lr_schedule(peak, 15000, 1000, 15000) == doctest::Approx(0.0).epsilon(1e-12));

    double prev = -1.0;
    for (std::uint64_t s = 0; s <= 1000; s += 50) {
        const auto lr = lr_schedule(peak, s, 1000, 15000);
        CHECK(lr > prev);
        prev = lr;
    }
    for (std::uint64_t s = 1000; s < 15000; s += 500) {
        CHECK(lr_schedule(peak, s, 1000, 15000) >= lr_schedule(peak, s + 500, 1000, 15000));
    }
}

TEST_CASE("one optimizer step matches the update equations exactly") {
    ParamStore<double> params;
    params.config = tiny_warm_config(2, 8);
    auto& w = params.add("w", {1, 2});  // rank 2: decayed
    w.data = {0.5, -0.25};
    auto& b = params.add("b", {2});  // rank 1: never decayed
    b.data = {0.1, 0.2};

    GradMap<double> grads;
    grads["w"] = Tensor<double>({1, 2});
    grads["w"].data = {0.3, -0.7};
    grads["b"] = Tensor<double>({2});
    grads["b"].data = {0.11, -0.02};

    AdamWConfig cfg;
    cfg.lr = 1e-2;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.999;
    cfg.eps = 1e-8;
    cfg.weight_decay = 0.1;

    AdamWState<double> state;
    adamw_step(params, grads, state, cfg);

    auto expect = [&](double p, double g, bool decay) {
        const double m = 0.1 * g;           // (1 - beta1) g
        const double v = 0.001 * g * g;     // (1 - beta2) g^2
        const double mhat = m / (1.0 - 0.9);
        const double vhat = v / (1.0 - 0.999);
        return p - cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + (decay ? cfg.weight_decay * p : 0.0));
    };
    CHECK(params.at("w").data[0] == doctest::Approx(expect(0.5, 0.3, true)).epsilon(1e-12));
    CHECK(params.at("w").data[1] == doctest::Approx(expect(-0.25, -0.7, true)).epsilon(1e-12));
    CHECK(params.at("b").data[0] == doctest::Approx(expect(0.1, 0.11, false)).epsilon(1e-12));
    CHECK(params.at("b").data[1] == doctest::Approx(expect(0.2, -0.02, false)).epsilon(1e-12));

    // second step with fresh gradients, tracked against the same recurrence
    GradMap<double> g2;
    g2["w"] = Tensor<double>({1, 2});
    g2["w"].data = {-0.1, 0.2};
    const double p0 = params.at("w").data[0];
    adamw_step(params, g2, state, cfg);
    {
        const double m2 = 0.9 * (0.1 * 0.3) + 0.1 * (-0.1);
        const double v2 = 0.999 * (0.001 * 0.09) + 0.001 * 0.01;
        const double mhat = m2 / (1.0 - 0.81);
        const double vhat = v2 / (1.0 - 0.999 * 0.999);
        const double want =
            p0 - cfg.lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p0);
        CHECK(params.at("w").data[0] == doctest::Approx(want).epsilon(1e-12));
    }
    // b got no gradient this time: untouched, and its state did not advance
    CHECK(state.m.at("b").data[0] == doctest::Approx(0.1 * 0.11).epsilon(1e-12));
}

TEST_CASE("the optimizer refuses frozen tensors and shape mismatches") {
    ParamStore<float> params;
    params.config = tiny_warm_config(2, 8);
    params.add("w", {2, 2}, true);  // frozen
    params.add("u", {2, 2});

    AdamWState<float> state;
    AdamWConfig cfg;

    GradMap<float> frozen_grad;
    frozen_grad["w"] = Tensor<float>({2, 2});
    CHECK_THROWS_AS(adamw_step(params, frozen_grad, state, cfg), ValidationError);

    GradMap<float> bad_shape;
    bad_shape["u"] = Tensor<float>({2, 3});
    CHECK_THROWS_AS(adamw_step(params, bad_shape, state, cfg), ValidationError);

    GradMap<float> unknown;
    unknown["nope"] = Tensor<float>({2, 2});
    CHECK_THROWS_AS(adamw_step(params, unknown, state, cfg), ValidationError);
}

// ====================================================================
// Metrics
// ====================================================================

TEST_CASE("metrics round-trip through their text format") {
    TempDir tmp;
    RunMetrics m;
    m.run_id = "warmup-seed7";
    m.config_hash = "0123456789abcdef";
    m.meta["objective"] = "masked-token";
    m.meta["ablation"] = "none";
    m.records.push_back({1, "train", 2e-6, 4.83, 0.01, 12.5});
    m.records.push_back({2, "train", 4e-6, 4.70, 0.02, 11.25});
    m.records.push_back({2, "eval", 4e-6, 4.69, 0.03, 80.0});

    write_metrics(m, tmp.sub("metrics.txt"));
    const auto back = read_metrics(tmp.sub("metrics.txt"));
    CHECK(back == m);
}

TEST_CASE("metrics validation catches malformed runs") {
    RunMetrics m;
    m.records.push_back({2, "train", 0, 1.0, 0, 0});
    m.records.push_back({2, "train", 0, 1.0, 0, 0});
    CHECK_THROWS_AS(m.validate(), ValidationError);

    RunMetrics nan_loss;
    nan_loss.records.push_back({1, "train", 0, std::nan(""), 0, 0});
    CHECK_THROWS_AS(nan_loss.validate(), ValidationError);

    RunMetrics bad_split;
    bad_split.records.push_back({1, "test", 0, 1.0, 0, 0});
    CHECK_THROWS_AS(bad_split.validate(), ValidationError);

    RunMetrics ok;
    ok.records.push_back({1, "train", 0, 1.0, 0.5, 0});
    ok.records.push_back({1, "eval", 0, 1.0, 0.25, 0});
    ok.validate();
    CHECK(ok.final_accuracy("eval") == 0.25);
    CHECK_THROWS_AS(RunMetrics{}.final_accuracy("eval"), ValidationError);
}

// ====================================================================
// Warm-up training
// ====================================================================

TEST_CASE("frozen tables survive warm-up training bit-exactly") {
    const auto config = tiny_warm_config(2, 8);
    const auto init = init_model(config, 5);
    const auto spec = tiny_dyck(2, 8);

    auto cfg = warmup_defaults();
    cfg.batch_size = 8;
    cfg.total_steps = 30;
    cfg.warmup_steps = 10;
    cfg.eval_every = 10;
    cfg.eval_examples = 16;
    cfg.seed = 3;

    const auto res = train_warmup(init, spec, 0.5, corpus::Ablation::None, cfg);
    CHECK(res.checkpoint.at("token_embedding") == init.at("token_embedding"));
    CHECK(res.checkpoint.at("pos_embedding") == init.at("pos_embedding"));
    CHECK_FALSE(res.checkpoint.at("mask_head.w") == init.at("mask_head.w"));
    CHECK(res.checkpoint.step == 30);
    CHECK(res.checkpoint.stage == Stage::Warmup);

    res.metrics.validate();
    int train_records = 0, eval_records = 0;
    for (const auto& r : res.metrics.records) {
        if (r.split == "train") ++train_records;
        if (r.split == "eval") ++eval_records;
    }
    CHECK(train_records == 30);
    CHECK(eval_records == 3);  // steps 10, 20, 30
    CHECK(res.metrics.run_id == "warmup-seed3");
    CHECK(!res.metrics.config_hash.empty());
}

TEST_CASE("zero training steps return the input checkpoint") {
    const auto config = tiny_warm_config(2, 8);
    const auto init = init_model(config, 6);
    auto cfg = warmup_defaults();
    cfg.total_steps = 0;
    cfg.warmup_steps = 0;
    const auto res = train_warmup(init, tiny_dyck(2, 8), 0.5, corpus::Ablation::None, cfg);
    CHECK(res.checkpoint.tensors == init.tensors);
}

TEST_CASE("warm-up loss trends down and beats chance accuracy") {
    const auto config = tiny_warm_config(2, 16);
    const auto init = init_model(config, 7);
    auto cfg = warmup_defaults();
    cfg.batch_size = 16;
    cfg.total_steps = 150;
    cfg.warmup_steps = 30;
    cfg.peak_lr = 1e-3;
    cfg.eval_every = 150;
    cfg.eval_examples = 64;
    cfg.seed = 1;

    const auto res = train_warmup(init, tiny_dyck(2, 16), 0.5, corpus::Ablation::None, cfg);
    double first = 0, last = 0;
    int n = 0;
    for (const auto& r : res.metrics.records) {
        if (r.split != "train") continue;
        if (r.step <= 20) {
            first += r.loss;
            ++n;
        }
        if (r.step > 130) last += r.loss;
    }
    CHECK(n == 20);
    CHECK(last / 20 < first / 20);
    // four symbols, two of them closers: argmax over the full vocabulary
    CHECK(res.metrics.final_accuracy("eval") > 0.3);
}

TEST_CASE("early stopping honors the target accuracy") {
    // single bracket pair: every masked position is the same closer symbol
    const auto config = tiny_warm_config(1, 8);
    const auto init = init_model(config, 8);
    auto cfg = warmup_defaults();
    cfg.batch_size = 8;
    cfg.total_steps = 400;
    cfg.warmup_steps = 20;
    cfg.eval_every = 10;
    cfg.eval_examples = 32;
    cfg.target_accuracy = 0.95;
    cfg.seed = 2;

    const auto res = train_warmup(init, tiny_dyck(1, 8), 0.5, corpus::Ablation::None, cfg);
    CHECK(res.checkpoint.step < 400);
    CHECK(res.metrics.final_accuracy("eval") >= 0.95);
}

TEST_CASE("the checkpoint sink fires at its cadence") {
    const auto config = tiny_warm_config(2, 8);
    const auto init = init_model(config, 9);
    auto cfg = warmup_defaults();
    cfg.batch_size = 4;
    cfg.total_steps = 25;
    cfg.warmup_steps = 5;
    cfg.eval_every = 25;
    cfg.eval_examples = 8;
    cfg.checkpoint_every = 10;

    std::vector<std::uint64_t> seen;
    const auto res = train_warmup(init, tiny_dyck(2, 8), 0.5, corpus::Ablation::None, cfg,
                                  [&](const Checkpoint& c, std::uint64_t step) {
                                      CHECK(c.step == step);
                                      seen.push_back(step);
                                  });
    CHECK(seen == std::vector<std::uint64_t>{10, 20});
}

TEST_CASE("warm-up training is reproducible") {
    const auto config = tiny_warm_config(2, 8);
    const auto init = init_model(config, 10);
    auto cfg = warmup_defaults();
    cfg.batch_size = 8;
    cfg.total_steps = 20;
    cfg.warmup_steps = 5;
    cfg.eval_every = 10;
    cfg.eval_examples = 16;
    cfg.reference_mode = true;

    const auto a = train_warmup(init, tiny_dyck(2, 8), 0.5, corpus::Ablation::None, cfg);
    const auto b = train_warmup(init, tiny_dyck(2, 8), 0.5, corpus::Ablation::None, cfg);
    CHECK(a.checkpoint == b.checkpoint);
    CHECK(a.metrics == b.metrics);
    for (const auto& r : a.metrics.records) CHECK(r.wall_ms == 0.0);
}

TEST_CASE("warm-up rejects mismatched checkpoints") {
    const auto spec = tiny_dyck(2, 8);
    auto cfg = warmup_defaults();
    cfg.total_steps = 1;
    cfg.eval_every = 1;
    cfg.eval_examples = 1;
    cfg.batch_size = 1;

    // vision-stage checkpoint
    ModelConfig vc;
    vc.depth = 1;
    vc.width = 16;
    vc.heads = 2;
    vc.mlp_ratio = 2;
    vc.num_classes = 2;
    vc.patch_size = 4;
    vc.image_size = 8;
    vc.image_channels = 1;
    const auto vis = init_vision_model(vc, 1);
    CHECK_THROWS_AS(train_warmup(vis, spec, 0.5, corpus::Ablation::None, cfg), ValidationError);

    // sequence length disagreement
    const auto wrong_len = init_model(tiny_warm_config(2, 16), 1);
    CHECK_THROWS_AS(train_warmup(wrong_len, spec, 0.5, corpus::Ablation::None, cfg),
                    ValidationError);

    // vocabulary disagreement
    const auto wrong_vocab = init_model(tiny_warm_config(3, 8), 1);
    CHECK_THROWS_AS(train_warmup(wrong_vocab, spec, 0.5, corpus::Ablation::None, cfg),
                    ValidationError);

    // thawed embedding table
    auto thawed = init_model(tiny_warm_config(2, 8), 1);
    thawed.frozen.erase("token_embedding");
    CHECK_THROWS_AS(train_warmup(thawed, spec, 0.5, corpus::Ablation::None, cfg), ValidationError);
}

// ====================================================================
// Vision training
// ====================================================================

TEST_CASE("a separable two-class task trains to near-perfect accuracy") {
    const auto config = half_field_config();
    const auto init = init_vision_model(config, 11);
    const auto train_set = half_field_dataset(64, 100);
    const auto test_set = half_field_dataset(32, 200);

    auto cfg = vision_defaults();
    cfg.batch_size = 16;
    cfg.epochs = 50;  // 4 steps per epoch
    cfg.warmup_epochs = 5;
    cfg.augment = false;
    cfg.label_smoothing = 0.0;
    cfg.seed = 4;

    const auto res = train_vision(init, train_set, test_set, cfg);
    CHECK(res.metrics.final_accuracy("eval") >= 0.99);
    CHECK(res.checkpoint.stage == Stage::Vision);
    CHECK(res.checkpoint.step == 200);
    res.metrics.validate();

    int evals = 0;
    for (const auto& r : res.metrics.records) {
        if (r.split == "eval") ++evals;
    }
    CHECK(evals == 50);  // one per epoch
}

TEST_CASE("vision training rejects bad inputs") {
    const auto config = half_field_config();
    const auto init = init_vision_model(config, 12);
    const auto train_set = half_field_dataset(8, 100);
    const auto test_set = half_field_dataset(4, 200);
    auto cfg = vision_defaults();
    cfg.batch_size = 4;
    cfg.epochs = 1;
    cfg.warmup_epochs = 0;

    // warm-up checkpoint straight into vision training
    const auto warm = init_model(tiny_warm_config(2, 8), 1);
    CHECK_THROWS_AS(train_vision(warm, train_set, test_set, cfg), ValidationError);
    try {
        train_vision(warm, train_set, test_set, cfg);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("surgery") != std::string::npos);
    }

    // frozen tensor left behind
    auto frozen = init;
    frozen.frozen.insert("class_token");
    CHECK_THROWS_AS(train_vision(frozen, train_set, test_set, cfg), ValidationError);

    // dataset shape mismatch
    auto wrong = half_field_dataset(8, 100);
    wrong.width = 16;
    wrong.images.resize(8 * wrong.image_elems());
    CHECK_THROWS_AS(train_vision(init, wrong, test_set, cfg), ValidationError);

    // empty training set
    data::ImageDataset empty;
    empty.num_classes = 2;
    empty.channels = 1;
    empty.height = 8;
    empty.width = 8;
    CHECK_THROWS_AS(train_vision(init, empty, test_set, cfg), ValidationError);
}

TEST_CASE("vision training is reproducible in reference mode") {
    const auto config = half_field_config();
    const auto init = init_vision_model(config, 13);
    const auto train_set = half_field_dataset(16, 300);
    const auto test_set = half_field_dataset(8, 400);

    auto cfg = vision_defaults();
    cfg.batch_size = 8;
    cfg.epochs = 3;
    cfg.warmup_epochs = 1;
    cfg.reference_mode = true;
    cfg.seed = 5;

    const auto a = train_vision(init, train_set, test_set, cfg);
    const auto b = train_vision(init, train_set, test_set, cfg);
    CHECK(a.checkpoint == b.checkpoint);
    CHECK(a.metrics == b.metrics);
    for (const auto& r : a.metrics.records) CHECK(r.wall_ms == 0.0);
}

// ====================================================================
// Synthetic dataset
// ====================================================================

TEST_CASE("the built-in shapes dataset is balanced and reproducible") {
    const auto a = data::make_synthetic_shapes(50, 77);
    const auto b = data::make_synthetic_shapes(50, 77);
    CHECK(a == b);
    a.validate();
    CHECK(a.count() == 50);
    CHECK(a.num_classes == 10);
    CHECK(a.channels == 3);
    CHECK(a.height == 32);
    for (std::size_t i = 0; i < a.count(); ++i) {
        CHECK(a.labels[i] == i % 10);
    }
    for (float v : a.images) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    const auto c = data::make_synthetic_shapes(50, 78);
    CHECK_FALSE(a == c);
}

TEST_CASE("datasets round-trip through their directory format") {
    TempDir tmp;
    const auto ds = data::make_synthetic_shapes(12, 5);
    data::write_dataset(ds, tmp.sub("ds"));
    const auto back = data::read_dataset(tmp.sub("ds"));
    CHECK(back == ds);
}

// procwarm: generate grammar corpora, warm up a compact transformer on
// them, perform checkpoint surgery, fine-tune on small image tasks and
// report the results. Every stage records its config hash and skips work
// when its outputs are already up to date.

#include "procwarm/checkpoint_io.hpp"
#include "procwarm/corpus.hpp"
#include "procwarm/dataset.hpp"
#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"
#include "procwarm/hash.hpp"
#include "procwarm/model.hpp"
#include "procwarm/pipeline.hpp"
#include "procwarm/report.hpp"
#include "procwarm/rng.hpp"
#include "procwarm/surgery.hpp"
#include "procwarm/trainer.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace procwarm;

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string out_dir;
    bool reference_mode = false;

    fs::path out() const { return fs::path(out_dir); }
};

struct GrammarOpts {
    std::string language = "dyck";
    int k = 64;
    int vocab_size = 0;  // 0 = derived (2k for the Dyck family, 128 for ww)
    double p_open = 0.6;
    int seq_len = 196;
    double mask_ratio = 0.5;
    std::string ablation = "none";

    grammar::GrammarSpec spec() const {
        grammar::GrammarSpec s;
        s.language = grammar::language_from_string(language);
        s.k = k;
        s.p_open = p_open;
        s.seq_len = seq_len;
        s.vocab_size = vocab_size;
        if (s.vocab_size == 0) s.vocab_size = s.dyck_family() ? 2 * k : 128;
        s.validate();
        return s;
    }

    corpus::Ablation ablation_enum() const { return corpus::ablation_from_string(ablation); }

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--language", language, "Formal language: ww|dyck|dyck-shuffle")
            ->capture_default_str();
        cmd->add_option("--k", k, "Bracket-pair count (Dyck family)")->capture_default_str();
        cmd->add_option("--vocab-size", vocab_size,
                        "Symbol count excluding the mask id (0 = derive from language)");
        cmd->add_option("--p-open", p_open, "Opening probability")->capture_default_str();
        cmd->add_option("--seq-len", seq_len, "Sequence length N")->capture_default_str();
        cmd->add_option("--mask-ratio", mask_ratio, "Fraction of maskable tokens to mask")
            ->capture_default_str();
        cmd->add_option("--ablation", ablation, "Data ablation: none|sequence-shuffled")
            ->capture_default_str();
    }
};

struct ModelOpts {
    std::string preset = "desk";
    int depth = 0, width = 0, heads = 0, mlp_ratio = 0;  // 0 = keep preset value
    int patch_size = 0, image_size = 0, image_channels = 0, num_classes = 0;

    model::ModelConfig config() const {
        model::ModelConfig c = model::config_preset(preset);
        if (depth) c.depth = depth;
        if (width) c.width = width;
        if (heads) c.heads = heads;
        if (mlp_ratio) c.mlp_ratio = mlp_ratio;
        if (patch_size) c.patch_size = patch_size;
        if (image_size) c.image_size = image_size;
        if (image_channels) c.image_channels = image_channels;
        if (num_classes) c.num_classes = num_classes;
        return c;
    }

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Model preset: desk|vit-t")->capture_default_str();
        cmd->add_option("--depth", depth, "Override block count");
        cmd->add_option("--width", width, "Override embedding width");
        cmd->add_option("--heads", heads, "Override head count");
        cmd->add_option("--mlp-ratio", mlp_ratio, "Override MLP expansion factor");
        cmd->add_option("--patch-size", patch_size, "Override patch size");
        cmd->add_option("--image-size", image_size, "Override image side length");
        cmd->add_option("--image-channels", image_channels, "Override image channel count");
        cmd->add_option("--num-classes", num_classes, "Override class count");
    }
};

KvMap model_config_hash_kv(const model::ModelConfig& c) { return config_to_kv(c, "model."); }

void write_run_metrics(train::RunMetrics metrics, const std::string& run_id,
                       const fs::path& path) {
    metrics.run_id = run_id;
    write_metrics(metrics, path);
}

// ---- generate ------------------------------------------------------------

struct GenerateOpts {
    GrammarOpts grammar;
    std::uint64_t count = 1000;
    std::string name = "corpus";
};

int run_generate(const GlobalOpts& g, const GenerateOpts& o) {
    const grammar::GrammarSpec spec = o.grammar.spec();
    const corpus::Ablation ablation = o.grammar.ablation_enum();
    const fs::path dir = g.out() / o.name;
    const std::string hash =
        corpus::corpus_config_hash(spec, o.count, o.grammar.mask_ratio, g.seed, ablation);

    const fs::path manifest = dir / "manifest.txt";
    std::error_code ec;
    if (fs::exists(manifest, ec)) {
        try {
            const KvMap kv = kv_parse(read_file(manifest));
            if (kv_get_or(kv, "config_hash", "") == hash) {
                std::cout << "generate: up to date (" << hash << ") at " << dir.string() << "\n";
                return 0;
            }
        } catch (const Error&) {
            // fall through and regenerate
        }
    }

    const corpus::Corpus c =
        corpus::build_corpus(spec, o.count, o.grammar.mask_ratio, g.seed, ablation);
    write_corpus(c, dir);
    std::cout << "generate: wrote " << o.count << " examples (" << hash << ") to "
              << dir.string() << "\n";
    return 0;
}

// ---- stats ----------------------------------------------------------------

struct StatsOpts {
    std::string corpus_dir;
    std::string kv_out;  // empty = <corpus>/stats.kv
};

int run_stats(const StatsOpts& o) {
    const corpus::Corpus c = corpus::read_corpus(o.corpus_dir);
    const corpus::CorpusStats s = corpus::corpus_stats(c);
    std::cout << corpus::stats_report(c, s);
    const fs::path kv_path =
        o.kv_out.empty() ? fs::path(o.corpus_dir) / "stats.kv" : fs::path(o.kv_out);
    write_file_atomic(kv_path, kv_serialize(corpus::stats_kv(c, s)));
    std::cout << "stats: wrote " << kv_path.string() << "\n";
    return 0;
}

// ---- warmup ----------------------------------------------------------------

struct WarmupOpts {
    GrammarOpts grammar;
    ModelOpts model;
    std::string name = "warmup";
    int batch_size = 256;
    int steps = 15000;
    int warmup_steps = 1000;
    int schedule_horizon = 0;
    double lr = 2e-3;
    double weight_decay = 0.05;
    double beta1 = 0.9, beta2 = 0.999;
    int eval_every = 250;
    int eval_examples = 512;
    double target_accuracy = 0.0;
    int checkpoint_every = 0;
    std::uint64_t budget_examples = 0;  // when set, steps = 1% of this / batch
};

int run_warmup(const GlobalOpts& g, const WarmupOpts& o) {
    const grammar::GrammarSpec spec = o.grammar.spec();
    model::ModelConfig mc = o.model.config();
    mc.seq_len = spec.seq_len;
    mc.vocab_size_with_mask = spec.vocab_size + 1;
    mc.validate();

    train::TrainConfig cfg = train::warmup_defaults();
    cfg.batch_size = o.batch_size;
    cfg.total_steps = o.steps;
    if (o.budget_examples > 0) {
        cfg.total_steps = static_cast<int>(
            std::max<std::uint64_t>(1, o.budget_examples / 100 / o.batch_size));
    }
    cfg.warmup_steps = o.warmup_steps;
    cfg.schedule_horizon = o.schedule_horizon;
    cfg.peak_lr = o.lr;
    cfg.weight_decay = o.weight_decay;
    cfg.beta1 = o.beta1;
    cfg.beta2 = o.beta2;
    cfg.eval_every = o.eval_every;
    cfg.eval_examples = o.eval_examples;
    cfg.target_accuracy = o.target_accuracy;
    cfg.checkpoint_every = o.checkpoint_every;
    cfg.seed = g.seed;
    cfg.reference_mode = g.reference_mode;
    cfg.validate();

    KvMap hash_kv = train::train_config_kv(cfg);
    for (const auto& [k, v] : model_config_hash_kv(mc)) hash_kv[k] = v;
    hash_kv["grammar.language"] = grammar::to_string(spec.language);
    hash_kv["grammar.k"] = std::to_string(spec.k);
    hash_kv["grammar.vocab_size"] = std::to_string(spec.vocab_size);
    hash_kv["grammar.p_open"] = format_double(spec.p_open);
    hash_kv["grammar.seq_len"] = std::to_string(spec.seq_len);
    hash_kv["mask_ratio"] = format_double(o.grammar.mask_ratio);
    hash_kv["ablation"] = o.grammar.ablation;
    const std::string hash = pipeline::config_hash_of(hash_kv);

    const fs::path dir = g.out() / o.name;
    const fs::path ckpt_path = dir / "checkpoint.ckpt";
    const fs::path metrics_path = dir / "metrics.txt";
    const fs::path prov_path = dir / "provenance.txt";
    if (pipeline::stage_up_to_date(prov_path, hash, {ckpt_path, metrics_path})) {
        std::cout << "warmup: up to date (" << hash << ") at " << dir.string() << "\n";
        return 0;
    }
    fs::create_directories(dir);

    const model::Checkpoint init = model::init_model(mc, g.seed);
    const train::CheckpointSink sink = [&](const model::Checkpoint& c, std::uint64_t step) {
        model::write_checkpoint(c, dir / ("checkpoint_step" + std::to_string(step) + ".ckpt"));
    };
    train::TrainResult res =
        train::train_warmup(init, spec, o.grammar.mask_ratio, o.grammar.ablation_enum(), cfg, sink);
    res.metrics.config_hash = hash;

    model::write_checkpoint(res.checkpoint, ckpt_path);
    write_run_metrics(res.metrics, o.name, metrics_path);
    KvMap extra;
    extra["checkpoint"] = ckpt_path.filename().string();
    extra["checkpoint_hash"] = hex64(hash_file(ckpt_path.string()));
    extra["seed"] = std::to_string(g.seed);
    pipeline::write_provenance(prov_path, "warmup", hash, extra);

    std::cout << "warmup: " << res.checkpoint.step << " steps";
    if (cfg.eval_every > 0) {
        std::cout << ", final eval accuracy " << res.metrics.final_accuracy("eval");
    }
    std::cout << ", wrote " << ckpt_path.string() << "\n";
    return 0;
}

// ---- surgery ----------------------------------------------------------------

struct SurgeryOpts {
    std::string input;
    std::string plan_path;
    std::string name = "surgery";
    std::string expect_input_hash;
};

int run_surgery(const GlobalOpts& g, const SurgeryOpts& o) {
    const std::string input_hash = hex64(hash_file(o.input));
    if (!o.expect_input_hash.empty() && o.expect_input_hash != input_hash) {
        throw ValidationError("config-hash mismatch between chained stages: input checkpoint "
                              "hashes to " + input_hash + ", expected " + o.expect_input_hash);
    }
    const surgery::SurgeryPlan plan = surgery::parse_plan(read_file(o.plan_path));
    if (plan.steps.empty()) throw ValidationError("surgery plan has no steps");
    const std::string plan_text = surgery::plan_to_text(plan);

    KvMap hash_kv;
    hash_kv["input_hash"] = input_hash;
    hash_kv["plan"] = hex64(fnv1a64(plan_text));
    for (const surgery::PlanStep& step : plan.steps) {
        if (step.kind == surgery::PlanStep::Kind::Transfer) {
            hash_kv["donor." + step.donor_path] = hex64(hash_file(step.donor_path));
        }
    }
    const std::string hash = pipeline::config_hash_of(hash_kv);

    const fs::path dir = g.out() / o.name;
    const fs::path out_path = dir / "checkpoint.ckpt";
    const fs::path prov_path = dir / "provenance.txt";
    if (pipeline::stage_up_to_date(prov_path, hash, {out_path})) {
        std::cout << "surgery: up to date (" << hash << ") at " << dir.string() << "\n";
        return 0;
    }
    fs::create_directories(dir);

    const model::Checkpoint input = model::read_checkpoint(o.input);
    const model::Checkpoint result = surgery::apply_plan(
        input, plan, [](const std::string& path) { return model::read_checkpoint(path); });
    model::write_checkpoint(result, out_path);
    write_file_atomic(dir / "plan.txt", plan_text);

    KvMap extra;
    extra["input"] = o.input;
    extra["input_hash"] = input_hash;
    extra["plan_hash"] = hash_kv["plan"];
    extra["output_hash"] = hex64(hash_file(out_path.string()));
    pipeline::write_provenance(prov_path, "surgery", hash, extra);

    std::cout << "surgery: applied " << plan.steps.size() << " step(s), wrote "
              << out_path.string() << "\n";
    return 0;
}

// ---- finetune ----------------------------------------------------------------

struct FinetuneOpts {
    ModelOpts model;
    std::string checkpoint;  // empty with --random-init
    bool random_init = false;
    std::string dataset_dir;  // empty = built-in synthetic shapes
    std::uint64_t dataset_seed = 1234;
    std::uint64_t train_count = 2048;
    std::uint64_t test_count = 512;
    std::string name = "finetune";
    std::string expect_input_hash;
    int batch_size = 512;
    int epochs = 300;
    int warmup_epochs = 50;
    double lr = 2e-3;
    double weight_decay = 0.05;
    double label_smoothing = 0.0;
    bool no_augment = false;
    int checkpoint_every = 0;
};

int run_finetune(const GlobalOpts& g, const FinetuneOpts& o) {
    std::string input_hash = "none";
    model::Checkpoint init;
    if (o.random_init) {
        if (!o.checkpoint.empty()) {
            throw ValidationError("--checkpoint and --random-init are mutually exclusive");
        }
        init = model::init_vision_model(o.model.config(), g.seed);
    } else {
        if (o.checkpoint.empty()) {
            throw ValidationError("finetune needs --checkpoint or --random-init");
        }
        const model::CheckpointMeta meta = model::read_checkpoint_meta(o.checkpoint);
        if (meta.stage != model::Stage::Vision) {
            throw ValidationError(
                "checkpoint " + o.checkpoint + " is warm-up stage; run surgery "
                "(reset-embeddings-and-head + retag-stage vision) before finetune");
        }
        input_hash = hex64(hash_file(o.checkpoint));
        if (!o.expect_input_hash.empty() && o.expect_input_hash != input_hash) {
            throw ValidationError("config-hash mismatch between chained stages: input checkpoint "
                                  "hashes to " + input_hash + ", expected " + o.expect_input_hash);
        }
        init = model::read_checkpoint(o.checkpoint);
    }

    data::ImageDataset train_set, test_set;
    std::string dataset_id;
    if (o.dataset_dir.empty()) {
        train_set = data::make_synthetic_shapes(
            o.train_count, derive_key(o.dataset_seed, Stream::Dataset, "train"));
        test_set = data::make_synthetic_shapes(
            o.test_count, derive_key(o.dataset_seed, Stream::Dataset, "test"));
        dataset_id = "synthetic-shapes seed=" + std::to_string(o.dataset_seed) + " train=" +
                     std::to_string(o.train_count) + " test=" + std::to_string(o.test_count);
    } else {
        train_set = data::read_dataset(fs::path(o.dataset_dir) / "train");
        test_set = data::read_dataset(fs::path(o.dataset_dir) / "test");
        dataset_id = o.dataset_dir + " train_hash=" +
                     hex64(hash_file((fs::path(o.dataset_dir) / "train" / "images.bin").string()));
    }

    train::TrainConfig cfg = train::vision_defaults();
    cfg.batch_size = o.batch_size;
    cfg.epochs = o.epochs;
    cfg.warmup_epochs = o.warmup_epochs;
    cfg.peak_lr = o.lr;
    cfg.weight_decay = o.weight_decay;
    cfg.label_smoothing = o.label_smoothing;
    cfg.augment = !o.no_augment;
    cfg.checkpoint_every = o.checkpoint_every;
    cfg.seed = g.seed;
    cfg.reference_mode = g.reference_mode;
    cfg.validate();

    KvMap hash_kv = train::train_config_kv(cfg);
    for (const auto& [k, v] : model_config_hash_kv(init.config)) hash_kv[k] = v;
    hash_kv["dataset"] = dataset_id;
    hash_kv["input_hash"] = input_hash;
    const std::string hash = pipeline::config_hash_of(hash_kv);

    const fs::path dir = g.out() / o.name;
    const fs::path ckpt_path = dir / "checkpoint.ckpt";
    const fs::path metrics_path = dir / "metrics.txt";
    const fs::path prov_path = dir / "provenance.txt";
    if (pipeline::stage_up_to_date(prov_path, hash, {ckpt_path, metrics_path})) {
        std::cout << "finetune: up to date (" << hash << ") at " << dir.string() << "\n";
        return 0;
    }
    fs::create_directories(dir);

    const train::CheckpointSink sink = [&](const model::Checkpoint& c, std::uint64_t step) {
        model::write_checkpoint(c, dir / ("checkpoint_step" + std::to_string(step) + ".ckpt"));
    };
    train::TrainResult res = train::train_vision(init, train_set, test_set, cfg, sink);
    res.metrics.config_hash = hash;
    res.metrics.meta["dataset"] = dataset_id;
    res.metrics.meta["init"] = o.random_init ? "random" : "checkpoint " + input_hash;

    model::write_checkpoint(res.checkpoint, ckpt_path);
    write_run_metrics(res.metrics, o.name, metrics_path);
    KvMap extra;
    extra["input_hash"] = input_hash;
    extra["dataset"] = dataset_id;
    extra["seed"] = std::to_string(g.seed);
    pipeline::write_provenance(prov_path, "finetune", hash, extra);

    std::cout << "finetune: " << res.checkpoint.step << " steps, final test accuracy "
              << res.metrics.final_accuracy("eval") << ", wrote " << ckpt_path.string() << "\n";
    return 0;
}

// ---- report ----------------------------------------------------------------

struct ReportOpts {
    std::vector<std::string> runs;  // name=path/to/metrics.txt
    std::string baseline;
    std::string name = "report";
};

int run_report(const GlobalOpts& g, const ReportOpts& o) {
    if (o.runs.empty()) throw ValidationError("report needs at least one --run name=metrics-path");
    std::vector<report::NamedRun> runs;
    for (const std::string& spec : o.runs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("bad --run value (want name=path): " + spec);
        }
        report::NamedRun r;
        r.name = spec.substr(0, eq);
        r.metrics = train::read_metrics(spec.substr(eq + 1));
        runs.push_back(std::move(r));
    }
    const std::string baseline = o.baseline.empty() ? runs.front().name : o.baseline;

    const std::string table = report::comparison_table(runs, baseline);
    const std::string svg = report::accuracy_curves_svg(runs);
    const fs::path dir = g.out() / o.name;
    fs::create_directories(dir);
    write_file_atomic(dir / "table.txt", table);
    write_file_atomic(dir / "curves.svg", svg);
    std::cout << table;
    std::cout << "report: wrote " << (dir / "table.txt").string() << " and "
              << (dir / "curves.svg").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"procedural warm-up toolkit for compact vision transformers"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file");

    GlobalOpts g;
    const char* env_out = std::getenv("PROCWARM_OUT_DIR");
    g.out_dir = env_out ? env_out : "runs";
    app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir,
                   "Output directory (default $PROCWARM_OUT_DIR or ./runs)")
        ->capture_default_str();
    app.add_flag("--reference-mode", g.reference_mode,
                 "Single-threaded deterministic mode; wall clock recorded as 0");

    GenerateOpts gen;
    CLI::App* cgen = app.add_subcommand("generate", "Generate and persist a corpus");
    cgen->fallthrough();
    gen.grammar.add_flags(cgen);
    cgen->add_option("--count", gen.count, "Example count")->capture_default_str();
    cgen->add_option("--name", gen.name, "Output subdirectory")->capture_default_str();

    StatsOpts st;
    CLI::App* cstats = app.add_subcommand("stats", "Summarize a corpus");
    cstats->fallthrough();
    cstats->add_option("--corpus", st.corpus_dir, "Corpus directory")->required();
    cstats->add_option("--kv-out", st.kv_out, "Machine-readable output path");

    WarmupOpts wu;
    CLI::App* cwarm = app.add_subcommand("warmup", "Masked-token warm-up training");
    cwarm->fallthrough();
    wu.grammar.add_flags(cwarm);
    wu.model.add_flags(cwarm);
    cwarm->add_option("--name", wu.name, "Run name (output subdirectory)")->capture_default_str();
    cwarm->add_option("--batch-size", wu.batch_size)->capture_default_str();
    cwarm->add_option("--steps", wu.steps, "Total optimization steps")->capture_default_str();
    cwarm->add_option("--warmup-steps", wu.warmup_steps, "Linear ramp steps")
        ->capture_default_str();
    cwarm->add_option("--schedule-horizon", wu.schedule_horizon,
                      "Cosine decay horizon in steps (0 follows --steps)");
    cwarm->add_option("--lr", wu.lr, "Peak learning rate")->capture_default_str();
    cwarm->add_option("--weight-decay", wu.weight_decay)->capture_default_str();
    cwarm->add_option("--beta1", wu.beta1)->capture_default_str();
    cwarm->add_option("--beta2", wu.beta2)->capture_default_str();
    cwarm->add_option("--eval-every", wu.eval_every, "Eval cadence in steps (0 disables)")
        ->capture_default_str();
    cwarm->add_option("--eval-examples", wu.eval_examples)->capture_default_str();
    cwarm->add_option("--target-accuracy", wu.target_accuracy,
                      "Stop once eval accuracy reaches this (0 disables)");
    cwarm->add_option("--checkpoint-every", wu.checkpoint_every,
                      "Intermediate checkpoint cadence in steps (0 disables)");
    cwarm->add_option("--budget-examples", wu.budget_examples,
                      "Derive steps as 1% of this vision example budget");

    SurgeryOpts su;
    CLI::App* csurg = app.add_subcommand("surgery", "Apply a checkpoint surgery plan");
    csurg->fallthrough();
    csurg->add_option("--input", su.input, "Input checkpoint")->required();
    csurg->add_option("--plan", su.plan_path, "Plan file (one step per line)")->required();
    csurg->add_option("--name", su.name, "Output subdirectory")->capture_default_str();
    csurg->add_option("--expect-input-hash", su.expect_input_hash,
                      "Fail unless the input checkpoint hashes to this value");

    FinetuneOpts ft;
    CLI::App* cfine = app.add_subcommand("finetune", "Image classification training");
    cfine->fallthrough();
    ft.model.add_flags(cfine);
    cfine->add_option("--checkpoint", ft.checkpoint, "Vision-stage input checkpoint");
    cfine->add_flag("--random-init", ft.random_init, "Start from a fresh vision model");
    cfine->add_option("--dataset", ft.dataset_dir,
                      "Dataset directory with train/ and test/ (default: built-in shapes)");
    cfine->add_option("--dataset-seed", ft.dataset_seed, "Seed for the built-in dataset")
        ->capture_default_str();
    cfine->add_option("--train-count", ft.train_count)->capture_default_str();
    cfine->add_option("--test-count", ft.test_count)->capture_default_str();
    cfine->add_option("--name", ft.name, "Run name (output subdirectory)")->capture_default_str();
    cfine->add_option("--expect-input-hash", ft.expect_input_hash,
                      "Fail unless the input checkpoint hashes to this value");
    cfine->add_option("--batch-size", ft.batch_size)->capture_default_str();
    cfine->add_option("--epochs", ft.epochs)->capture_default_str();
    cfine->add_option("--warmup-epochs", ft.warmup_epochs)->capture_default_str();
    cfine->add_option("--lr", ft.lr, "Peak learning rate")->capture_default_str();
    cfine->add_option("--weight-decay", ft.weight_decay)->capture_default_str();
    cfine->add_option("--label-smoothing", ft.label_smoothing)->capture_default_str();
    cfine->add_flag("--no-augment", ft.no_augment, "Disable flip and crop augmentation");
    cfine->add_option("--checkpoint-every", ft.checkpoint_every,
                      "Intermediate checkpoint cadence in steps (0 disables)");

    ReportOpts rp;
    CLI::App* crep = app.add_subcommand("report", "Tables and curves from metrics files");
    crep->fallthrough();
    crep->add_option("--run", rp.runs, "Named run as name=path/to/metrics.txt (repeatable)");
    crep->add_option("--baseline", rp.baseline, "Baseline run name (default: first run)");
    crep->add_option("--name", rp.name, "Output subdirectory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (cgen->parsed()) return run_generate(g, gen);
        if (cstats->parsed()) return run_stats(st);
        if (cwarm->parsed()) return run_warmup(g, wu);
        if (csurg->parsed()) return run_surgery(g, su);
        if (cfine->parsed()) return run_finetune(g, ft);
        if (crep->parsed()) return run_report(g, rp);
    } catch (const ValidationError& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return 1;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

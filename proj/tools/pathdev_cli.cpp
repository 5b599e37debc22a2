// pathdev command-line driver.
//
//   pathdev denoise   --data V --labels L --out DIR [--reference CLEAN_V]
//   pathdev augment   --data V --labels L --out DIR [--config C] [--seed S]
//   pathdev train     --config C --data V --labels L --out DIR [--seed S] [--algebra A]
//   pathdev eval      --model M --data V --labels L [--split S] [--out DIR]
//   pathdev sweep     --config C --sweep SPEC --data V --labels L --out DIR
//   pathdev gradcheck [--seed S] [--channels D] [--order M] [--steps N] [--algebra A]
//   pathdev synth     --out DIR [--seed S]
//
// Exit status: 0 success, 1 usage/input error, 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pathdev/artifact.hpp"
#include "pathdev/config.hpp"
#include "pathdev/gradcheck.hpp"
#include "pathdev/pipeline.hpp"
#include "pathdev/preprocess.hpp"
#include "pathdev/sweep.hpp"
#include "pathdev/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pathdev;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct CommonArgs {
    std::string config, data, labels, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> algebra;
};

void add_common(CLI::App* app, CommonArgs& a, bool config, bool data, bool out) {
    if (config) app->add_option("--config", a.config, "run configuration (key = value lines)")->check(CLI::ExistingFile);
    if (data) {
        app->add_option("--data", a.data, "values CSV (series_id,t,ch_0,...)")->required()->check(CLI::ExistingFile);
        app->add_option("--labels", a.labels, "labels CSV (series_id,label[,split])")->required()->check(CLI::ExistingFile);
    }
    if (out) app->add_option("--out", a.out, "output directory")->required();
    app->add_option("--seed", a.seed, "overrides the configured seed");
    app->add_option("--algebra", a.algebra, "so, sl, sp or gl")->check(CLI::IsMember({"so", "sl", "sp", "gl"}));
}

RunConfig resolve_config(const CommonArgs& a) {
    RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
    if (a.seed) cfg.train.seed = *a.seed;
    if (a.algebra) cfg.algebra = *parse_algebra(*a.algebra);
    cfg.validate();
    return cfg;
}

fs::path make_out_dir(const std::string& dir) {
    fs::create_directories(dir);
    return fs::path(dir);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

double mean_squared_error(const Dataset& a, const Dataset& b) {
    if (a.samples.size() != b.samples.size()) throw dimension_error("reference has a different number of series");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const auto va = a.samples[i].series.values(), vb = b.samples[i].series.values();
        if (a.samples[i].id != b.samples[i].id || va.size() != vb.size())
            throw dimension_error("reference series '" + b.samples[i].id + "' does not match '" + a.samples[i].id + "'");
        for (std::size_t k = 0; k < va.size(); ++k, ++n) s += (va[k] - vb[k]) * (va[k] - vb[k]);
    }
    return n ? s / static_cast<double>(n) : 0.0;
}

int cmd_denoise(const CommonArgs& a, const std::string& reference) {
    const Dataset raw = read_dataset(a.data, a.labels);
    const Dataset clean = denoise_dataset(raw);
    const fs::path dir = make_out_dir(a.out);
    write_dataset(clean, (dir / "values.csv").string(), (dir / "labels.csv").string());
    std::cout << "denoised " << clean.samples.size() << " series\n";
    if (!reference.empty()) {
        const Dataset ref = read_dataset(reference, a.labels);
        const double before = mean_squared_error(raw, ref), after = mean_squared_error(clean, ref);
        std::cout << "mse_noisy=" << csv_detail::format_double(before) << " mse_denoised=" << csv_detail::format_double(after)
                  << " reduction_db=" << csv_detail::format_double(10.0 * std::log10(before / after)) << '\n';
    }
    return kExitOk;
}

int cmd_augment(const CommonArgs& a) {
    const RunConfig cfg = resolve_config(a);
    if (cfg.smote_k == 0) throw config_error("augment: smote_k must be >= 1");
    Dataset ds = read_dataset(a.data, a.labels);
    ds.validate();
    if (!ds.has_splits()) ds = split_dataset(ds, cfg.train.seed);
    const std::size_t before = ds.samples.size();
    ds = augment_training(ds, cfg.smote_k, cfg.train.seed);
    const fs::path dir = make_out_dir(a.out);
    write_dataset(ds, (dir / "values.csv").string(), (dir / "labels.csv").string());
    std::size_t pos = 0, neg = 0;
    for (const Sample* s : ds.in_split(Split::train)) (s->label ? pos : neg)++;
    std::cout << "added " << ds.samples.size() - before << " synthetic series; train split: " << neg << " negative, "
              << pos << " positive\n";
    return kExitOk;
}

int cmd_train(const CommonArgs& a) {
    const RunConfig cfg = resolve_config(a);
    const Dataset ds = prepare_dataset(read_dataset(a.data, a.labels), cfg);
    const fs::path dir = make_out_dir(a.out);
    write_dataset(ds, (dir / "prepared_values.csv").string(), (dir / "prepared_labels.csv").string());

    std::ofstream trace(dir / "trace.csv");
    if (!trace) throw std::runtime_error("cannot write trace.csv");
    trace << kTraceHeader << '\n';
    const TrainResult r = run_training(ds, cfg, [&](const TraceRecord& rec) { trace << trace_line(rec) << '\n' << std::flush; });

    save_artifact(ModelArtifact{r.model, r.validation.threshold, cfg}, (dir / "model.json").string());
    write_text(dir / "report.json", report_text(r.validation));
    write_text(dir / "config.txt", to_config_text(cfg));
    std::cout << "kept epoch " << r.best_epoch << (r.eligible ? "" : " (no epoch reached NPV = 1)")
              << "; validation specificity " << csv_detail::format_double(r.validation.specificity.value_or(0.0))
              << ", threshold " << csv_detail::format_double(r.validation.threshold) << '\n';
    if (r.dexp_fallbacks > 0) std::cerr << "note: " << r.dexp_fallbacks << " dexp evaluations used the block fallback\n";
    return kExitOk;
}

int cmd_eval(const CommonArgs& a, const std::string& model_path, const std::string& split) {
    const ModelArtifact art = load_artifact(model_path);
    const Dataset ds = read_dataset(a.data, a.labels);
    ds.validate();
    if (ds.channels() != art.model.dev.channels())
        throw dimension_error("data has " + std::to_string(ds.channels()) + " channels, model expects " +
                              std::to_string(art.model.dev.channels()));
    std::vector<const Sample*> samples;
    if (split == "all") {
        for (const auto& s : ds.samples) samples.push_back(&s);
    } else {
        const auto sp = parse_split(split);
        if (!sp || *sp == Split::unassigned) throw config_error("--split must be train, validation, test or all");
        samples = ds.in_split(*sp);
    }
    if (samples.empty()) throw std::invalid_argument("eval: no series in split '" + split + "'");
    const Predictions p = predict_all(art.model, samples);
    const std::string text = report_text(evaluate_at(p.probs, p.labels, art.threshold));
    std::cout << text;
    if (!a.out.empty()) write_text(make_out_dir(a.out) / "eval_report.json", text);
    return kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& sweep_path) {
    const RunConfig base = resolve_config(a);
    check_config_in_sweep_ranges(base);
    const SweepSpec spec = load_sweep(sweep_path);
    const Dataset ds = prepare_dataset(read_dataset(a.data, a.labels), base);
    const SweepOutcome res = coordinate_descent(base, spec, [&](const RunConfig& cfg) {
        check_config_in_sweep_ranges(cfg);
        const TrainResult r = run_training(ds, cfg);
        std::cerr << "run: lr=" << get_config_value(cfg, "lr") << " epoch=" << cfg.train.epochs
                  << " batch_size=" << cfg.train.batch_size << " DEV_Number=" << cfg.dev_m
                  << " DNN_Number=" << cfg.train.hidden_width << " L2_Weight=" << get_config_value(cfg, "L2_Weight")
                  << " -> " << csv_detail::format_double(sweep_objective(r)) << '\n';
        return sweep_objective(r);
    });
    const fs::path dir = make_out_dir(a.out);
    std::ofstream lb(dir / "leaderboard.csv");
    if (!lb) throw std::runtime_error("cannot write leaderboard.csv");
    lb << "run,pass,axis,objective";
    for (const char* k : kConfigKeys) lb << ',' << k;
    lb << '\n';
    for (const auto& run : res.leaderboard) {
        lb << run.index << ',' << run.pass << ',' << run.axis << ',' << csv_detail::format_double(run.objective);
        for (const char* k : kConfigKeys) lb << ',' << get_config_value(run.config, k);
        lb << '\n';
    }
    write_text(dir / "best.cfg", to_config_text(res.best));
    std::cout << "best objective " << csv_detail::format_double(res.best_objective) << " after " << res.passes_run
              << " pass(es), " << res.leaderboard.size() << " runs\n"
              << to_config_text(res.best);
    return kExitOk;
}

int cmd_gradcheck(GradcheckOptions opt, const std::optional<std::string>& algebra) {
    if (opt.max_channels < 1 || opt.max_channels > 4 || opt.max_order < 2 || opt.max_order > 5 || opt.max_steps < 1 ||
        opt.max_steps > 12)
        throw config_error("gradcheck: need 1 <= channels <= 4, 2 <= order <= 5, 1 <= steps <= 12");
    if (algebra) opt.algebras = {*parse_algebra(*algebra)};
    const auto cases = run_gradcheck(opt);
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        std::printf("config %2zu  %s(%zu)  d=%zu  N=%2zu  max_rel_error=%.3e  %s\n", i, std::string(to_string(c.algebra)).c_str(),
                    c.order, c.channels, c.steps, c.max_rel_error, c.passed ? "ok" : "FAIL");
        ok = ok && c.passed;
        worst = std::max(worst, c.max_rel_error);
    }
    std::printf("%s: worst max_rel_error=%.3e (tolerance %.1e)\n", ok ? "PASS" : "FAIL", worst, opt.tolerance);
    return ok ? kExitOk : kExitNumerical;
}

int cmd_synth(const CommonArgs& a) {
    ArcTaskSpec spec;
    if (a.seed) spec.seed = *a.seed;
    const Dataset ds = make_arc_dataset(spec);
    const fs::path dir = make_out_dir(a.out);
    write_dataset(ds, (dir / "values.csv").string(), (dir / "labels.csv").string());
    std::cout << "wrote " << ds.samples.size() << " arc series\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lie-group path development classifier"};
    app.require_subcommand(1);

    CommonArgs den_a, aug_a, train_a, eval_a, sweep_a, synth_a;
    std::string reference, model_path, split = "test", sweep_path;
    GradcheckOptions gc;
    std::optional<std::string> gc_algebra;

    auto* den = app.add_subcommand("denoise", "wavelet-denoise every channel of every series");
    add_common(den, den_a, false, true, true);
    den->add_option("--reference", reference, "clean values CSV; prints MSE before and after")->check(CLI::ExistingFile);

    auto* aug = app.add_subcommand("augment", "split (if needed) and SMOTE-balance the training split");
    add_common(aug, aug_a, true, true, true);

    auto* tr = app.add_subcommand("train", "train a classifier and write model.json, trace.csv, report.json");
    add_common(tr, train_a, true, true, true);
    tr->get_option("--config")->required();

    auto* ev = app.add_subcommand("eval", "apply a trained model at its stored threshold");
    add_common(ev, eval_a, false, true, false);
    ev->add_option("--model", model_path, "model.json from train")->required()->check(CLI::ExistingFile);
    ev->add_option("--split", split, "train, validation, test or all")->capture_default_str();
    ev->add_option("--out", eval_a.out, "directory for eval_report.json");

    auto* sw = app.add_subcommand("sweep", "coordinate-descent hyperparameter search");
    add_common(sw, sweep_a, true, true, true);
    sw->get_option("--config")->required();
    sw->add_option("--sweep", sweep_path, "sweep specification")->required()->check(CLI::ExistingFile);

    auto* gcx = app.add_subcommand("gradcheck", "finite-difference check of the development layer gradient");
    gcx->add_option("--seed", gc.seed)->capture_default_str();
    gcx->add_option("--channels", gc.max_channels, "max path channels (<= 4)")->capture_default_str();
    gcx->add_option("--order", gc.max_order, "max matrix order (<= 5)")->capture_default_str();
    gcx->add_option("--steps", gc.max_steps, "max path steps (<= 12)")->capture_default_str();
    gcx->add_option("--configs", gc.configs, "number of random configurations")->capture_default_str();
    gcx->add_option("--algebra", gc_algebra, "restrict to one algebra")->check(CLI::IsMember({"so", "sl", "sp", "gl"}));
    gcx->add_flag("--zero-path", gc.zero_path, "use constant paths");
    gcx->add_option("--corrupt", gc.corrupt, "debug: scale the analytic gradient by 1 + value");

    auto* sy = app.add_subcommand("synth", "write the clockwise/counter-clockwise arc dataset");
    sy->add_option("--out", synth_a.out, "output directory")->required();
    sy->add_option("--seed", synth_a.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*den) return cmd_denoise(den_a, reference);
        if (*aug) return cmd_augment(aug_a);
        if (*tr) return cmd_train(train_a);
        if (*ev) return cmd_eval(eval_a, model_path, split);
        if (*sw) return cmd_sweep(sweep_a, sweep_path);
        if (*gcx) return cmd_gradcheck(gc, gc_algebra);
        if (*sy) return cmd_synth(synth_a);
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const pathdev::domain_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

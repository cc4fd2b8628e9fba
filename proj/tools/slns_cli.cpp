// slns: train, evaluate, explain, reduce, and benchmark stacked
// super-learner models for severity classification and score regression.
//
// Exit codes: 0 ok, 2 usage error, 3 data error, 4 model archive error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "slx/slx.hpp"

namespace {

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::size_t threads = 1;
    bool quiet = false;
};

void info(const GlobalOpts& g, const std::string& msg) {
    if (!g.quiet) std::cerr << msg << '\n';
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw CLI::ValidationError("sizes", "bad size list '" + s + "'");
        }
    }
    if (out.empty()) throw CLI::ValidationError("sizes", "empty size list");
    return out;
}

slx::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw slx::DataError("cannot open '" + path + "'");
    try {
        return slx::json::parse(in);
    } catch (const slx::json::exception& e) {
        throw slx::DataError("bad JSON in '" + path + "': " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw slx::DataError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw slx::DataError("write failed: '" + path + "'");
}

slx::Task pick_task(const slx::Dataset& ds, const std::string& requested) {
    if (requested == "classify") {
        if (!ds.class_labels) throw slx::DataError("classification requested but no class column");
        return slx::Task::classify;
    }
    if (requested == "regress") {
        if (!ds.scores) throw slx::DataError("regression requested but no score column");
        return slx::Task::regress;
    }
    return ds.class_labels ? slx::Task::classify : slx::Task::regress;
}

// ---------------------------------------------------------------------------

int cmd_synth(const GlobalOpts& g, const std::string& spec_path, const std::string& out_path) {
    slx::SyntheticSpec spec = slx::load_synthetic_spec(spec_path);
    if (g.seed_given) spec.seed = g.seed;
    const slx::Dataset ds = slx::generate_planted(spec);
    slx::save_csv(ds, out_path);
    info(g, "wrote " + std::to_string(ds.n()) + " rows x " + std::to_string(ds.d()) +
                " features to " + out_path);
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_path, const std::string& out_path,
              const std::string& config_path, const std::string& plan_path,
              const std::string& task_str) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::Task task = pick_task(ds, task_str);

    std::vector<std::size_t> subset;  // empty = all features
    slx::SuperLearnerSpec spec;
    if (!plan_path.empty()) {
        const slx::ReductionPlan plan = slx::reduction_plan_from_json(load_json_file(plan_path));
        spec = plan.reduced_spec;
        subset = plan.selected;
        if (spec.task != task)
            throw slx::DataError("plan task does not match the data/task selection");
    } else if (!config_path.empty()) {
        spec = slx::super_spec_from_json(load_json_file(config_path));
        if (spec.task != task)
            throw slx::DataError("config task does not match the data/task selection");
    } else {
        spec = slx::SuperLearnerSpec::defaults(task, g.seed);
    }
    if (g.seed_given) {
        spec.seed = g.seed;
        for (auto& b : spec.base_specs) b.seed = g.seed;
        spec.meta_spec.seed = g.seed;
    }

    const slx::SuperLearnerModel model = slx::fit_super(ds, spec, subset, g.threads);
    const std::size_t bytes = slx::save_model(model, out_path);
    info(g, "trained on " + std::to_string(ds.n()) + " rows (" +
                std::to_string(model.feature_subset.size()) + "/" +
                std::to_string(model.full_width) + " features); archive " +
                std::to_string(bytes) + " bytes -> " + out_path);
    return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& data_path,
                 const std::string& model_path, std::size_t kfold,
                 const std::string& report_path) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::SuperLearnerModel model = slx::load_model(model_path);
    slx::SuperLearnerSpec spec = model.spec;
    if (g.seed_given) spec.seed = g.seed;

    bool stratified = false;
    if (spec.task == slx::Task::classify) {
        if (!ds.class_labels) throw slx::DataError("model is a classifier but data has no classes");
        std::vector<std::size_t> counts(ds.schema.n_classes(), 0);
        for (auto c : *ds.class_labels) ++counts[c];
        stratified = std::all_of(counts.begin(), counts.end(),
                                 [&](std::size_t c) { return c >= kfold; });
    } else if (!ds.scores) {
        throw slx::DataError("model is a regressor but data has no scores");
    }
    const slx::FoldPlan plan = slx::split_kfold(ds, kfold, spec.seed, stratified);
    const slx::EvalReport rep = slx::crossval_evaluate(ds, spec, plan, g.threads);

    const slx::json j = slx::eval_report_to_json(rep);
    if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
    if (!g.quiet) std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_explain(const GlobalOpts& g, const std::string& data_path,
                const std::string& model_path, const std::string& method,
                const std::string& out_path, std::optional<std::size_t> row,
                std::optional<std::size_t> feature, std::size_t background,
                std::size_t n_explained, std::size_t coalitions, std::size_t samples) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::SuperLearnerModel model = slx::load_model(model_path);
    if (ds.d() != model.full_width)
        throw slx::DataError("data width does not match the model's expected feature count");
    const auto channels = slx::super_channels(model);
    std::ostringstream csv;
    csv.precision(10);

    auto channel_header = [&](const std::string& prefix) {
        if (model.spec.task == slx::Task::regress) {
            csv << ',' << prefix;
        } else {
            for (const auto& c : model.classes) csv << ',' << prefix << '_' << c;
        }
    };

    if (method == "shap") {
        if (row) {
            if (*row >= ds.n()) throw slx::DataError("--row out of range");
            std::vector<std::size_t> idx(ds.n());
            std::iota(idx.begin(), idx.end(), 0);
            slx::Rng rng = slx::make_rng(g.seed, 0x626bULL);
            if (background < ds.n()) {
                std::shuffle(idx.begin(), idx.end(), rng);
                idx.resize(background);
                std::sort(idx.begin(), idx.end());
            }
            const slx::Matrix bg = ds.rows.take_rows(idx);
            std::vector<slx::Attribution> atts;
            for (std::size_t c = 0; c < channels.size(); ++c)
                atts.push_back(slx::kernel_shap(channels[c], bg, ds.rows.row(*row), coalitions,
                                                slx::mix_seed(g.seed, c)));
            csv << "feature,name,value";
            channel_header("phi");
            csv << '\n';
            for (std::size_t j = 0; j < ds.d(); ++j) {
                csv << j << ',' << ds.schema.names[j] << ',' << ds.rows(*row, j);
                for (const auto& a : atts) csv << ',' << a.phi[j];
                csv << '\n';
            }
            csv << "base,,";
            for (const auto& a : atts) csv << ',' << a.base_value;
            csv << '\n';
        } else {
            const slx::GlobalRanking r = slx::global_mean_abs_shap(
                channels, ds, background, n_explained, coalitions, g.seed);
            csv << "rank,feature,name,mean_abs_shap\n";
            for (std::size_t p = 0; p < r.order.size(); ++p)
                csv << p << ',' << r.order[p] << ',' << ds.schema.names[r.order[p]] << ','
                    << r.scores[r.order[p]] << '\n';
        }
    } else if (method == "morris") {
        const slx::GlobalRanking r = slx::morris_global(model, ds, 20, 8, g.seed);
        csv << "rank,feature,name,mas\n";
        for (std::size_t p = 0; p < r.order.size(); ++p)
            csv << p << ',' << r.order[p] << ',' << ds.schema.names[r.order[p]] << ','
                << r.scores[r.order[p]] << '\n';
    } else if (method == "lime") {
        const std::size_t i = row.value_or(0);
        if (i >= ds.n()) throw slx::DataError("--row out of range");
        const slx::StandardizerState st = slx::fit_standardizer(ds);
        slx::LimeConfig cfg;
        cfg.scale = st.stddev;
        cfg.n_samples = samples;
        std::vector<slx::Attribution> atts;
        for (std::size_t c = 0; c < channels.size(); ++c)
            atts.push_back(slx::lime_explain(channels[c], ds.rows.row(i), cfg,
                                             slx::mix_seed(g.seed, c)));
        // phi holds local slopes of the raw prediction channel per raw
        // feature unit (class probabilities for classifiers).
        csv << "feature,name,value";
        channel_header("slope");
        csv << '\n';
        for (std::size_t j = 0; j < ds.d(); ++j) {
            csv << j << ',' << ds.schema.names[j] << ',' << ds.rows(i, j);
            for (const auto& a : atts) csv << ',' << a.phi[j];
            csv << '\n';
        }
        csv << "intercept,,";
        for (const auto& a : atts) csv << ',' << a.base_value;
        csv << '\n';
    } else if (method == "pdp") {
        if (!feature) throw slx::DataError("pdp requires --feature");
        if (*feature >= ds.d()) throw slx::DataError("--feature out of range");
        std::vector<slx::PdpCurve> curves;
        for (const auto& ch : channels) curves.push_back(slx::pdp_curve(ch, ds, *feature, 20));
        csv << "grid";
        channel_header("mean_prediction");
        csv << '\n';
        for (std::size_t gpt = 0; gpt < curves[0].grid.size(); ++gpt) {
            csv << curves[0].grid[gpt];
            for (const auto& c : curves) csv << ',' << c.values[gpt];
            csv << '\n';
        }
    } else {
        throw CLI::ValidationError("method", "unknown method '" + method + "'");
    }
    write_text(out_path, csv.str());
    info(g, "wrote " + method + " report to " + out_path);
    return 0;
}

int cmd_reduce(const GlobalOpts& g, const std::string& data_path, const std::string& model_path,
               double fraction, std::optional<std::size_t> k, const std::string& rule,
               const std::string& out_path, std::size_t background, std::size_t n_explained,
               std::size_t coalitions) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::SuperLearnerModel model = slx::load_model(model_path);
    if (ds.d() != model.full_width)
        throw slx::DataError("data width does not match the model's expected feature count");

    slx::ReduceSettings cfg;
    cfg.fraction = fraction;
    cfg.k_override = k;
    cfg.rule = slx::merge_rule_from_name(rule);
    cfg.background_size = background;
    cfg.n_explained = n_explained;
    cfg.n_coalitions = coalitions;
    cfg.seed = g.seed;
    const slx::ReductionPlan plan = slx::plan_reduction(model, ds, cfg);
    write_text(out_path, slx::reduction_plan_to_json(plan, ds.schema.names).dump(2) + "\n");
    info(g, "selected " + std::to_string(plan.k) + " of " + std::to_string(ds.d()) +
                " features -> " + out_path);
    return 0;
}

int cmd_bench(const GlobalOpts& g, const std::string& model_path, const std::string& data_path,
              const std::string& sizes_str, std::size_t reps, const std::string& report_path) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::SuperLearnerModel model = slx::load_model(model_path);
    if (ds.d() != model.full_width)
        throw slx::DataError("data width does not match the model's expected feature count");
    slx::BenchReport rep =
        slx::bench_inference(model, ds.rows, parse_size_list(sizes_str), reps, 3, g.seed);
    rep.model_bytes = static_cast<std::size_t>(std::filesystem::file_size(model_path));

    const slx::json j = slx::bench_report_to_json(rep);
    if (!report_path.empty()) write_text(report_path, j.dump(2) + "\n");
    if (!g.quiet) std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_predict(const GlobalOpts& g, const std::string& model_path,
                const std::string& data_path, const std::string& out_path) {
    const slx::Dataset ds = slx::load_csv(data_path);
    const slx::SuperLearnerModel model = slx::load_model(model_path);
    if (ds.d() != model.full_width)
        throw slx::DataError("data width does not match the model's expected feature count");
    const slx::SuperPrediction pred = slx::predict_super(model, ds.rows);

    std::ostringstream csv;
    csv.precision(10);
    if (model.spec.task == slx::Task::classify) {
        csv << "row,predicted";
        for (const auto& c : model.classes) csv << ",p_" << c;
        csv << '\n';
        for (std::size_t i = 0; i < ds.n(); ++i) {
            csv << i << ',' << model.classes[pred.labels[i]];
            for (std::size_t c = 0; c < model.classes.size(); ++c)
                csv << ',' << pred.probabilities(i, c);
            csv << '\n';
        }
    } else {
        csv << "row,predicted\n";
        for (std::size_t i = 0; i < ds.n(); ++i)
            csv << i << ',' << pred.probabilities(i, 0) << '\n';
    }
    write_text(out_path, csv.str());
    info(g, "wrote " + std::to_string(ds.n()) + " predictions to " + out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stacked super-learner pipeline: synth, train, evaluate, explain, "
                 "reduce, bench, predict"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "base random seed")->each([&](const std::string&) {
        g.seed_given = true;
    });
    app.add_option("--threads", g.threads, "worker threads for training/explanation")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    // synth
    std::string synth_spec, synth_out;
    auto* synth = app.add_subcommand("synth", "generate a planted-feature dataset");
    synth->add_option("--spec", synth_spec, "key=value generator config")->required();
    synth->add_option("--out", synth_out, "output CSV path")->required();

    // train
    std::string train_data, train_out, train_config, train_plan, train_task;
    auto* train = app.add_subcommand("train", "fit a stacked model and save the archive");
    train->add_option("--data", train_data, "training CSV")->required();
    train->add_option("--out", train_out, "output model archive (.slns)")->required();
    train->add_option("--config", train_config, "super-learner JSON config");
    train->add_option("--plan", train_plan, "reduction plan JSON (retrain reduced)");
    train->add_option("--task", train_task, "classify|regress (default: from data)")
        ->check(CLI::IsMember({"classify", "regress"}));

    // evaluate
    std::string eval_data, eval_model, eval_report;
    std::size_t eval_kfold = 10;
    auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated metrics");
    evaluate->add_option("--data", eval_data, "dataset CSV")->required();
    evaluate->add_option("--model", eval_model, "model archive (supplies the learner configuration)")->required();
    evaluate->add_option("--kfold", eval_kfold, "number of folds")->check(CLI::Range(2, 1000));
    evaluate->add_option("--report", eval_report, "JSON report path");

    // explain
    std::string ex_data, ex_model, ex_method, ex_out;
    std::optional<std::size_t> ex_row, ex_feature;
    std::size_t ex_background = 100, ex_nexpl = 200, ex_coal = 256, ex_samples = 500;
    auto* explain = app.add_subcommand("explain", "model-agnostic explanation reports");
    explain->add_option("--data", ex_data, "dataset CSV")->required();
    explain->add_option("--model", ex_model, "model archive")->required();
    explain->add_option("--method", ex_method, "shap|morris|lime|pdp")
        ->required()
        ->check(CLI::IsMember({"shap", "morris", "lime", "pdp"}));
    explain->add_option("--out", ex_out, "output CSV report")->required();
    explain->add_option("--row", ex_row, "row to explain (shap/lime local)");
    explain->add_option("--feature", ex_feature, "feature index (pdp)");
    explain->add_option("--background", ex_background, "SHAP background sample size");
    explain->add_option("--n-explained", ex_nexpl, "rows explained for global SHAP");
    explain->add_option("--coalitions", ex_coal, "kernel SHAP coalition budget");
    explain->add_option("--samples", ex_samples, "LIME perturbation count");

    // reduce
    std::string red_data, red_model, red_rule = "borda", red_out;
    double red_fraction = 1.0 / 3.0;
    std::optional<std::size_t> red_k;
    std::size_t red_background = 100, red_nexpl = 200, red_coal = 256;
    auto* reduce = app.add_subcommand("reduce", "plan an XAI-guided feature reduction");
    reduce->add_option("--data", red_data, "dataset CSV")->required();
    reduce->add_option("--model", red_model, "trained full model archive")->required();
    reduce->add_option("--fraction", red_fraction, "selected fraction of features");
    reduce->add_option("--k", red_k, "explicit selected count (overrides --fraction)");
    reduce->add_option("--rule", red_rule, "borda|shap_only|morris_only")
        ->check(CLI::IsMember({"borda", "shap_only", "morris_only"}));
    reduce->add_option("--out", red_out, "reduction plan JSON path")->required();
    reduce->add_option("--background", red_background, "SHAP background sample size");
    reduce->add_option("--n-explained", red_nexpl, "rows explained for global SHAP");
    reduce->add_option("--coalitions", red_coal, "kernel SHAP coalition budget");

    // bench
    std::string bench_model, bench_data, bench_sizes = "1,10,100,500", bench_report;
    std::size_t bench_reps = 10;
    auto* bench = app.add_subcommand("bench", "inference latency benchmark");
    bench->add_option("--model", bench_model, "model archive")->required();
    bench->add_option("--data", bench_data, "dataset CSV supplying query rows")->required();
    bench->add_option("--sizes", bench_sizes, "comma list of batch sizes");
    bench->add_option("--reps", bench_reps, "timed repetitions per size")
        ->check(CLI::Range(3, 10000));
    bench->add_option("--report", bench_report, "JSON report path");

    // predict
    std::string pred_model, pred_data, pred_out;
    auto* predict = app.add_subcommand("predict", "batch predictions to CSV");
    predict->add_option("--model", pred_model, "model archive")->required();
    predict->add_option("--data", pred_data, "input CSV")->required();
    predict->add_option("--out", pred_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(g, synth_spec, synth_out);
        if (train->parsed())
            return cmd_train(g, train_data, train_out, train_config, train_plan, train_task);
        if (evaluate->parsed())
            return cmd_evaluate(g, eval_data, eval_model, eval_kfold, eval_report);
        if (explain->parsed())
            return cmd_explain(g, ex_data, ex_model, ex_method, ex_out, ex_row, ex_feature,
                               ex_background, ex_nexpl, ex_coal, ex_samples);
        if (reduce->parsed())
            return cmd_reduce(g, red_data, red_model, red_fraction, red_k, red_rule, red_out,
                              red_background, red_nexpl, red_coal);
        if (bench->parsed())
            return cmd_bench(g, bench_model, bench_data, bench_sizes, bench_reps, bench_report);
        if (predict->parsed()) return cmd_predict(g, pred_model, pred_data, pred_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const slx::ArchiveError& e) {
        std::cerr << "archive error: " << e.what() << '\n';
        return 4;
    } catch (const slx::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "slx/metrics.hpp"
#include "slx/reduce.hpp"

namespace slx {

using json = nlohmann::json;

inline std::string task_name(Task t) { return t == Task::classify ? "classify" : "regress"; }
inline Task task_from_name(const std::string& s) {
    if (s == "classify") return Task::classify;
    if (s == "regress") return Task::regress;
    throw DataError("unknown task '" + s + "'");
}

inline std::string kernel_name(SvmKernel k) {
    return k == SvmKernel::linear ? "linear" : "polynomial";
}
inline SvmKernel kernel_from_name(const std::string& s) {
    if (s == "linear") return SvmKernel::linear;
    if (s == "polynomial" || s == "poly") return SvmKernel::polynomial;
    throw DataError("unknown svm kernel '" + s + "'");
}

inline json hyperparams_to_json(const Hyperparams& hp) {
    return json{{"n_neighbors", hp.n_neighbors},
                {"n_estimators", hp.n_estimators},
                {"max_depth", hp.max_depth},
                {"min_samples_split", hp.min_samples_split},
                {"max_features", hp.max_features},
                {"bootstrap", hp.bootstrap},
                {"learning_rate", hp.learning_rate},
                {"kernel", kernel_name(hp.kernel)},
                {"degree", hp.degree},
                {"coef0", hp.coef0},
                {"gamma", hp.gamma},
                {"C", hp.C},
                {"epsilon", hp.epsilon},
                {"svm_max_n", hp.svm_max_n},
                {"l2_lambda", hp.l2_lambda},
                {"max_iter", hp.max_iter},
                {"tol", hp.tol}};
}

/// Partial override: absent keys keep their preset values.
inline Hyperparams hyperparams_from_json(const json& j, Hyperparams hp = {}) {
    if (j.contains("n_neighbors")) hp.n_neighbors = j.at("n_neighbors").get<std::size_t>();
    if (j.contains("n_estimators")) hp.n_estimators = j.at("n_estimators").get<std::size_t>();
    if (j.contains("max_depth")) hp.max_depth = j.at("max_depth").get<std::size_t>();
    if (j.contains("min_samples_split"))
        hp.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    if (j.contains("max_features")) hp.max_features = j.at("max_features").get<std::size_t>();
    if (j.contains("bootstrap")) hp.bootstrap = j.at("bootstrap").get<bool>();
    if (j.contains("learning_rate")) hp.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("kernel")) hp.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    if (j.contains("degree")) hp.degree = j.at("degree").get<std::size_t>();
    if (j.contains("coef0")) hp.coef0 = j.at("coef0").get<double>();
    if (j.contains("gamma")) hp.gamma = j.at("gamma").get<double>();
    if (j.contains("C")) hp.C = j.at("C").get<double>();
    if (j.contains("epsilon")) hp.epsilon = j.at("epsilon").get<double>();
    if (j.contains("svm_max_n")) hp.svm_max_n = j.at("svm_max_n").get<std::size_t>();
    if (j.contains("l2_lambda")) hp.l2_lambda = j.at("l2_lambda").get<double>();
    if (j.contains("max_iter")) hp.max_iter = j.at("max_iter").get<std::size_t>();
    if (j.contains("tol")) hp.tol = j.at("tol").get<double>();
    return hp;
}

inline json learner_spec_to_json(const LearnerSpec& s) {
    return json{{"family", family_name(s.family)},
                {"task", task_name(s.task)},
                {"seed", s.seed},
                {"name", s.name},
                {"hp", hyperparams_to_json(s.hp)}};
}

inline LearnerSpec learner_spec_from_json(const json& j, Task default_task,
                                          std::uint64_t default_seed = 0) {
    const std::string fam = j.at("family").get<std::string>();
    const Task task =
        j.contains("task") ? task_from_name(j.at("task").get<std::string>()) : default_task;
    LearnerSpec s = LearnerSpec::defaults(family_from_name(fam), task,
                                          j.value("seed", default_seed));
    // The boosting presets differ; the registered name selects which one.
    if (fam == "xgb" || fam == "gb") s.name = fam;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("hp")) s.hp = hyperparams_from_json(j.at("hp"), s.hp);
    s.validate();
    return s;
}

inline json super_spec_to_json(const SuperLearnerSpec& s) {
    json bases = json::array();
    for (const auto& b : s.base_specs) bases.push_back(learner_spec_to_json(b));
    return json{{"task", task_name(s.task)},
                {"seed", s.seed},
                {"meta_folds", s.meta_folds},
                {"bases", bases},
                {"meta", learner_spec_to_json(s.meta_spec)}};
}

inline SuperLearnerSpec super_spec_from_json(const json& j) {
    const Task task = task_from_name(j.value("task", std::string("classify")));
    SuperLearnerSpec s = SuperLearnerSpec::defaults(task, j.value("seed", std::uint64_t{0}));
    if (j.contains("meta_folds")) s.meta_folds = j.at("meta_folds").get<std::size_t>();
    if (j.contains("bases")) {
        s.base_specs.clear();
        for (const auto& b : j.at("bases"))
            s.base_specs.push_back(learner_spec_from_json(b, task, s.seed));
    }
    if (j.contains("meta")) s.meta_spec = learner_spec_from_json(j.at("meta"), task, s.seed);
    s.validate();
    return s;
}

inline json eval_report_to_json(const EvalReport& rep) {
    json j{{"task", task_name(rep.task)}, {"n", rep.n}};
    if (rep.task == Task::classify) {
        j["accuracy"] = rep.accuracy;
        j["confusion"] = rep.confusion;
        json precision = json::array(), recall = json::array(), f1 = json::array();
        for (const auto& m : rep.per_class) {
            precision.push_back(m.precision);
            recall.push_back(m.recall);
            f1.push_back(m.f1);
        }
        j["precision"] = precision;
        j["recall"] = recall;
        j["f1"] = f1;
        j["auc_per_class"] = rep.auc_per_class;
        j["auc_macro"] = rep.auc_macro;
        j["zero_division"] = rep.zero_division;
    } else {
        j["rmse"] = rep.rmse;
        j["mae"] = rep.mae;
        j["r2"] = rep.r2;
        j["plcc"] = rep.plcc;
    }
    if (!rep.fold_breakdown.empty()) {
        json folds = json::array();
        for (const auto& f : rep.fold_breakdown) folds.push_back(eval_report_to_json(f));
        j["fold_breakdown"] = folds;
    }
    return j;
}

inline json ranking_to_json(const GlobalRanking& r, const std::vector<std::string>& names) {
    json j{{"method", r.method}, {"sample_count", r.sample_count}};
    j["scores"] = r.scores;
    j["order"] = r.order;
    json named = json::array();
    for (std::size_t p = 0; p < r.order.size(); ++p) {
        const std::size_t f = r.order[p];
        named.push_back(json{{"rank", p},
                             {"feature", f},
                             {"name", f < names.size() ? names[f] : std::to_string(f)},
                             {"score", r.scores[f]}});
    }
    j["ranking"] = named;
    return j;
}

inline GlobalRanking ranking_from_json(const json& j) {
    GlobalRanking r;
    r.method = j.value("method", std::string());
    r.sample_count = j.value("sample_count", std::size_t{0});
    r.scores = j.at("scores").get<std::vector<double>>();
    r.order = j.at("order").get<std::vector<std::size_t>>();
    return r;
}

inline json reduction_plan_to_json(const ReductionPlan& plan,
                                   const std::vector<std::string>& names) {
    return json{{"merged_order", plan.merged_order},
                {"selected", plan.selected},
                {"k", plan.k},
                {"fraction", plan.fraction},
                {"rule", merge_rule_name(plan.rule)},
                {"shap", ranking_to_json(plan.shap_ranking, names)},
                {"morris", ranking_to_json(plan.morris_ranking, names)},
                {"reduced_spec", super_spec_to_json(plan.reduced_spec)}};
}

inline ReductionPlan reduction_plan_from_json(const json& j) {
    ReductionPlan plan;
    plan.merged_order = j.at("merged_order").get<std::vector<std::size_t>>();
    plan.selected = j.at("selected").get<std::vector<std::size_t>>();
    plan.k = j.at("k").get<std::size_t>();
    plan.fraction = j.value("fraction", 1.0 / 3.0);
    plan.rule = merge_rule_from_name(j.value("rule", std::string("borda")));
    if (j.contains("shap")) plan.shap_ranking = ranking_from_json(j.at("shap"));
    if (j.contains("morris")) plan.morris_ranking = ranking_from_json(j.at("morris"));
    plan.reduced_spec = super_spec_from_json(j.at("reduced_spec"));
    if (plan.selected.size() != plan.k || plan.k == 0)
        throw DataError("reduction plan: selected/k mismatch");
    return plan;
}

}  // namespace slx

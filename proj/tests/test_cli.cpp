#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

std::string work_dir() {
    const std::string dir = std::string(SLNS_WORK_DIR) + "/cli";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(SLNS_CLI_PATH) + " " + args + " >" + work_dir() +
                            "/stdout.txt 2>" + work_dir() + "/stderr.txt";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

/// Paths shared across the ordered end-to-end cases.
const std::string kDir = work_dir();
const std::string kSynthCfg = kDir + "/synth.cfg";
const std::string kData = kDir + "/data.csv";
const std::string kConfig = kDir + "/super.json";
const std::string kModel = kDir + "/model.slns";
const std::string kPlan = kDir + "/plan.json";

void write_fixtures() {
    spit(kSynthCfg,
         "n = 120\nd = 6\ninformative = 0, 1\nn_classes = 3\nnoise_sigma = 0.3\nseed = 9\n");
    spit(kConfig, R"({
  "task": "classify", "seed": 5, "meta_folds": 3,
  "bases": [
    {"family": "knn"},
    {"family": "rf", "hp": {"n_estimators": 10}},
    {"family": "gb", "hp": {"n_estimators": 10}}
  ],
  "meta": {"family": "logistic"}
})");
}

}  // namespace

TEST_CASE("cli: usage errors exit with code 2") {
    REQUIRE(run("") == 2);
    REQUIRE(run("frobnicate") == 2);
    REQUIRE(run("train") == 2);                       // missing required options
    REQUIRE(run("synth --spec x") == 2);              // missing --out
    REQUIRE(run("--threads 0 synth --spec a --out b") == 2);
    REQUIRE(run("explain --data a --model b --method magic --out c") == 2);
    REQUIRE(run("--help") == 0);
}

TEST_CASE("cli: synth generates a deterministic csv") {
    write_fixtures();
    REQUIRE(run("synth --spec " + kSynthCfg + " --out " + kData) == 0);
    const std::string text = slurp(kData);
    REQUIRE(first_line(text) == "f0,f1,f2,f3,f4,f5,severity,fms");

    const std::string again = kDir + "/data2.csv";
    REQUIRE(run("synth --spec " + kSynthCfg + " --out " + again) == 0);
    REQUIRE(slurp(again) == text);  // same seed, same bytes

    REQUIRE(run("--seed 123 synth --spec " + kSynthCfg + " --out " + again) == 0);
    REQUIRE(slurp(again) != text);  // the global seed overrides the config

    REQUIRE(run("synth --spec " + kDir + "/missing.cfg --out " + again) == 3);
}

TEST_CASE("cli: train produces a byte-stable archive") {
    REQUIRE(run("train --data " + kData + " --config " + kConfig + " --out " + kModel) == 0);
    REQUIRE(fs::exists(kModel));
    const std::string bytes = slurp(kModel);
    REQUIRE(bytes.substr(0, 4) == "SLNS");

    const std::string again = kDir + "/model2.slns";
    REQUIRE(run("train --data " + kData + " --config " + kConfig + " --out " + again) == 0);
    REQUIRE(slurp(again) == bytes);  // retraining is fully reproducible

    // task mismatch and bad data map to exit 3
    REQUIRE(run("train --data " + kDir + "/nope.csv --config " + kConfig + " --out " + again) == 3);
    spit(kDir + "/noclass.csv", "a,fms\n1,2\n2,3\n");
    REQUIRE(run("train --data " + kDir + "/noclass.csv --task classify --out " + again) == 3);
}

TEST_CASE("cli: evaluate emits a stable json report") {
    const std::string rep = kDir + "/report.json";
    REQUIRE(run("--quiet evaluate --data " + kData + " --model " + kModel +
                " --kfold 3 --report " + rep) == 0);
    REQUIRE(slurp(kDir + "/stdout.txt").empty());  // --quiet silences stdout

    const auto j = nlohmann::json::parse(slurp(rep));
    REQUIRE(j.at("task") == "classify");
    REQUIRE(j.at("n") == 120);
    const double acc = j.at("accuracy").get<double>();
    REQUIRE(acc >= 0.0);
    REQUIRE(acc <= 1.0);
    REQUIRE(j.at("fold_breakdown").size() == 3);

    const std::string rep2 = kDir + "/report2.json";
    REQUIRE(run("--quiet evaluate --data " + kData + " --model " + kModel +
                " --kfold 3 --report " + rep2) == 0);
    REQUIRE(slurp(rep2) == slurp(rep));  // byte-identical rerun

    REQUIRE(run("evaluate --data " + kData + " --model " + kDir + "/ghost.slns") == 4);
}

TEST_CASE("cli: all four explanation methods write their reports") {
    const std::string out = kDir + "/explain.csv";
    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method shap --background 25 --n-explained 20 --coalitions 64 --out " +
                out) == 0);
    REQUIRE(first_line(slurp(out)) == "rank,feature,name,mean_abs_shap");

    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method shap --row 0 --background 25 --coalitions 64 --out " + out) == 0);
    REQUIRE(first_line(slurp(out)) == "feature,name,value,phi_none,phi_medium,phi_high");

    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method morris --out " + out) == 0);
    REQUIRE(first_line(slurp(out)) == "rank,feature,name,mas");

    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method lime --row 2 --samples 200 --out " + out) == 0);
    REQUIRE(first_line(slurp(out)) == "feature,name,value,slope_none,slope_medium,slope_high");

    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method pdp --feature 1 --out " + out) == 0);
    REQUIRE(first_line(slurp(out)) ==
            "grid,mean_prediction_none,mean_prediction_medium,mean_prediction_high");

    // pdp without --feature is a data error; out-of-range row too
    REQUIRE(run("explain --data " + kData + " --model " + kModel + " --method pdp --out " +
                out) == 3);
    REQUIRE(run("explain --data " + kData + " --model " + kModel +
                " --method lime --row 99999 --out " + out) == 3);
}

TEST_CASE("cli: reduce then retrain from the plan") {
    REQUIRE(run("reduce --data " + kData + " --model " + kModel +
                " --background 25 --n-explained 20 --coalitions 64 --out " + kPlan) == 0);
    const auto plan = nlohmann::json::parse(slurp(kPlan));
    REQUIRE(plan.at("k") == 2);  // ceil(6 / 3)
    REQUIRE(plan.at("selected").size() == 2);
    // the planted features 0 and 1 should top the merged ranking
    std::set<std::size_t> sel(plan.at("selected").begin(), plan.at("selected").end());
    REQUIRE(sel.count(0) + sel.count(1) == 2);

    const std::string reduced = kDir + "/reduced.slns";
    REQUIRE(run("train --data " + kData + " --plan " + kPlan + " --out " + reduced) == 0);
    REQUIRE(fs::exists(reduced));

    const std::string pred = kDir + "/pred.csv";
    REQUIRE(run("predict --model " + reduced + " --data " + kData + " --out " + pred) == 0);
    REQUIRE(first_line(slurp(pred)) == "row,predicted,p_none,p_medium,p_high");

    REQUIRE(run("reduce --data " + kData + " --model " + kModel + " --k 99 --out " + kPlan) == 3);
}

TEST_CASE("cli: bench reports latency and archive size") {
    const std::string rep = kDir + "/bench.json";
    REQUIRE(run("--quiet bench --model " + kModel + " --data " + kData +
                " --sizes 1,20 --reps 3 --report " + rep) == 0);
    const auto j = nlohmann::json::parse(slurp(rep));
    REQUIRE(j.at("sample_sizes") == nlohmann::json::array({1, 20}));
    REQUIRE(j.at("model_bytes").get<std::size_t>() == fs::file_size(kModel));
    for (const auto& m : j.at("mean_s")) REQUIRE(m.get<double>() > 0.0);

    REQUIRE(run("bench --model " + kModel + " --data " + kData + " --sizes abc") == 2);
    REQUIRE(run("bench --model " + kModel + " --data " + kData + " --reps 1") == 2);
}

TEST_CASE("cli: predictions are deterministic and typed errors propagate") {
    const std::string pred = kDir + "/full_pred.csv";
    REQUIRE(run("predict --model " + kModel + " --data " + kData + " --out " + pred) == 0);
    const std::string once = slurp(pred);
    REQUIRE(run("predict --model " + kModel + " --data " + kData + " --out " + pred) == 0);
    REQUIRE(slurp(pred) == once);

    // corrupt archive -> 4
    const std::string broken = kDir + "/broken.slns";
    std::string bytes = slurp(kModel);
    bytes[bytes.size() / 2] ^= 0x10;
    spit(broken, bytes);
    REQUIRE(run("predict --model " + broken + " --data " + kData + " --out " + pred) == 4);

    // malformed csv -> 3
    spit(kDir + "/bad.csv", "f0,severity\nnot_a_number_but_actually_fine,none\n");
    spit(kDir + "/ragged.csv", "f0,f1,severity\n1,none\n");
    REQUIRE(run("predict --model " + kModel + " --data " + kDir + "/ragged.csv --out " + pred) ==
            3);
}

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxverify/corpus.hpp"
#include "support.hpp"

using namespace ctxverify;
using nlohmann::json;
using testsupport::slurp;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(const TempDir& dir, const std::string& args) {
    static int n = 0;
    const std::string out = dir / ("stdout" + std::to_string(n));
    const std::string err = dir / ("stderr" + std::to_string(n++));
    const std::string cmd = std::string(CTXVERIFY_CLI) + " " + args + " > " + out + " 2> " + err;
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string error_kind(const Run& r) {
    const auto nl = r.err.find('\n');
    REQUIRE(nl == r.err.size() - 1);
    return json::parse(r.err).at("error").get<std::string>();
}

// Shared small corpus and registries.
struct Pipeline {
    TempDir dir{"cli"};
    std::string corpus, reg_none, reg_loc;
    Pipeline() {
        auto cfg = json::parse(slurp(fs::path(CTXVERIFY_SOURCE_DIR) / "configs/synthetic_default.json"));
        cfg["images_per_context"] = 60;
        std::ofstream(dir / "small.json") << cfg.dump();
        corpus = dir / "corpus";
        reg_none = dir / "none/reg.json";
        reg_loc = dir / "loc/reg.json";
        REQUIRE(run(dir, "synth --config " + (dir / "small.json") + " -o " + corpus + " --seed 3").code == 0);
        REQUIRE(run(dir, "train " + corpus + " --context none --seed 5 -o " + reg_none).code == 0);
        REQUIRE(run(dir, "train " + corpus + " --context location --min-context-images 20 --seed 5 -o " + reg_loc)
                    .code == 0);
    }
};

Pipeline& pipeline() {
    static Pipeline p;
    return p;
}

}  // namespace

TEST_CASE("usage errors exit 2 with a json line") {
    TempDir d("cli_usage");
    auto r = run(d, "frobnicate");
    CHECK(r.code == 2);
    CHECK(error_kind(r) == "UsageError");
    r = run(d, "synth -o " + (d / "x"));
    CHECK(r.code == 2);  // --seed has no default
    CHECK(error_kind(r) == "UsageError");
    r = run(d, "evaluate a b -o c");
    CHECK(r.code == 2);
    r = run(d, "");
    CHECK(r.code == 2);
}

TEST_CASE("validation errors exit 1 with the error kind") {
    auto& p = pipeline();
    auto r = run(p.dir, "train " + (p.dir / "no_such_corpus") + " --seed 1 -o " + (p.dir / "r.json"));
    CHECK(r.code == 1);
    CHECK(error_kind(r) == "FormatError");

    r = run(p.dir, "train " + p.corpus + " --context colour --seed 1 -o " + (p.dir / "r.json"));
    CHECK(r.code == 1);
    CHECK(error_kind(r) == "SchemaError");

    std::ofstream(p.dir / "broken.json") << "{\"schema_version\": 999, \"kind\": \"verifier_registry\"}";
    const std::string image = load_corpus(p.corpus).image_path(load_corpus(p.corpus).val.front());
    r = run(p.dir, "verify " + (p.dir / "broken.json") + " " + image);
    CHECK(r.code == 1);
    CHECK(error_kind(r) == "VersionError");

    std::ofstream(p.dir / "bad.lgrid") << "2 2\n1 1\n";
    r = run(p.dir, "verify " + p.reg_loc + " " + (p.dir / "bad.lgrid"));
    CHECK(r.code == 1);
    CHECK(error_kind(r) == "FormatError");

    r = run(p.dir, "train " + p.corpus + " --aggregation vote --seed 1 -o " + (p.dir / "r.json"));
    CHECK(r.code == 2);  // not one of the allowed choices
}

TEST_CASE("verify abstains on an empty image") {
    auto& p = pipeline();
    std::ofstream(p.dir / "empty.lgrid") << "3 4\n0 0 0 0\n0 0 0 0\n0 0 0 0\n";
    const auto r = run(p.dir, "verify " + p.reg_loc + " " + (p.dir / "empty.lgrid"));
    CHECK(r.code == 0);
    const auto v = json::parse(r.out);
    CHECK(v.at("contradiction") == false);
    CHECK(v.at("confidence") == 0.5);
    CHECK(v.at("model_used") == "global");
    CHECK(v.at("pair_scores").empty());
}

TEST_CASE("verify routes by the attribute file") {
    auto& p = pipeline();
    const Corpus c = load_corpus(p.corpus);
    const std::string id = c.val.front();
    const std::string ctx = c.attributes.value(id, "location");
    std::ofstream(p.dir / "rec.json") << json{{"location", ctx}}.dump();
    std::ofstream(p.dir / "entry.json") << json{{"image_id", id}, {"attributes", {{"location", ctx}}}}.dump();
    for (const char* f : {"rec.json", "entry.json"}) {
        const auto r = run(p.dir, "verify " + p.reg_loc + " " + c.image_path(id) + " --attributes " + (p.dir / f));
        REQUIRE(r.code == 0);
        CHECK(json::parse(r.out).at("model_used") == ctx);
        CHECK(json::parse(r.out).at("image_id") == id);
    }
}

TEST_CASE("evaluate reports are consistent and byte-identical across runs") {
    auto& p = pipeline();
    const std::string a = p.dir / "eval_a.json", b = p.dir / "eval_b.json", c = p.dir / "eval_c.json";
    REQUIRE(run(p.dir, "evaluate " + p.reg_loc + " " + p.corpus + " --seed 8 --threads 1 -o " + a).code == 0);
    const auto table = run(p.dir, "evaluate " + p.reg_loc + " " + p.corpus + " --seed 8 --threads 4 -o " + b);
    REQUIRE(table.code == 0);
    CHECK(table.out.find("improvement") != std::string::npos);
    CHECK(slurp(a) == slurp(b));
    REQUIRE(run(p.dir, "evaluate " + p.reg_none + " " + p.corpus + " --seed 8 -o " + c).code == 0);

    const auto doc = json::parse(slurp(a));
    CHECK(doc.at("seed") == 8);
    CHECK_FALSE(doc.contains("wall_time_s"));
    auto check_rows = [](const json& rows) {
        for (const auto& m : rows) {
            CHECK(m.at("valid").get<int>() + m.at("invalid").get<int>() == m.at("total").get<int>());
            CHECK(m.at("accuracy").get<double>() ==
                  doctest::Approx(m.at("correct").get<double>() / m.at("total").get<double>()));
        }
    };
    check_rows(doc.at("per_context"));
    check_rows(doc.at("global_per_context"));
    check_rows(json::array({doc.at("global")}));

    // Recount routed and pooled global accuracy from the verdict log.
    std::map<std::string, std::pair<int, int>> routed;
    int global_correct = 0, n = 0;
    for (const auto& e : doc.at("verdict_log")) {
        const bool expected = e.at("example") == "invalid";
        auto& [ok, total] = routed[e.at("model_used").get<std::string>()];
        ok += e.at("contradiction") == expected;
        ++total;
        global_correct += e.at("global_contradiction") == expected;
        ++n;
    }
    CHECK(doc.at("global").at("total") == n);
    CHECK(doc.at("global").at("correct") == global_correct);
    double routed_sum = 0, global_sum = 0;
    const auto& rows = doc.at("per_context");
    REQUIRE(rows.size() == doc.at("global_per_context").size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto label = rows[i].at("label").get<std::string>();
        CHECK(rows[i].at("correct") == routed.at(label).first);
        CHECK(rows[i].at("total") == routed.at(label).second);
        routed_sum += rows[i].at("accuracy").get<double>();
        global_sum += doc.at("global_per_context")[i].at("accuracy").get<double>();
    }
    const double k = static_cast<double>(rows.size());
    CHECK(doc.at("improvement_pp").get<double>() == doctest::Approx((routed_sum - global_sum) / k * 100.0));

    // Without contexts every example is routed to the global model.
    const auto none = json::parse(slurp(c));
    for (const auto& e : none.at("verdict_log")) CHECK(e.at("model_used") == "global");
    CHECK(none.at("global").at("accuracy") == doc.at("global").at("accuracy"));
}

TEST_CASE("every command is repeatable") {
    auto& p = pipeline();
    TempDir d("cli_repeat");
    for (const char* tag : {"1", "2"}) {
        const std::string t(tag);
        REQUIRE(run(d, "synth --config " + (p.dir / "small.json") + " -o " + (d / ("c" + t)) + " --seed 3").code == 0);
        REQUIRE(run(d, "build-stats " + p.corpus + " --context location -o " + (d / ("s" + t))).code == 0);
        REQUIRE(run(d, "select-contexts " + p.corpus + " -o " + (d / ("sel" + t + ".json"))).code == 0);
        REQUIRE(run(d, "gen-contradictions " + p.corpus + " --seed 4 -o " + (d / ("g" + t))).code == 0);
        REQUIRE(run(d, "train " + p.corpus + " --context location --min-context-images 20 --seed 5 -o " +
                           (d / ("r" + t + "/reg.json")))
                    .code == 0);
    }
    for (const char* base : {"c", "s", "g", "r"}) {
        CHECK(testsupport::snapshot_tree(d.path / (std::string(base) + "1")) ==
              testsupport::snapshot_tree(d.path / (std::string(base) + "2")));
    }
    CHECK(slurp(d.path / "sel1.json") == slurp(d.path / "sel2.json"));
    CHECK(testsupport::snapshot_tree(d.path / "c1") == testsupport::snapshot_tree(p.corpus));
    CHECK(testsupport::snapshot_tree(d.path / "r1") == testsupport::snapshot_tree(fs::path(p.reg_loc).parent_path()));

    const auto sel = json::parse(slurp(d.path / "sel1.json"));
    CHECK(sel.at("ranking").at(0) == "location");
    CHECK(fs::exists(d.path / "s1/global.json"));
    CHECK(fs::exists(d.path / "s1/context-inside.json"));
    CHECK(fs::exists(d.path / "s1/context-outside.json"));

    const auto manifest = json::parse(slurp(d.path / "g1/manifest.json"));
    CHECK(manifest.at("pairs").size() + manifest.at("skipped").size() == load_corpus(p.corpus).val.size());
    for (const auto& pair : manifest.at("pairs")) {
        CHECK(fs::exists(d.path / "g1" / pair.at("invalid").get<std::string>()));
        CHECK(fs::exists(d.path / "g1" / pair.at("valid").get<std::string>()));
    }
}

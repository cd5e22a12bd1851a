#include "testing.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stdgn/cli.hpp"
#include "stdgn/dataset_io.hpp"
#include "stdgn/evaluation.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = stdgn::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b, const std::string& skip) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file() || e.path().filename() == skip) continue;
        const auto other = b / fs::relative(e.path(), a);
        if (!fs::exists(other) || bytes(e.path()) != bytes(other)) return false;
        ++n;
    }
    return n > 0;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    const auto r = invoke({"gen-data", "--out", "x", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--bogus") != std::string::npos);
    CHECK(invoke({"evaluate", "--data", "d"}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit with 2") {
    const auto r = invoke({"pretrain-baseline", "--data", "/nonexistent/data", "--out",
                           (fs::temp_directory_path() / "stdgn_cli_fail").string()});
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("gen-data is byte-reproducible and echoes its config") {
    const auto root = fs::temp_directory_path() / "stdgn_cli_gen";
    fs::remove_all(root);
    const std::vector<std::string> common{"--seed", "7", "--image-size", "32", "--subjects", "2", "--test-subjects", "1"};
    auto a = std::vector<std::string>{"gen-data", "--out", (root / "a").string()};
    auto b = std::vector<std::string>{"gen-data", "--out", (root / "b").string()};
    a.insert(a.end(), common.begin(), common.end());
    b.insert(b.end(), common.begin(), common.end());
    REQUIRE(invoke(a).code == 0);
    REQUIRE(invoke(b).code == 0);
    CHECK(same_tree(root / "a", root / "b", "resolved_config.cfg"));

    // The echo alone regenerates the same data.
    const auto echo = root / "a" / "resolved_config.cfg";
    REQUIRE(fs::exists(echo));
    REQUIRE(invoke({"gen-data", "--config", echo.string(), "--out", (root / "c").string()}).code == 0);
    CHECK(same_tree(root / "a", root / "c", "resolved_config.cfg"));

    // STDGN_SEED fills in a missing seed.
    setenv("STDGN_SEED", "7", 1);
    REQUIRE(invoke({"gen-data", "--out", (root / "e").string(), "--image-size", "32", "--subjects", "2",
                    "--test-subjects", "1"})
                .code == 0);
    unsetenv("STDGN_SEED");
    CHECK(same_tree(root / "a", root / "e", "resolved_config.cfg"));
    fs::remove_all(root);
}

TEST_CASE("train, evaluate, segment, translate, report") {
    const auto root = fs::temp_directory_path() / "stdgn_cli_pipeline";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto data = (root / "d").string();
    REQUIRE(invoke({"gen-data", "--seed", "3", "--out", data, "--image-size", "32", "--subjects", "2",
                    "--test-subjects", "1", "--slices", "3"})
                .code == 0);
    {
        std::ofstream cfg(root / "c.cfg");
        cfg << "image_size = 32\nbase_width = 8\ndisc_base_width = 8\nsrn_base_width = 8\n"
               "batch_size = 4\ntotal_iterations = 3\nbaseline_iterations = 3\nsrn_epochs = 1\nval_every = 0\n";
    }
    const auto run1 = (root / "run1").string();
    const auto tr = invoke({"train", "--config", (root / "c.cfg").string(), "--data", data, "--out", run1});
    REQUIRE_MESSAGE(tr.code == 0, tr.err);
    CHECK(fs::exists(root / "run1" / "final.ckpt"));
    CHECK(fs::exists(root / "run1" / "metrics.csv"));
    const auto echoed = bytes(root / "run1" / "resolved_config.cfg");
    CHECK(echoed.find("total_iterations = 3") != std::string::npos);

    // Flags override the file.
    const auto tr2 = invoke({"train", "--config", (root / "c.cfg").string(), "--iterations", "2", "--data", data,
                             "--out", (root / "run2").string(), "--baseline", run1 + "/baseline.ckpt", "--srn",
                             run1 + "/srn.ckpt"});
    REQUIRE_MESSAGE(tr2.code == 0, tr2.err);
    CHECK(bytes(root / "run2" / "resolved_config.cfg").find("total_iterations = 2") != std::string::npos);

    const auto ev_out = (root / "eval").string();
    const auto ev = invoke({"evaluate", "--model", run1 + "/final.ckpt", "--data", data, "--split", "test", "--out", ev_out});
    REQUIRE_MESSAGE(ev.code == 0, ev.err);
    const auto records = stdgn::records_from_csv(bytes(root / "eval" / "records.csv"));
    // (3 source test subjects + 2 held-out subjects) x 2 phases x 3 structures
    CHECK(records.size() == 30);

    const auto sg = invoke({"segment", "--model", run1 + "/baseline.ckpt", "--data", data, "--out",
                            (root / "seg").string(), "--overlays"});
    REQUIRE_MESSAGE(sg.code == 0, sg.err);
    CHECK(fs::exists(root / "seg" / "predictions.csv"));

    const auto ds = stdgn::load_dataset(data);
    stdgn::write_float_image(root / "s.img", ds.records[0].image.pixels);
    const auto tl = invoke({"translate", "--model", run1 + "/final.ckpt", "--image", (root / "s.img").string(),
                            "--target", "2", "--out", (root / "tl").string()});
    REQUIRE_MESSAGE(tl.code == 0, tl.err);
    CHECK(fs::file_size(root / "tl" / "s_to2.img") == fs::file_size(root / "s.img"));
    CHECK(invoke({"translate", "--model", run1 + "/final.ckpt", "--image", (root / "s.img").string(), "--target",
                  "9", "--out", (root / "tl").string()})
              .code == 1);

    const auto rp = invoke({"report", "--records", (root / "eval" / "records.csv").string(), "--group-by",
                            "vendor,structure", "--out", (root / "rep").string()});
    REQUIRE_MESSAGE(rp.code == 0, rp.err);
    CHECK(rp.out.rfind("vendor,structure,n,", 0) == 0);
    CHECK(invoke({"report", "--records", (root / "eval" / "records.csv").string(), "--group-by", "colour"}).code == 1);
    fs::remove_all(root);
}

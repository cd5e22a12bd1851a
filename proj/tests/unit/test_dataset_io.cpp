#include "testing.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "stdgn/dataset_io.hpp"
#include "stdgn/phantom.hpp"

using namespace stdgn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("stdgn_io_" + name);
    fs::remove_all(p);
    return p;
}

DomainDataset sample() {
    auto p = benchmark_phantom_params(6, 32);
    p.num_subjects_per_domain = 2;
    p.num_test_subjects_per_domain = 1;
    p.num_slices = 3;
    return generate_phantom_dataset(p);
}

}  // namespace

TEST_CASE("save/load round trip") {
    const auto ds = sample();
    const auto dir = fresh_dir("roundtrip");
    const auto manifest = save_dataset(ds, dir);
    CHECK(fs::exists(manifest));
    CHECK(load_dataset(dir) == ds);
    CHECK(load_dataset(manifest) == ds);
    fs::remove_all(dir);
}

TEST_CASE("missing slice file names the file") {
    const auto dir = fresh_dir("missing");
    save_dataset(sample(), dir);
    const auto victim = *fs::directory_iterator(dir / "slices");
    const std::string name = victim.path().filename().string();
    fs::remove(victim.path());
    try {
        load_dataset(dir);
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find(name) != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("label file with class 7 is rejected") {
    const auto dir = fresh_dir("badlabel");
    save_dataset(sample(), dir);
    fs::path lab;
    for (const auto& e : fs::directory_iterator(dir / "slices")) {
        if (e.path().extension() == ".lab") lab = e.path();
    }
    REQUIRE(!lab.empty());
    {
        std::fstream f(lab, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        const char seven = 7;
        f.write(&seven, 1);
    }
    CHECK_THROWS_AS(load_dataset(dir), LoadError);
    fs::remove_all(dir);
}

TEST_CASE("truncated image and malformed manifest") {
    const auto dir = fresh_dir("truncated");
    save_dataset(sample(), dir);
    fs::path img;
    for (const auto& e : fs::directory_iterator(dir / "slices")) {
        if (e.path().extension() == ".img") img = e.path();
    }
    fs::resize_file(img, 10);
    CHECK_THROWS_AS(load_dataset(dir), LoadError);

    std::ofstream(dir / "manifest.json") << "{ not json";
    CHECK_THROWS(load_dataset(dir));
    fs::remove_all(dir);
}

TEST_CASE("single image helpers") {
    const auto dir = fresh_dir("single");
    fs::create_directories(dir);
    ImageF img(3, 2);
    img.data = {1.5F, -2.0F, 0.0F, 3.25F, 7.0F, -0.5F};
    write_float_image(dir / "x.img", img);
    CHECK(fs::file_size(dir / "x.img") == 24);
    CHECK(read_float_image(dir / "x.img", 3, 2) == img);
    CHECK_THROWS(read_float_image(dir / "x.img", 4, 4));
    ClassMap m(2, 2);
    m.data = {0, 1, 2, 3};
    write_class_map(dir / "x.lab", m);
    CHECK(read_class_map(dir / "x.lab", 2, 2) == m);
    fs::remove_all(dir);
}

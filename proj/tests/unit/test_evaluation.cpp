#include "testing.hpp"

#include <filesystem>

#include "stdgn/evaluation.hpp"
#include "stdgn/phantom.hpp"

using namespace stdgn;

namespace {

ClassMap mask(int h, int w, std::initializer_list<std::pair<int, int>> on) {
    ClassMap m(h, w, 0);
    for (auto [r, c] : on) m(r, c) = 1;
    return m;
}

/// Always predicts the gold label of the records it was built with.
class OracleSegmenter : public Segmenter {
public:
    OracleSegmenter(const DomainDataset& ds, int size) : ds_(ds), size_(size) {}
    torch::Tensor logits(const torch::Tensor& images) override {
        auto out = torch::zeros({images.size(0), kNumClasses, size_, size_});
        for (long b = 0; b < images.size(0); ++b) {
            // Match the record by its pixels.
            for (const auto& r : ds_.records) {
                const auto px = torch::from_blob(const_cast<float*>(r.image.pixels.data.data()), {size_, size_});
                if (!r.label.is_labeled || !torch::equal(px, images[b][0])) continue;
                for (int y = 0; y < size_; ++y)
                    for (int x = 0; x < size_; ++x) out[b][r.label.classes(y, x)][y][x] = 1.0F;
                break;
            }
        }
        return out;
    }
    [[nodiscard]] int image_size() const override { return size_; }
    [[nodiscard]] std::string method() const override { return "oracle"; }

private:
    const DomainDataset& ds_;
    int size_;
};

}  // namespace

TEST_CASE("dice fixtures") {
    const auto a = mask(3, 3, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const auto b = mask(3, 3, {{0, 1}, {1, 1}, {0, 2}, {1, 2}});
    CHECK(dice(a, a) == 1.0);
    CHECK(dice(a, mask(3, 3, {{2, 2}})) == 0.0);
    CHECK(dice(a, b) == 0.5);
    CHECK(dice(ClassMap(3, 3), ClassMap(3, 3)) == 1.0);
    CHECK_THROWS(dice(a, ClassMap(2, 2)));
}

TEST_CASE("hausdorff fixtures") {
    const auto p = mask(4, 5, {{0, 0}}), q = mask(4, 5, {{3, 4}});
    CHECK(hausdorff(p, p) == 0.0);
    CHECK(hausdorff(p, q) == 5.0);
    CHECK(hausdorff(q, p) == 5.0);
    CHECK(hausdorff(p, q, 2.0) == 10.0);
    CHECK_FALSE(hausdorff(p, ClassMap(4, 5)).has_value());
    // Interior pixels do not count: a filled 3x3 block's boundary excludes the centre.
    const auto block = mask(5, 5, {{1, 1}, {1, 2}, {1, 3}, {2, 1}, {2, 2}, {2, 3}, {3, 1}, {3, 2}, {3, 3}});
    CHECK(boundary(block)(2, 2) == 0);
    CHECK(boundary(block)(1, 1) == 1);
    CHECK(hausdorff(block, mask(5, 5, {{2, 2}})) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("binary_mask") {
    ClassMap m(1, 4);
    m.data = {0, 1, 2, 3};
    CHECK((binary_mask(m, Structure::Myo).data == std::vector<std::uint8_t>{0, 0, 1, 0}));
}

TEST_CASE("report statistics") {
    std::vector<EvalRecord> recs{
        {"U-Net", "s1", "A", "1", CardiacPhase::ED, Structure::LV, 0.8, 4.0},
        {"U-Net", "s2", "A", "1", CardiacPhase::ES, Structure::LV, 0.6, 6.0},
        {"STDGN", "s1", "A", "1", CardiacPhase::ED, Structure::LV, 0.9, std::nullopt},
    };
    const auto global = report(recs, {});
    REQUIRE(global.rows.size() == 1);
    CHECK(global.rows[0].dice_mean == doctest::Approx((0.8 + 0.6 + 0.9) / 3));
    CHECK(global.rows[0].hd_count == 2);
    CHECK(global.rows[0].hd_undefined == 1);

    const auto by = report(recs, {GroupKey::Method, GroupKey::Phase});
    REQUIRE(by.rows.size() == 3);
    CHECK((by.rows[0].key_values == std::vector<std::string>{"STDGN", "ED"}));
    CHECK((by.rows[2].key_values == std::vector<std::string>{"U-Net", "ES"}));

    std::vector<EvalRecord> twins{recs[0], recs[0]};
    twins[1].subject_id = "s9";
    CHECK(report(twins, {GroupKey::Method}).rows[0].dice_std == 0.0);
    CHECK(report(recs, {GroupKey::Method}).to_csv().rfind("method,n,dice_mean", 0) == 0);
}

TEST_CASE("records CSV round trip") {
    std::vector<EvalRecord> recs{
        {"U-Net", "s1", "A", "1", CardiacPhase::ED, Structure::RV, 0.123456789012345, 2.5},
        {"STDGN", "s2", "B", "2", CardiacPhase::ES, Structure::Myo, 1.0 / 3.0, std::nullopt},
    };
    CHECK((records_from_csv(records_to_csv(recs)) == recs));
    CHECK_THROWS(records_from_csv("method,subject_id\nU-Net,s1\n"));
    CHECK(parse_group_key("vendor") == GroupKey::Vendor);
    CHECK_THROWS(parse_group_key("colour"));
}

TEST_CASE("evaluate_dataset with a perfect segmenter") {
    auto p = benchmark_phantom_params(4, 32);
    p.num_subjects_per_domain = 2;
    p.num_test_subjects_per_domain = 1;
    p.num_slices = 3;
    const auto ds = generate_phantom_dataset(p);
    OracleSegmenter seg(ds, 32);
    const auto idx = ds.select(Split::Test, false, true);
    const auto recs = evaluate_dataset(seg, ds, idx);
    // 3 source test subjects plus both held-out subjects, x 2 phases x 3 structures
    CHECK(recs.size() == 5 * 2 * 3);
    for (const auto& r : recs) {
        CHECK(r.dice == 1.0);
        if (r.hd) CHECK(*r.hd == 0.0);
        CHECK(r.method == "oracle");
    }
    const auto d = mean_dice_by_structure(recs);
    CHECK(d[0] == 1.0);
    CHECK((evaluate_dataset(seg, ds, idx) == recs));
}

TEST_CASE("overlay writer") {
    const auto path = std::filesystem::temp_directory_path() / "stdgn_overlay.pgm";
    ImageF img(4, 4, 0.5F);
    ClassMap pred(4, 4, 0);
    pred(1, 1) = 1;
    write_overlay_pgm(path, img, pred);
    CHECK(std::filesystem::file_size(path) > 16);
    CHECK(read_text(path).rfind("P5", 0) == 0);
    std::filesystem::remove(path);
}

#include "testing.hpp"

#include <cmath>
#include <random>

#include "stdgn/data_pipeline.hpp"

using namespace stdgn;

namespace {

ImageF row_image(std::vector<float> v) {
    ImageF img(1, static_cast<int>(v.size()));
    img.data = std::move(v);
    return img;
}

}  // namespace

TEST_CASE("zscore_normalize uses the population std") {
    const auto out = zscore_normalize(row_image({1, 2, 3}));
    CHECK(out.data[0] == doctest::Approx(-1.2247449).epsilon(1e-6));
    CHECK(out.data[1] == doctest::Approx(0.0));
    CHECK(out.data[2] == doctest::Approx(1.2247449).epsilon(1e-6));
}

TEST_CASE("zscore_normalize maps constants to zeros and is idempotent") {
    const auto zeros = zscore_normalize(row_image({5, 5, 5, 5}));
    for (float v : zeros.data) CHECK(v == 0.0F);

    std::mt19937_64 rng(1);
    std::normal_distribution<float> n(3.0F, 2.0F);
    ImageF img(16, 16);
    for (auto& v : img.data) v = n(rng);
    const auto once = zscore_normalize(img);
    double mean = 0, var = 0;
    for (float v : once.data) mean += v;
    mean /= once.size();
    for (float v : once.data) var += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-4);
    CHECK(std::abs(std::sqrt(var / once.size()) - 1.0) < 1e-3);
    const auto twice = zscore_normalize(once);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice.data[i] == doctest::Approx(once.data[i]).epsilon(1e-6));
}

TEST_CASE("center_crop index arithmetic and padding") {
    ImageF big(200, 200);
    for (int r = 0; r < 200; ++r)
        for (int c = 0; c < 200; ++c) big(r, c) = static_cast<float>(r * 1000 + c);
    const auto crop = center_crop(big, 144, {100, 100});
    REQUIRE(crop.height == 144);
    CHECK(crop(0, 0) == big(28, 28));
    CHECK(crop(143, 143) == big(171, 171));

    ImageF same(144, 144);
    for (std::size_t i = 0; i < same.size(); ++i) same.data[i] = static_cast<float>(i);
    CHECK(center_crop(same, 144, {72, 72}) == same);

    ImageF small(100, 100, 2.0F);
    small(50, 50) = 9.0F;
    const auto padded = center_crop(small, 144, {50, 50});
    CHECK(padded.height == 144);
    CHECK(padded.width == 144);
    CHECK(padded(0, 0) == 2.0F);
    CHECK(padded(72, 72) == 9.0F);
}

TEST_CASE("preprocess_record crops labels with the image") {
    SliceRecord r;
    r.image.pixels = ImageF(80, 80, 1.0F);
    r.label.is_labeled = true;
    r.label.classes = ClassMap(80, 80, 0);
    for (int y = 30; y < 40; ++y)
        for (int x = 50; x < 60; ++x) {
            r.label.classes(y, x) = 1;
            r.image.pixels(y, x) = 5.0F;
        }
    preprocess_record(r, 32);
    CHECK(r.image.pixels.height == 32);
    CHECK(r.label.classes.height == 32);
    // The labeled block sits around the crop centre.
    CHECK(r.label.classes(16, 16) == 1);
    for (std::size_t i = 0; i < r.label.classes.size(); ++i) {
        CHECK((r.label.classes.data[i] == 1) == (r.image.pixels.data[i] > 0.0F));
    }
}

TEST_CASE("slice_position") {
    CHECK(slice_position(0, 7) == -1.0);
    CHECK(slice_position(3, 7) == 0.0);
    CHECK(slice_position(6, 7) == 1.0);
    CHECK(slice_position(0, 1) == 0.0);
}

TEST_CASE("encode_modality") {
    CHECK((encode_modality(0, 4).code == std::vector<float>{1, 0, 0, 0}));
    CHECK((encode_modality(3, 4).code == std::vector<float>{0, 0, 0, 1}));
    CHECK_THROWS(encode_modality(4, 4));
    CHECK_THROWS(encode_modality(-1, 4));
}

TEST_CASE("sample_target_modality is uniform, honours exclusion and is reproducible") {
    std::mt19937_64 rng(7);
    std::array<int, 4> freq{};
    for (int i = 0; i < 10000; ++i) {
        const auto v = sample_target_modality(rng, 4);
        REQUIRE(v.is_one_hot());
        ++freq[v.argmax()];
    }
    double chi2 = 0;
    for (int f : freq) {
        CHECK(std::abs(f / 10000.0 - 0.25) < 0.02);
        chi2 += (f - 2500.0) * (f - 2500.0) / 2500.0;
    }
    CHECK(chi2 < 16.27);  // chi-square 3 dof, p = 0.001

    std::mt19937_64 r2(8);
    for (int i = 0; i < 10000; ++i) CHECK(sample_target_modality(r2, 4, 2).argmax() != 2);

    std::mt19937_64 a(9), b(9);
    for (int i = 0; i < 50; ++i) CHECK(sample_target_modality(a, 4) == sample_target_modality(b, 4));
}

TEST_CASE("soft targets sum to one") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto v = sample_target_modality(rng, 5, std::nullopt, TargetPolicy::Soft, 0.5);
        double s = 0;
        for (float x : v.code) {
            CHECK(x >= 0.0F);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("modality_difference") {
    const auto a = encode_modality(0, 4), b = encode_modality(1, 4);
    const auto d = modality_difference(a, b);
    CHECK((d.diff == std::vector<float>{-1, 1, 0, 0}));
    CHECK((modality_difference(a, a).diff == std::vector<float>{0, 0, 0, 0}));
    CHECK(modality_difference(b, a) == -d);
    float s = 0;
    for (float x : d.diff) s += x;
    CHECK(s == 0.0F);
    CHECK_THROWS(modality_difference(a, encode_modality(0, 3)));
}

TEST_CASE("broadcast_concat") {
    ImageSlice s;
    s.pixels = ImageF(2, 2);
    s.pixels.data = {1, 2, 3, 4};
    const auto t = broadcast_concat(s, ModalityDiff{{-1, 1, 0, 0}});
    REQUIRE(t.sizes() == torch::IntArrayRef({5, 2, 2}));
    CHECK(torch::equal(t[0], torch::tensor({1.0F, 2.0F, 3.0F, 4.0F}).view({2, 2})));
    const float expect[] = {-1, 1, 0, 0};
    for (int k = 0; k < 4; ++k) CHECK(torch::equal(t[k + 1], torch::full({2, 2}, expect[k])));

    for (int K : {2, 3, 7}) {
        const auto bt = broadcast_concat(torch::randn({3, 1, 4, 4}), torch::zeros({3, K}));
        CHECK(bt.size(1) == 1 + K);
        CHECK(bt.slice(1, 1).abs().sum().item<float>() == 0.0F);
    }
}

TEST_CASE("DomainDataset validation and selection") {
    DomainDataset ds;
    ds.domains = {{"A", "1", true, false}, {"C", "4", false, false}, {"D", "5", true, true}};
    CHECK(ds.num_source_domains() == 2);
    CHECK(ds.modality_dim() == 3);
    auto rec = [](int domain, Split split, bool labeled) {
        SliceRecord r;
        r.image.pixels = ImageF(4, 4);
        r.image.subject_id = "s" + std::to_string(domain);
        r.domain_index = domain;
        r.split = split;
        r.label.is_labeled = labeled;
        if (labeled) r.label.classes = ClassMap(4, 4);
        return r;
    };
    ds.records = {rec(0, Split::Train, true), rec(1, Split::Train, false), rec(2, Split::Test, true)};
    CHECK_NOTHROW(ds.validate());
    CHECK(ds.select(Split::Train, true, false).size() == 2);
    CHECK(ds.select(Split::Train, true, true).size() == 1);
    CHECK(ds.select(Split::Test, true, false).empty());
    CHECK(ds.select(Split::Test, false, false).size() == 1);

    auto bad = ds;
    bad.records[1].label.is_labeled = true;
    bad.records[1].label.classes = ClassMap(4, 4);
    CHECK_THROWS(bad.validate());
    bad = ds;
    bad.records[2].split = Split::Train;
    CHECK_THROWS(bad.validate());
    bad = ds;
    std::swap(bad.domains[1], bad.domains[2]);
    CHECK_THROWS(bad.validate());
}

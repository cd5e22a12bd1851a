#include "testing.hpp"

#include <cmath>

#include "oracles.hpp"
#include "stdgn/losses.hpp"

using namespace stdgn;

namespace {

torch::Tensor scalar(double v) { return torch::tensor(v, torch::kDouble); }

Critic pick_pixel(double scale) {
    return [scale](const torch::Tensor& x) { return scale * x.flatten(1).select(1, 0); };
}

}  // namespace

TEST_CASE("gradient penalty hand cases") {
    const auto real = torch::randn({4, 1, 3, 3}), fake = torch::randn({4, 1, 3, 3});
    auto g = at::make_generator<at::CPUGeneratorImpl>(0);
    CHECK(gradient_penalty(pick_pixel(1), real, fake, g).item<double>() == 0.0);
    CHECK(gradient_penalty(pick_pixel(2), real, fake, g).item<double>() == doctest::Approx(1.0));
    const Critic constant = [](const torch::Tensor& x) { return x.sum({1, 2, 3}) * 0 + 3.0; };
    CHECK(gradient_penalty(constant, real, fake, g).item<double>() == 1.0);
    const Critic detached = [](const torch::Tensor& x) { return x.detach().sum({1, 2, 3}); };
    CHECK_THROWS(gradient_penalty(detached, real, fake, g));
}

TEST_CASE("adv_loss_D and adv_loss_G hand cases") {
    auto g = at::make_generator<at::CPUGeneratorImpl>(1);
    const Critic zero = [](const torch::Tensor& x) { return x.flatten(1).sum(1) * 0.0; };
    const auto x = torch::randn({2, 1, 2, 2});
    CHECK(adv_loss_D(zero, x, x, 10.0, g).value.item<double>() == doctest::Approx(-10.0));

    const auto real = torch::full({1, 1, 2, 2}, 3.0F), fake = torch::full({1, 1, 2, 2}, 1.0F);
    const auto t = adv_loss_D(pick_pixel(1), real, fake, 10.0, g);
    CHECK(t.value.item<double>() == doctest::Approx(2.0));
    const auto swapped = adv_loss_D(pick_pixel(1), fake, real, 0.0, g);
    CHECK(swapped.value.item<double>() == doctest::Approx(-2.0));

    const Critic c5 = [](const torch::Tensor& x) { return x.flatten(1).sum(1) * 0.0 + 5.0; };
    CHECK(adv_loss_G(c5, fake).item<double>() == doctest::Approx(5.0));
    auto two = torch::zeros({2, 1, 2, 2});
    two[0][0][0][0] = 1.0F;
    two[1][0][0][0] = 3.0F;
    CHECK(adv_loss_G(pick_pixel(1), two).item<double>() == doctest::Approx(2.0));
    const Critic flat = [](const torch::Tensor& x) { return x.flatten(1).sum(1) * 0.0; };
    const auto no_real = adv_loss_D(pick_pixel(1), torch::zeros({2, 1, 2, 2}), two, 0.0, g);
    CHECK(no_real.value.item<double>() == doctest::Approx(-adv_loss_G(pick_pixel(1), two).item<double>()));
}

TEST_CASE("cls_loss hand cases") {
    const auto onehot = torch::tensor({0.0F, 0.0F, 1.0F, 0.0F}).view({1, 4});
    CHECK(cls_loss(torch::zeros({1, 4}), onehot).item<double>() == doctest::Approx(std::log(4.0)));
    CHECK(cls_loss(onehot * 1e6, onehot).item<double>() == doctest::Approx(0.0));
    const auto z = torch::randn({3, 4});
    const auto t = torch::eye(4).slice(0, 0, 3);
    const auto perm = torch::tensor({2, 0, 3, 1}, torch::kLong);
    CHECK(cls_loss(z, t).item<double>() ==
          doctest::Approx(cls_loss(z.index_select(1, perm), t.index_select(1, perm)).item<double>()));
    CHECK_THROWS(cls_loss(z, torch::full({3, 4}, 0.25F)));
    CHECK_NOTHROW(cls_loss(z, torch::full({3, 4}, 0.25F), true));
    CHECK_THROWS(cls_loss(z, torch::zeros({3, 5})));
}

TEST_CASE("cycle, SR, SC hand cases") {
    const auto x = torch::randn({2, 1, 2, 2});
    CHECK(cycle_image_loss(x, x).item<double>() == 0.0);
    CHECK(cycle_image_loss(x, x + 1).item<double>() == doctest::Approx(1.0));
    const auto y = torch::randn({2, 1, 2, 2});
    CHECK(cycle_image_loss(x, y).item<double>() == cycle_image_loss(y, x).item<double>());

    const auto mask = torch::ones({1}, torch::kBool);
    const auto r = torch::rand({1, 4, 2, 2});
    CHECK(sr_loss(r, r, mask).item<double>() == 0.0);
    CHECK(sr_loss(torch::ones({1, 1, 1, 1}), torch::full({1, 1, 1, 1}, 3.0F), mask).item<double>() == 4.0);
    CHECK(sr_loss(r, r + 5, torch::zeros({1}, torch::kBool)).item<double>() == 0.0);

    CHECK(sc_loss(torch::tensor({0.3F}), torch::tensor({0.3F})).item<double>() == 0.0);
    CHECK(sc_loss(torch::tensor({0.5F}), torch::tensor({-0.5F})).item<double>() == doctest::Approx(1.0));
}

TEST_CASE("cross_entropy_seg hand cases and masking") {
    const auto labels = torch::randint(0, 4, {2, 3, 3}, torch::kLong);
    const auto all = torch::ones({2}, torch::kBool);
    CHECK(cross_entropy_seg(torch::zeros({2, 4, 3, 3}), labels, all).item<double>() == doctest::Approx(std::log(4.0)));
    const auto saturated = torch::one_hot(labels, 4).permute({0, 3, 1, 2}).to(torch::kFloat) * 1e6;
    CHECK(cross_entropy_seg(saturated, labels, all).item<double>() == doctest::Approx(0.0));
    // Identical per-pixel losses: masking half the batch leaves the value unchanged.
    const auto half = torch::tensor({true, false});
    CHECK(cross_entropy_seg(torch::zeros({2, 4, 3, 3}), labels, half).item<double>() ==
          doctest::Approx(std::log(4.0)));
    CHECK(cross_entropy_seg(torch::randn({2, 4, 3, 3}), labels, torch::zeros({2}, torch::kBool)).item<double>() == 0.0);
}

TEST_CASE("scalar-loop oracles agree on random inputs") {
    torch::manual_seed(7);
    const auto z = torch::randn({3, 4}, torch::kDouble);
    const auto t = torch::softmax(torch::randn({3, 4}, torch::kDouble), 1);
    CHECK(cls_loss(z, t, true).item<double>() ==
          doctest::Approx(oracle::cls_loss(oracle::values(z), oracle::values(t), 3, 4)).epsilon(1e-12));

    const auto logits = torch::randn({3, 4, 2, 2}, torch::kDouble);
    const auto labels = torch::randint(0, 4, {3, 2, 2}, torch::kLong);
    const std::vector<std::int64_t> lab(labels.data_ptr<std::int64_t>(), labels.data_ptr<std::int64_t>() + 12);
    CHECK(cross_entropy_seg(logits, labels, torch::tensor({true, false, true})).item<double>() ==
          doctest::Approx(oracle::ce_seg(oracle::values(logits), lab, {true, false, true}, 3, 4, 2, 2)).epsilon(1e-12));
}

TEST_CASE("combined objectives") {
    LossWeights w;
    CHECK(combine_seg_loss(scalar(0), scalar(0), scalar(0), w).item<double>() == 0.0);
    CHECK(combine_seg_loss(scalar(1), scalar(2), scalar(3), w).item<double>() == 204.0);
    LossWeights plain = w;
    plain.sr = 0;
    plain.sc = 0;
    CHECK(combine_seg_loss(scalar(1.5), scalar(2), scalar(3), plain).item<double>() == 1.5);

    const GeneratorLossParts zero{scalar(0), scalar(0), scalar(0), scalar(0), scalar(0)};
    CHECK(total_loss_G(zero, w).item<double>() == 0.0);
    const GeneratorLossParts parts{scalar(2), scalar(1), scalar(0.5), scalar(0.1), scalar(0.1)};
    CHECK(total_loss_G(parts, w).item<double>() == doctest::Approx(78.0));
    const double base = total_loss_G(parts, w).item<double>();
    for (double LossWeights::*field : {&LossWeights::cls, &LossWeights::rec_img, &LossWeights::seg, &LossWeights::rec_lab}) {
        LossWeights more = w;
        more.*field += 1.0;
        CHECK(total_loss_G(parts, more).item<double>() > base);
    }
    CHECK(total_loss_D({scalar(1.0), scalar(0.5)}, w).item<double>() == doctest::Approx(4.0));

    LossWeights bad;
    bad.seg = -1;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("finite differences on the segmentation terms") {
    torch::manual_seed(8);
    const auto labels = torch::randint(0, 4, {2, 3, 3}, torch::kLong);
    const auto mask = torch::tensor({true, true});
    CHECK(oracle::gradient_check([&](const torch::Tensor& z) { return cross_entropy_seg(z, labels, mask); },
                                 torch::randn({2, 4, 3, 3}, torch::kDouble)) < 1e-6);
    const auto gold = torch::rand({2, 4, 3, 3}, torch::kDouble);
    CHECK(oracle::gradient_check([&](const torch::Tensor& r) { return sr_loss(gold, r, mask); },
                                 torch::rand({2, 4, 3, 3}, torch::kDouble)) < 1e-6);
}

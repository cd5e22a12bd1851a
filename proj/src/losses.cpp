#include "stdgn/losses.hpp"

#include <stdexcept>

namespace stdgn {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
    for (double w : {gp, cls, seg, rec_img, rec_lab, sr, sc}) {
        if (!(w >= 0.0)) throw std::invalid_argument("loss weights must be nonnegative");
    }
}

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* who) {
    if (!a.sizes().equals(b.sizes())) {
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
    }
}

torch::Tensor masked_mean(const torch::Tensor& per_element, const torch::Tensor& label_mask) {
    const auto mask = label_mask.to(per_element.dtype());
    const auto count = mask.sum();
    if (count.item<double>() == 0.0) return torch::zeros({}, per_element.options());
    return (per_element * mask).sum() / count;
}

}  // namespace

torch::Tensor gradient_penalty_at(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                                  const torch::Tensor& eps) {
    require_same_shape(x_real, x_fake, "gradient_penalty");
    std::vector<long> eps_shape(static_cast<std::size_t>(x_real.dim()), 1);
    eps_shape[0] = x_real.size(0);
    const auto e = eps.to(x_real.dtype()).view(eps_shape);
    auto x_hat = e * x_real + (1 - e) * x_fake;
    if (!x_hat.requires_grad()) x_hat.requires_grad_(true);
    const auto scores = critic(x_hat);
    if (!scores.requires_grad()) {
        throw std::invalid_argument("gradient_penalty: critic output is not differentiable w.r.t. its input");
    }
    auto grads = torch::autograd::grad({scores.sum()}, {x_hat}, {}, /*retain_graph=*/true, /*create_graph=*/true,
                                       /*allow_unused=*/true)[0];
    if (!grads.defined()) grads = torch::zeros_like(x_hat);
    const auto norms = grads.flatten(1).norm(2, 1);
    return (norms - 1).pow(2).mean();
}

torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                               at::Generator& rng) {
    const auto eps = torch::rand({x_real.size(0)}, rng, torch::TensorOptions().dtype(x_real.dtype()));
    return gradient_penalty_at(critic, x_real, x_fake, eps);
}

AdversarialTerms adv_loss_D(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                            double lambda_gp, at::Generator& rng) {
    AdversarialTerms t;
    t.real_mean = critic(x_real).mean();
    t.fake_mean = critic(x_fake).mean();
    t.penalty = lambda_gp > 0.0 ? gradient_penalty(critic, x_real, x_fake, rng) : torch::zeros({}, x_real.options());
    t.value = t.real_mean - t.fake_mean - lambda_gp * t.penalty;
    return t;
}

torch::Tensor adv_loss_G(const Critic& critic, const torch::Tensor& x_fake) { return critic(x_fake).mean(); }

torch::Tensor cls_loss(const torch::Tensor& cls_logits, const torch::Tensor& targets, bool soft_targets) {
    if (cls_logits.dim() != 2 || !cls_logits.sizes().equals(targets.sizes())) {
        throw std::invalid_argument("cls_loss: logits and targets must both be [B,K]");
    }
    const auto log_p = F::log_softmax(cls_logits, F::LogSoftmaxFuncOptions(1));
    const auto t = targets.to(log_p.dtype());
    if (!soft_targets) {
        const bool binary = ((t == 0) | (t == 1)).all().item<bool>();
        const bool single = (t.sum(1) == 1).all().item<bool>();
        if (!binary || !single) throw std::invalid_argument("cls_loss: targets must be one-hot");
    }
    return -(t * log_p).sum(1).mean();
}

torch::Tensor cycle_image_loss(const torch::Tensor& x, const torch::Tensor& x_rec) {
    require_same_shape(x, x_rec, "cycle_image_loss");
    return (x - x_rec).abs().mean();
}

torch::Tensor sr_loss(const torch::Tensor& r_gold, const torch::Tensor& r_pred, const torch::Tensor& label_mask) {
    require_same_shape(r_gold, r_pred, "sr_loss");
    const auto per_element = (r_gold - r_pred).pow(2).flatten(1).mean(1);
    return masked_mean(per_element, label_mask);
}

torch::Tensor sc_loss(const torch::Tensor& positions, const torch::Tensor& predicted) {
    require_same_shape(positions, predicted, "sc_loss");
    return (positions.to(predicted.dtype()) - predicted).pow(2).mean();
}

torch::Tensor cross_entropy_seg(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& label_mask) {
    if (logits.dim() != 4 || labels.dim() != 3 || logits.size(0) != labels.size(0) ||
        logits.size(2) != labels.size(1) || logits.size(3) != labels.size(2)) {
        throw std::invalid_argument("cross_entropy_seg: logits [B,C,H,W] and labels [B,H,W] disagree");
    }
    const auto per_pixel = F::cross_entropy(logits, labels, F::CrossEntropyFuncOptions().reduction(torch::kNone));
    return masked_mean(per_pixel.flatten(1).mean(1), label_mask);
}

torch::Tensor combine_seg_loss(const torch::Tensor& cr, const torch::Tensor& sr, const torch::Tensor& sc,
                               const LossWeights& weights) {
    return cr + weights.sr * sr + weights.sc * sc;
}

SegLossParts composite_seg_loss(const CyclePacket& p, const LossWeights& weights, SegBranch which) {
    const bool fwd = which == SegBranch::Forward;
    SegLossParts out;
    out.cr = cross_entropy_seg(fwd ? p.seg_logits : p.seg_logits_recovery, p.labels, p.label_mask);
    out.sr = sr_loss(p.recon_gold, fwd ? p.recon_pred : p.recon_pred_recovery, p.label_mask);
    out.sc = sc_loss(p.positions, fwd ? p.positions_pred : p.positions_pred_recovery);
    out.total = combine_seg_loss(out.cr, out.sr, out.sc, weights);
    return out;
}

torch::Tensor total_loss_D(const DiscriminatorLossParts& parts, const LossWeights& weights) {
    return -parts.adv + weights.cls * parts.cls_r;
}

torch::Tensor total_loss_G(const GeneratorLossParts& parts, const LossWeights& weights) {
    return -parts.adv + weights.cls * parts.cls_f + weights.rec_img * parts.rec_img + weights.seg * parts.seg +
           weights.rec_lab * parts.rec_lab;
}

}  // namespace stdgn

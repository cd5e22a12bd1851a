#pragma once

#include <functional>
#include <optional>

#include <torch/torch.h>

namespace stdgn {

/// Balancing weights of the generator/discriminator objectives.
struct LossWeights {
    double gp = 10.0;
    double cls = 10.0;
    double seg = 100.0;
    double rec_img = 100.0;
    /// Current label-cycle weight; the trainer ramps it from 0 to its maximum.
    double rec_lab = 100.0;
    double sr = 100.0;
    double sc = 1.0;

    void validate() const;
};

/// Maps a batch of images [B,1,H,W] to critic scores [B].
using Critic = std::function<torch::Tensor(const torch::Tensor&)>;

/// Mean over the batch of (||grad D(x_hat)||_2 - 1)^2 with
/// x_hat = eps * real + (1 - eps) * fake, eps ~ U(0,1) per sample.
/// The graph is kept so the penalty can be backpropagated into the critic.
torch::Tensor gradient_penalty(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                               at::Generator& rng);

/// Same penalty at caller-supplied interpolation weights eps [B].
torch::Tensor gradient_penalty_at(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                                  const torch::Tensor& eps);

struct AdversarialTerms {
    torch::Tensor real_mean;
    torch::Tensor fake_mean;
    torch::Tensor penalty;
    torch::Tensor value;  ///< real_mean - fake_mean - gp * penalty
};

/// Critic objective E[D(x)] - E[D(x')] - gp * penalty. The D step maximizes it.
AdversarialTerms adv_loss_D(const Critic& critic, const torch::Tensor& x_real, const torch::Tensor& x_fake,
                            double lambda_gp, at::Generator& rng);

/// E[D(x')]; the G step maximizes it.
torch::Tensor adv_loss_G(const Critic& critic, const torch::Tensor& x_fake);

/// Mean of -log softmax(logits)[target]. With `soft_targets` false every row of
/// `targets` [B,K] must be one-hot; otherwise rows are probability vectors.
torch::Tensor cls_loss(const torch::Tensor& cls_logits, const torch::Tensor& targets, bool soft_targets = false);

inline torch::Tensor cls_loss_real(const torch::Tensor& cls_logits, const torch::Tensor& v) { return cls_loss(cls_logits, v); }
inline torch::Tensor cls_loss_fake(const torch::Tensor& cls_logits, const torch::Tensor& v_target, bool soft = false) {
    return cls_loss(cls_logits, v_target, soft);
}

/// Mean absolute difference over all pixels and the batch.
torch::Tensor cycle_image_loss(const torch::Tensor& x, const torch::Tensor& x_rec);

/// Mean squared distance between reconstructions, averaged per element over its
/// entries and then over labeled elements; zero when none is labeled.
torch::Tensor sr_loss(const torch::Tensor& r_gold, const torch::Tensor& r_pred, const torch::Tensor& label_mask);

/// Mean squared error between true and predicted slice positions.
torch::Tensor sc_loss(const torch::Tensor& positions, const torch::Tensor& predicted);

/// Pixelwise cross entropy averaged over pixels of labeled elements; zero when none is labeled.
torch::Tensor cross_entropy_seg(const torch::Tensor& logits, const torch::Tensor& labels, const torch::Tensor& label_mask);

/// Everything one translate/recover cycle produces that the losses consume.
struct CyclePacket {
    torch::Tensor x;             ///< source images
    torch::Tensor x_translated;  ///< x'
    torch::Tensor x_recovered;   ///< x''
    torch::Tensor seg_logits;            ///< logits of y_hat (segmentation of x)
    torch::Tensor seg_logits_recovery;   ///< logits of y_hat' (segmentation of x')
    torch::Tensor labels;        ///< gold classes [B,H,W]
    torch::Tensor label_mask;    ///< [B] bool
    torch::Tensor positions;     ///< P
    torch::Tensor positions_pred;           ///< P_hat
    torch::Tensor positions_pred_recovery;  ///< P_hat'
    torch::Tensor recon_gold;               ///< R
    torch::Tensor recon_pred;               ///< R_hat
    torch::Tensor recon_pred_recovery;      ///< R_hat'
};

enum class SegBranch { Forward, Recovery };

struct SegLossParts {
    torch::Tensor cr;
    torch::Tensor sr;
    torch::Tensor sc;
    torch::Tensor total;
};

/// L_CR + sr * L_SR + sc * L_SC on the chosen branch.
SegLossParts composite_seg_loss(const CyclePacket& packet, const LossWeights& weights, SegBranch which);

/// The weighted sum alone, for already-evaluated sub-losses.
torch::Tensor combine_seg_loss(const torch::Tensor& cr, const torch::Tensor& sr, const torch::Tensor& sc,
                               const LossWeights& weights);

struct DiscriminatorLossParts {
    torch::Tensor adv;    ///< L_adv^D
    torch::Tensor cls_r;  ///< L_cls^r
};

struct GeneratorLossParts {
    torch::Tensor adv;      ///< L_adv^G
    torch::Tensor cls_f;    ///< L_cls^f
    torch::Tensor rec_img;  ///< L_rec^img
    torch::Tensor seg;      ///< L_seg
    torch::Tensor rec_lab;  ///< L_rec^lab
};

/// -L_adv^D + cls * L_cls^r
torch::Tensor total_loss_D(const DiscriminatorLossParts& parts, const LossWeights& weights);

/// -L_adv^G + cls * L_cls^f + rec_img * L_rec^img + seg * L_seg + rec_lab * L_rec^lab
torch::Tensor total_loss_G(const GeneratorLossParts& parts, const LossWeights& weights);

}  // namespace stdgn

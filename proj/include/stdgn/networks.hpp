#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "stdgn/image.hpp"

namespace stdgn {

// ----------------------------------------------------------
// Configs
// ----------------------------------------------------------

struct GeneratorConfig {
    int modality_dim = 4;  ///< K = N + 1
    int base_width = 16;
    int depth = 4;
    int num_classes = kNumClasses;
    int se_reduction = 8;

    [[nodiscard]] int input_channels() const { return 1 + modality_dim; }
    /// Channel count C of the final decoder features (the ones recalibrated).
    [[nodiscard]] int final_channels() const { return base_width; }
    [[nodiscard]] int bottleneck_channels() const { return base_width << depth; }
    void validate() const;
};

struct DiscriminatorConfig {
    int modality_dim = 4;
    int base_width = 16;
    int num_layers = 3;
    /// Expected square input size; 0 disables the check.
    int image_size = 0;
    void validate() const;
};

struct SRNConfig {
    int num_classes = kNumClasses;
    int base_width = 16;
};

struct SCNConfig {
    int in_channels = 256;
    int hidden = 32;
};

struct UNetConfig {
    int in_channels = 1;
    int base_width = 16;
    int depth = 4;
    int num_classes = kNumClasses;
    void validate() const;
};

// ----------------------------------------------------------
// Building blocks
// ----------------------------------------------------------

/// (conv3x3 -> GroupNorm -> LeakyReLU) x 2
struct ConvBlockImpl : torch::nn::Module {
    ConvBlockImpl(int in_channels, int out_channels);
    torch::Tensor forward(const torch::Tensor& x);

    torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(ConvBlock);

struct EncoderFeatures {
    std::vector<torch::Tensor> skips;  ///< finest level first
    torch::Tensor bottleneck;
};

struct UNetEncoderImpl : torch::nn::Module {
    UNetEncoderImpl(int in_channels, int base_width, int depth);
    EncoderFeatures forward(const torch::Tensor& x);

    int depth;
    std::vector<ConvBlock> levels;
};
TORCH_MODULE(UNetEncoder);

/// Upsampling path with skip connections; returns base_width-channel features
/// at input resolution (the pre-output features).
struct UNetDecoderImpl : torch::nn::Module {
    UNetDecoderImpl(int base_width, int depth);
    torch::Tensor forward(const EncoderFeatures& features);

    int depth;
    std::vector<torch::nn::ConvTranspose2d> ups;
    std::vector<ConvBlock> blocks;
};
TORCH_MODULE(UNetDecoder);

// ----------------------------------------------------------
// Cross-task attention
// ----------------------------------------------------------

/// F_seg + F_tsl * sigmoid(W2 relu(W1 z)), z = spatial mean of F_tsl, gate applied per channel.
/// Weights follow torch::nn::Linear layout ([out, in]).
torch::Tensor cross_task_recalibrate(const torch::Tensor& f_seg, const torch::Tensor& f_tsl, const torch::Tensor& w1,
                                     const torch::Tensor& b1, const torch::Tensor& w2, const torch::Tensor& b2);

struct CrossTaskAttentionImpl : torch::nn::Module {
    CrossTaskAttentionImpl(int channels, int reduction);

    torch::Tensor forward(const torch::Tensor& f_seg, const torch::Tensor& f_tsl);
    /// Channel gate in (0, 1), shape [B, C].
    torch::Tensor gate(const torch::Tensor& f_tsl);

    torch::nn::Linear squeeze{nullptr};
    torch::nn::Linear excite{nullptr};
    /// Replaces the sigmoid gate by a constant (ablation hook); nullopt in normal use.
    std::optional<double> gate_override;
};
TORCH_MODULE(CrossTaskAttention);

// ----------------------------------------------------------
// Generator
// ----------------------------------------------------------

struct GeneratorOutput {
    torch::Tensor translated;           ///< [B,1,H,W], linear output
    torch::Tensor segmentation_logits;  ///< [B,num_classes,H,W]
    torch::Tensor bottleneck;           ///< encoder bottom, SCN input
    torch::Tensor seg_features;         ///< F_seg before recalibration
    torch::Tensor tsl_features;         ///< F_tsl
};

/// Shared encoder, segmentation and translation decoders joined by cross-task attention.
struct GeneratorImpl : torch::nn::Module {
    explicit GeneratorImpl(const GeneratorConfig& config);

    /// `conditioned` is [B, 1+K, H, W] from broadcast_concat.
    GeneratorOutput forward(const torch::Tensor& conditioned);

    GeneratorConfig config;
    UNetEncoder encoder{nullptr};
    UNetDecoder seg_decoder{nullptr};
    UNetDecoder tsl_decoder{nullptr};
    CrossTaskAttention attention{nullptr};
    torch::nn::Conv2d seg_head{nullptr};
    torch::nn::Conv2d tsl_head{nullptr};
};
TORCH_MODULE(Generator);

// ----------------------------------------------------------
// Discriminator
// ----------------------------------------------------------

struct DiscriminatorOutput {
    torch::Tensor src_score;   ///< [B], unbounded critic value
    torch::Tensor cls_logits;  ///< [B,K]
};

/// Strided conv trunk with a global-pooled critic head and a modality head.
struct DiscriminatorImpl : torch::nn::Module {
    explicit DiscriminatorImpl(const DiscriminatorConfig& config);

    DiscriminatorOutput forward(const torch::Tensor& images);
    torch::Tensor critic(const torch::Tensor& images);

    DiscriminatorConfig config;
    torch::nn::Sequential trunk{nullptr};
    torch::nn::Conv2d src_head{nullptr};
    torch::nn::Conv2d cls_head{nullptr};
};
TORCH_MODULE(Discriminator);

// ----------------------------------------------------------
// Shape reconstruction and spatial constraint
// ----------------------------------------------------------

/// Convolutional autoencoder over per-pixel class probabilities.
struct ShapeReconstructionNetImpl : torch::nn::Module {
    explicit ShapeReconstructionNetImpl(const SRNConfig& config);
    torch::Tensor forward(const torch::Tensor& class_probs);

    SRNConfig config;
    torch::nn::Sequential encoder{nullptr};
    torch::nn::Sequential decoder{nullptr};
};
TORCH_MODULE(ShapeReconstructionNet);

/// Pooled bottleneck -> FC -> ReLU -> FC -> tanh, one position per image.
struct SpatialConstraintNetImpl : torch::nn::Module {
    explicit SpatialConstraintNetImpl(const SCNConfig& config);
    torch::Tensor forward(const torch::Tensor& bottleneck);

    torch::nn::Linear fc1{nullptr};
    torch::nn::Linear fc2{nullptr};
};
TORCH_MODULE(SpatialConstraintNet);

/// Plain single-decoder U-Net (fully supervised baseline).
struct BaselineUNetImpl : torch::nn::Module {
    explicit BaselineUNetImpl(const UNetConfig& config);
    torch::Tensor forward(const torch::Tensor& images);

    UNetConfig config;
    UNetEncoder encoder{nullptr};
    UNetDecoder decoder{nullptr};
    torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(BaselineUNet);

void set_requires_grad(torch::nn::Module& module, bool requires_grad);

/// L2 norm over all defined parameter gradients.
double gradient_norm(const torch::nn::Module& module);

/// One-hot planes [B,C,H,W] (float) from integer labels [B,H,W].
torch::Tensor one_hot_planes(const torch::Tensor& labels, int num_classes);

}  // namespace stdgn

#include "stdgn/networks.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stdgn {

namespace F = torch::nn::functional;

void GeneratorConfig::validate() const {
    if (depth < 2) throw std::invalid_argument("generator depth must be >= 2");
    if (base_width < 4) throw std::invalid_argument("generator base_width must be >= 4");
    if (modality_dim < 2) throw std::invalid_argument("modality_dim must be >= 2");
    if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
    if (se_reduction < 1 || final_channels() % se_reduction != 0) {
        throw std::invalid_argument("se_reduction must divide the final feature channel count " +
                                    std::to_string(final_channels()));
    }
}

void DiscriminatorConfig::validate() const {
    if (num_layers < 1) throw std::invalid_argument("discriminator needs at least one layer");
    if (base_width < 1) throw std::invalid_argument("discriminator base_width must be positive");
    if (modality_dim < 2) throw std::invalid_argument("modality_dim must be >= 2");
}

void UNetConfig::validate() const {
    if (depth < 2) throw std::invalid_argument("U-Net depth must be >= 2");
    if (base_width < 4) throw std::invalid_argument("U-Net base_width must be >= 4");
}

namespace {

torch::nn::GroupNorm group_norm(int channels) {
    return torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::gcd(channels, 4), channels));
}

torch::nn::LeakyReLU leaky() { return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)); }

void check_divisible(const torch::Tensor& x, int depth, const char* who) {
    const long factor = 1L << depth;
    if (x.dim() != 4 || x.size(2) % factor != 0 || x.size(3) % factor != 0) {
        throw std::invalid_argument(std::string(who) + ": spatial shape must be divisible by " + std::to_string(factor));
    }
}

}  // namespace

ConvBlockImpl::ConvBlockImpl(int in_channels, int out_channels) {
    body = register_module("body", torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)),
        group_norm(out_channels),
        leaky(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(out_channels, out_channels, 3).padding(1)),
        group_norm(out_channels),
        leaky()));
}

torch::Tensor ConvBlockImpl::forward(const torch::Tensor& x) { return body->forward(x); }

UNetEncoderImpl::UNetEncoderImpl(int in_channels, int base_width, int depth_) : depth(depth_) {
    int channels = in_channels;
    for (int i = 0; i <= depth; ++i) {
        const int out = base_width << i;
        levels.push_back(register_module("level" + std::to_string(i), ConvBlock(channels, out)));
        channels = out;
    }
}

EncoderFeatures UNetEncoderImpl::forward(const torch::Tensor& x) {
    EncoderFeatures f;
    torch::Tensor h = x;
    for (int i = 0; i < depth; ++i) {
        h = levels[i]->forward(h);
        f.skips.push_back(h);
        h = F::max_pool2d(h, F::MaxPool2dFuncOptions(2));
    }
    f.bottleneck = levels[depth]->forward(h);
    return f;
}

UNetDecoderImpl::UNetDecoderImpl(int base_width, int depth_) : depth(depth_) {
    for (int i = depth - 1; i >= 0; --i) {
        const int in = base_width << (i + 1);
        const int out = base_width << i;
        ups.push_back(register_module("up" + std::to_string(i),
                                      torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, out, 2).stride(2))));
        blocks.push_back(register_module("block" + std::to_string(i), ConvBlock(2 * out, out)));
    }
}

torch::Tensor UNetDecoderImpl::forward(const EncoderFeatures& features) {
    torch::Tensor h = features.bottleneck;
    for (int step = 0; step < depth; ++step) {
        const int level = depth - 1 - step;
        h = ups[step]->forward(h);
        h = blocks[step]->forward(torch::cat({h, features.skips[level]}, 1));
    }
    return h;
}

torch::Tensor cross_task_recalibrate(const torch::Tensor& f_seg, const torch::Tensor& f_tsl, const torch::Tensor& w1,
                                     const torch::Tensor& b1, const torch::Tensor& w2, const torch::Tensor& b2) {
    if (!f_seg.sizes().equals(f_tsl.sizes()) || f_seg.dim() != 4) {
        throw std::invalid_argument("cross_task_recalibrate: F_seg and F_tsl must share shape [B,C,H,W]");
    }
    const auto z = f_tsl.mean({2, 3});
    const auto g = torch::sigmoid(F::linear(torch::relu(F::linear(z, w1, b1)), w2, b2));
    return f_seg + f_tsl * g.unsqueeze(-1).unsqueeze(-1);
}

CrossTaskAttentionImpl::CrossTaskAttentionImpl(int channels, int reduction) {
    const int hidden = std::max(1, channels / reduction);
    squeeze = register_module("squeeze", torch::nn::Linear(channels, hidden));
    excite = register_module("excite", torch::nn::Linear(hidden, channels));
}

torch::Tensor CrossTaskAttentionImpl::gate(const torch::Tensor& f_tsl) {
    const auto z = f_tsl.mean({2, 3});
    return torch::sigmoid(excite->forward(torch::relu(squeeze->forward(z))));
}

torch::Tensor CrossTaskAttentionImpl::forward(const torch::Tensor& f_seg, const torch::Tensor& f_tsl) {
    if (gate_override) {
        if (!f_seg.sizes().equals(f_tsl.sizes())) {
            throw std::invalid_argument("cross-task attention: F_seg and F_tsl must share shape");
        }
        return f_seg + f_tsl * *gate_override;
    }
    return cross_task_recalibrate(f_seg, f_tsl, squeeze->weight, squeeze->bias, excite->weight, excite->bias);
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg) : config(cfg) {
    config.validate();
    encoder = register_module("encoder", UNetEncoder(config.input_channels(), config.base_width, config.depth));
    seg_decoder = register_module("seg_decoder", UNetDecoder(config.base_width, config.depth));
    tsl_decoder = register_module("tsl_decoder", UNetDecoder(config.base_width, config.depth));
    attention = register_module("attention", CrossTaskAttention(config.final_channels(), config.se_reduction));
    seg_head = register_module("seg_head",
                               torch::nn::Conv2d(torch::nn::Conv2dOptions(config.base_width, config.num_classes, 1)));
    tsl_head = register_module("tsl_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(config.base_width, 1, 1)));
}

GeneratorOutput GeneratorImpl::forward(const torch::Tensor& conditioned) {
    check_divisible(conditioned, config.depth, "generator");
    if (conditioned.size(1) != config.input_channels()) {
        throw std::invalid_argument("generator: expected " + std::to_string(config.input_channels()) +
                                    " input channels, got " + std::to_string(conditioned.size(1)));
    }
    const EncoderFeatures features = encoder->forward(conditioned);
    GeneratorOutput out;
    out.bottleneck = features.bottleneck;
    out.seg_features = seg_decoder->forward(features);
    out.tsl_features = tsl_decoder->forward(features);
    out.translated = tsl_head->forward(out.tsl_features);
    out.segmentation_logits = seg_head->forward(attention->forward(out.seg_features, out.tsl_features));
    return out;
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg) : config(cfg) {
    config.validate();
    trunk = torch::nn::Sequential();
    int channels = 1;
    for (int i = 0; i < config.num_layers; ++i) {
        const int out = config.base_width << i;
        trunk->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, out, 4).stride(2).padding(1)));
        trunk->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.01)));
        channels = out;
    }
    register_module("trunk", trunk);
    src_head = register_module("src_head", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 1, 3).padding(1)));
    cls_head = register_module("cls_head",
                               torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, config.modality_dim, 3).padding(1)));
}

DiscriminatorOutput DiscriminatorImpl::forward(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 1) {
        throw std::invalid_argument("discriminator: expected [B,1,H,W] images");
    }
    if (config.image_size > 0 && (images.size(2) != config.image_size || images.size(3) != config.image_size)) {
        throw std::invalid_argument("discriminator: expected " + std::to_string(config.image_size) + "x" +
                                    std::to_string(config.image_size) + " images");
    }
    const auto h = trunk->forward(images);
    return {src_head->forward(h).mean({1, 2, 3}), cls_head->forward(h).mean({2, 3})};
}

torch::Tensor DiscriminatorImpl::critic(const torch::Tensor& images) { return forward(images).src_score; }

ShapeReconstructionNetImpl::ShapeReconstructionNetImpl(const SRNConfig& cfg) : config(cfg) {
    const int w = config.base_width;
    encoder = register_module("encoder", torch::nn::Sequential(
        torch::nn::Conv2d(torch::nn::Conv2dOptions(config.num_classes, w, 3).padding(1)), leaky(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(w, 2 * w, 4).stride(2).padding(1)), leaky(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * w, 2 * w, 4).stride(2).padding(1)), leaky()));
    decoder = register_module("decoder", torch::nn::Sequential(
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(2 * w, 2 * w, 2).stride(2)), leaky(),
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(2 * w, w, 2).stride(2)), leaky(),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(w, config.num_classes, 3).padding(1))));
}

torch::Tensor ShapeReconstructionNetImpl::forward(const torch::Tensor& class_probs) {
    if (class_probs.dim() != 4 || class_probs.size(1) != config.num_classes) {
        throw std::invalid_argument("SRN: expected [B," + std::to_string(config.num_classes) + ",H,W] input");
    }
    check_divisible(class_probs, 2, "SRN");
    return decoder->forward(encoder->forward(class_probs));
}

SpatialConstraintNetImpl::SpatialConstraintNetImpl(const SCNConfig& config) {
    fc1 = register_module("fc1", torch::nn::Linear(config.in_channels, config.hidden));
    fc2 = register_module("fc2", torch::nn::Linear(config.hidden, 1));
}

torch::Tensor SpatialConstraintNetImpl::forward(const torch::Tensor& bottleneck) {
    if (bottleneck.dim() != 4 || bottleneck.size(1) != fc1->options.in_features()) {
        throw std::invalid_argument("SCN: bottleneck channel mismatch");
    }
    const auto pooled = bottleneck.mean({2, 3});
    return torch::tanh(fc2->forward(torch::relu(fc1->forward(pooled)))).squeeze(1);
}

BaselineUNetImpl::BaselineUNetImpl(const UNetConfig& cfg) : config(cfg) {
    config.validate();
    encoder = register_module("encoder", UNetEncoder(config.in_channels, config.base_width, config.depth));
    decoder = register_module("decoder", UNetDecoder(config.base_width, config.depth));
    head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(config.base_width, config.num_classes, 1)));
}

torch::Tensor BaselineUNetImpl::forward(const torch::Tensor& images) {
    check_divisible(images, config.depth, "U-Net");
    if (images.size(1) != config.in_channels) throw std::invalid_argument("U-Net: input channel mismatch");
    return head->forward(decoder->forward(encoder->forward(images)));
}

void set_requires_grad(torch::nn::Module& module, bool requires_grad) {
    for (auto& p : module.parameters()) p.set_requires_grad(requires_grad);
}

double gradient_norm(const torch::nn::Module& module) {
    double sq = 0.0;
    for (const auto& p : module.parameters()) {
        if (p.grad().defined()) sq += p.grad().to(torch::kDouble).pow(2).sum().item<double>();
    }
    return std::sqrt(sq);
}

torch::Tensor one_hot_planes(const torch::Tensor& labels, int num_classes) {
    return F::one_hot(labels, num_classes).permute({0, 3, 1, 2}).to(torch::kFloat);
}

}  // namespace stdgn

#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "stdgn/image.hpp"

namespace stdgn {

// ---------------------------------------------------------------------------
// Slice-level types
// ---------------------------------------------------------------------------

struct ImageSlice {
    ImageF pixels;
    std::string subject_id;
    int slice_index = 0;
    int num_slices = 1;
    CardiacPhase phase = CardiacPhase::ED;

    friend bool operator==(const ImageSlice&, const ImageSlice&) = default;
};

/// Per-pixel class map. When is_labeled is false the classes are absent.
struct LabelMap {
    ClassMap classes;
    bool is_labeled = false;

    friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

enum class Split { Train, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view s);

struct SliceRecord {
    ImageSlice image;
    LabelMap label;
    int domain_index = 0;
    std::string center_id;
    std::string vendor_id;
    double position = 0.0;
    Split split = Split::Train;

    friend bool operator==(const SliceRecord&, const SliceRecord&) = default;
};

/// Normalized signed distance of a slice to the central slice, in [-1, 1].
double slice_position(int slice_index, int num_slices);

struct DomainInfo {
    std::string vendor_id;
    std::string center_id;
    bool labeled = true;
    /// Held-out domains never contribute training records; they are the
    /// unseen target domains of the generalization experiment.
    bool held_out = false;

    friend bool operator==(const DomainInfo&, const DomainInfo&) = default;
};

struct DomainDataset {
    std::vector<SliceRecord> records;
    std::vector<DomainInfo> domains;

    /// Number of source domains N (domains that are not held out).
    [[nodiscard]] int num_source_domains() const;
    /// Length K = N + 1 of the modality code; index N is the fictitious domain.
    [[nodiscard]] int modality_dim() const { return num_source_domains() + 1; }

    /// Indices of records matching a split, optionally restricted to source domains
    /// and/or labeled records.
    [[nodiscard]] std::vector<std::size_t> select(Split split, bool source_only, bool labeled_only) const;

    /// Throws std::invalid_argument when a structural invariant is broken.
    void validate() const;

    friend bool operator==(const DomainDataset&, const DomainDataset&) = default;
};

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Per-slice z-score with population std. Near-constant inputs map to zeros.
ImageF zscore_normalize(const ImageF& pixels);

struct PixelCoord {
    int row = 0;
    int col = 0;
};

/// size x size window centred at `center`; out-of-bounds area is filled with
/// the image minimum.
template <typename T>
Image2D<T> center_crop(const Image2D<T>& pixels, int size, PixelCoord center);

extern template Image2D<float> center_crop(const Image2D<float>&, int, PixelCoord);
extern template Image2D<std::uint8_t> center_crop(const Image2D<std::uint8_t>&, int, PixelCoord);

/// Crop centre for external data: label centroid when labeled, image centre otherwise.
PixelCoord heart_center(const ImageSlice& image, const LabelMap& label);

/// Crops and z-scores a record in place; labels are cropped with the same window.
void preprocess_record(SliceRecord& record, int crop_size);

// ---------------------------------------------------------------------------
// Modality conditioning
// ---------------------------------------------------------------------------

struct ModalityVector {
    std::vector<float> code;

    [[nodiscard]] int size() const { return static_cast<int>(code.size()); }
    [[nodiscard]] bool is_one_hot() const;
    /// Index of the largest entry.
    [[nodiscard]] int argmax() const;

    friend bool operator==(const ModalityVector&, const ModalityVector&) = default;
};

struct ModalityDiff {
    std::vector<float> diff;

    [[nodiscard]] int size() const { return static_cast<int>(diff.size()); }
    ModalityDiff operator-() const;

    friend bool operator==(const ModalityDiff&, const ModalityDiff&) = default;
};

enum class TargetPolicy {
    OneHot,
    /// Dirichlet-sampled soft targets.
    Soft,
};

ModalityVector encode_modality(int domain_index, int K);

ModalityVector sample_target_modality(std::mt19937_64& rng, int K, std::optional<int> exclude = std::nullopt,
                                      TargetPolicy policy = TargetPolicy::OneHot, double dirichlet_alpha = 1.0);

ModalityDiff modality_difference(const ModalityVector& source, const ModalityVector& target);

/// Stacks the image with one constant plane per diff entry: (1 + K) x H x W.
torch::Tensor broadcast_concat(const ImageSlice& image, const ModalityDiff& diff);

/// Batched form: images [B,1,H,W], diffs [B,K] -> [B,1+K,H,W].
torch::Tensor broadcast_concat(const torch::Tensor& images, const torch::Tensor& diffs);

/// Stacks modality vectors into a [B,K] float tensor.
torch::Tensor stack_codes(const std::vector<ModalityVector>& codes);

}  // namespace stdgn

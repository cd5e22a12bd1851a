#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "stdgn/data_pipeline.hpp"
#include "stdgn/networks.hpp"

namespace stdgn {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// 2|A n B| / (|A| + |B|) over nonzero entries; 1 when both masks are empty.
double dice(const ClassMap& pred_mask, const ClassMap& gold_mask);

/// Symmetric Hausdorff distance between the boundary pixel sets, scaled by
/// `spacing`. nullopt when either mask is empty.
std::optional<double> hausdorff(const ClassMap& pred_mask, const ClassMap& gold_mask, double spacing = 1.0);

/// Mask of foreground pixels with a 4-neighbour outside the mask (image border counts as outside).
ClassMap boundary(const ClassMap& mask);

ClassMap binary_mask(const ClassMap& classes, Structure structure);

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

class Segmenter {
public:
    virtual ~Segmenter() = default;
    /// images [B,1,H,W] -> logits [B,C,H,W]
    virtual torch::Tensor logits(const torch::Tensor& images) = 0;
    [[nodiscard]] virtual int image_size() const = 0;
    [[nodiscard]] virtual std::string method() const = 0;
};

/// Runs the generator with a zero modality difference (segment the image in its own style).
class GeneratorSegmenter : public Segmenter {
public:
    GeneratorSegmenter(Generator generator, int image_size, std::string method = "STDGN");
    torch::Tensor logits(const torch::Tensor& images) override;
    [[nodiscard]] int image_size() const override { return image_size_; }
    [[nodiscard]] std::string method() const override { return method_; }

private:
    Generator generator_;
    int image_size_;
    std::string method_;
};

class UNetSegmenter : public Segmenter {
public:
    UNetSegmenter(BaselineUNet net, int image_size, std::string method = "U-Net");
    torch::Tensor logits(const torch::Tensor& images) override;
    [[nodiscard]] int image_size() const override { return image_size_; }
    [[nodiscard]] std::string method() const override { return method_; }

private:
    BaselineUNet net_;
    int image_size_;
    std::string method_;
};

/// Per-slice argmax label maps.
std::vector<ClassMap> segment_volume(Segmenter& model, const std::vector<const ImageSlice*>& slices);

// ---------------------------------------------------------------------------
// Records and reports
// ---------------------------------------------------------------------------

struct EvalRecord {
    std::string method;
    std::string subject_id;
    std::string vendor_id;
    std::string center_id;
    CardiacPhase phase = CardiacPhase::ED;
    Structure structure = Structure::LV;
    double dice = 0.0;
    std::optional<double> hd;

    friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// One record per (subject, phase, structure) over the selected records. Dice
/// is computed on the whole stack; HD is the largest slice-wise 2D HD among
/// slices where both masks are nonempty.
std::vector<EvalRecord> evaluate_dataset(Segmenter& model, const DomainDataset& dataset,
                                         const std::vector<std::size_t>& record_indices, double spacing = 1.0);

/// Mean Dice per structure (LV, Myo, RV) over the given records.
std::array<double, 3> mean_dice_by_structure(const std::vector<EvalRecord>& records);

enum class GroupKey { Method, Vendor, Center, Phase, Structure };

std::string_view group_key_name(GroupKey key);
GroupKey parse_group_key(std::string_view name);

struct ReportRow {
    std::vector<std::string> key_values;
    std::size_t count = 0;
    double dice_mean = 0.0;
    double dice_std = 0.0;
    std::size_t hd_count = 0;
    std::size_t hd_undefined = 0;
    double hd_mean = 0.0;
    double hd_std = 0.0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportTable {
    std::vector<GroupKey> group_by;
    std::vector<ReportRow> rows;

    [[nodiscard]] std::string to_csv() const;
    friend bool operator==(const ReportTable&, const ReportTable&) = default;
};

/// Mean and sample standard deviation (n - 1; 0 for a single value) per group.
/// Rows follow the sorted order of their key tuples.
ReportTable report(const std::vector<EvalRecord>& records, const std::vector<GroupKey>& group_by);

std::string records_to_csv(const std::vector<EvalRecord>& records);
std::vector<EvalRecord> records_from_csv(const std::string& csv);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// PGM overlay: grayscale slice with predicted contours drawn at full intensity.
void write_overlay_pgm(const std::filesystem::path& path, const ImageF& image, const ClassMap& prediction);

}  // namespace stdgn

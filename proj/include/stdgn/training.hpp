#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "stdgn/batching.hpp"
#include "stdgn/config.hpp"
#include "stdgn/data_pipeline.hpp"
#include "stdgn/evaluation.hpp"
#include "stdgn/losses.hpp"
#include "stdgn/networks.hpp"

namespace stdgn {

enum class AlternationMode {
    /// Blocks of `alternation_period` epochs: G first, then D, repeating.
    Block,
    /// One D step then one G step every iteration.
    Interleave,
};

enum class OptimPhase { TrainG, TrainD };

std::string_view optim_phase_name(OptimPhase p);

struct TrainConfig {
    std::uint64_t seed = 0;

    // Optimizer and schedules.
    double lr = 3e-4;
    std::int64_t lr_step = 5000;
    double lr_decay_factor = 10.0;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    // Global L2 gradient-norm cap for the G and D steps; 0 disables it.
    double grad_clip = 0.0;
    int batch_size = 8;
    AlternationMode alternation = AlternationMode::Interleave;
    int alternation_period = 50;
    std::int64_t total_iterations = 6000;
    double lambda_rec_lab_max = 100.0;
    double lambda_ramp_fraction = 0.5;
    LossWeights weights;

    // Targets.
    TargetPolicy target_policy = TargetPolicy::OneHot;
    double dirichlet_alpha = 1.0;

    // Architecture.
    int image_size = 64;
    int base_width = 16;
    int depth = 4;
    int se_reduction = 8;
    int disc_base_width = 16;
    int disc_layers = 3;
    int srn_base_width = 16;
    int scn_hidden = 32;

    // Pretraining stages.
    std::int64_t baseline_iterations = 1500;
    double baseline_lr = 0.01;
    int srn_epochs = 20;
    double srn_lr = 0.01;

    // Bookkeeping.
    std::int64_t checkpoint_every = 0;
    std::int64_t val_every = 500;
    int val_max_stacks = 8;

    void validate() const;
    /// Overrides fields from `kv`; unknown keys raise ConfigError.
    void apply(const KeyValueConfig& kv);
    [[nodiscard]] KeyValueConfig to_kv() const;
    static TrainConfig from_kv(const KeyValueConfig& kv);
};

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

/// lr0 * factor^(-floor(iteration / step))
double lr_schedule(std::int64_t iteration, double lr0 = 3e-4, std::int64_t step = 5000, double factor = 10.0);

/// Linear 0 -> max over the first `ramp_fraction` of `total`, then max.
double lambda_ramp(std::int64_t iteration, std::int64_t total, double max = 100.0, double ramp_fraction = 0.5);

/// Phase of an epoch under block alternation with `period` epochs per block.
OptimPhase alternation_controller(std::int64_t epoch, int period = 50);

// ---------------------------------------------------------------------------
// Errors and logs
// ---------------------------------------------------------------------------

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Column names of the metrics CSV in order.
const std::vector<std::string>& metric_columns();

/// One CSV row; absent values print as empty fields.
struct IterationLog {
    std::int64_t iteration = 0;
    std::int64_t epoch = 0;
    std::string phase;
    std::map<std::string, double> values;

    [[nodiscard]] std::string to_csv_row() const;
};

std::string metrics_csv_header();

// ---------------------------------------------------------------------------
// Baseline and SRN pretraining
// ---------------------------------------------------------------------------

UNetConfig baseline_config(const TrainConfig& config);
GeneratorConfig generator_config(const TrainConfig& config, int modality_dim);
DiscriminatorConfig discriminator_config(const TrainConfig& config, int modality_dim);
SRNConfig srn_config(const TrainConfig& config);

struct BaselineResult {
    BaselineUNet model{nullptr};
    std::vector<double> losses;
};

/// Cross-entropy-only U-Net on labeled training records of source domains.
BaselineResult train_baseline_unet(const TrainConfig& config, const DomainDataset& dataset);

struct SRNResult {
    ShapeReconstructionNet model{nullptr};
    std::vector<double> epoch_losses;
};

/// Denoising label autoencoder: inputs are gold one-hot maps and baseline softmax
/// maps of the labeled training slices, the target is always the gold one-hot map.
/// The returned network is frozen.
SRNResult pretrain_srn(const TrainConfig& config, const DomainDataset& dataset, BaselineUNet baseline);

/// Fraction of pixels whose reconstruction argmax matches the gold label, over the given records.
double srn_reconstruction_accuracy(ShapeReconstructionNet srn, const DomainDataset& dataset,
                                   const std::vector<std::size_t>& record_indices);

// ---------------------------------------------------------------------------
// Main loop
// ---------------------------------------------------------------------------

struct GeneratorStepParts {
    GeneratorLossParts parts;
    SegLossParts seg;
    SegLossParts rec_lab;
    torch::Tensor total;
    torch::Tensor modality_diff;  ///< d_st used in the translation pass
    torch::Tensor recovery_diff;  ///< d_ts used in the recovery pass
};

struct DiscriminatorStepParts {
    AdversarialTerms adv;
    torch::Tensor cls_r;
    torch::Tensor total;
};

class StdgnTrainer {
public:
    StdgnTrainer(const TrainConfig& config, const DomainDataset& dataset, ShapeReconstructionNet srn);

    /// Draws one target modality per batch element (consumes the target RNG).
    torch::Tensor draw_targets(const Batch& batch);

    /// Full translate/recover cycle and generator loss assembly without any update.
    GeneratorStepParts generator_parts(const Batch& batch, const torch::Tensor& targets, double rec_lab_weight);
    DiscriminatorStepParts discriminator_parts(const Batch& batch, const torch::Tensor& targets);

    std::map<std::string, double> train_step_G(const Batch& batch);
    std::map<std::string, double> train_step_D(const Batch& batch);

    /// Runs until `config.total_iterations`, or `stop_at` if given.
    void run(std::optional<std::int64_t> stop_at = std::nullopt);

    void save_checkpoint(const std::filesystem::path& path);
    /// Restores a trainer from a checkpoint written by save_checkpoint.
    static std::unique_ptr<StdgnTrainer> resume(const std::filesystem::path& path, const DomainDataset& dataset);

    /// Streams each finished row (also kept in history()).
    void set_metrics_sink(std::function<void(const IterationLog&)> sink) { sink_ = std::move(sink); }
    /// Called after every iteration; used for periodic checkpoints.
    void set_iteration_hook(std::function<void(StdgnTrainer&)> hook) { hook_ = std::move(hook); }

    [[nodiscard]] std::int64_t iteration() const { return iteration_; }
    [[nodiscard]] const TrainConfig& config() const { return config_; }
    [[nodiscard]] const std::vector<IterationLog>& history() const { return history_; }
    [[nodiscard]] OptimPhase current_phase() const;
    [[nodiscard]] double current_lr() const;
    [[nodiscard]] double current_rec_lab_weight() const;
    [[nodiscard]] int modality_dim() const { return modality_dim_; }

    Generator generator{nullptr};
    SpatialConstraintNet scn{nullptr};
    Discriminator discriminator{nullptr};
    ShapeReconstructionNet srn{nullptr};

    [[nodiscard]] std::vector<EvalRecord> validate();

private:
    void set_lr(double lr);
    torch::Tensor source_codes(const Batch& batch) const;
    double clip_gradients(const std::vector<torch::optim::OptimizerParamGroup>& groups) const;
    void check_finite(const std::map<std::string, double>& values) const;

    TrainConfig config_;
    const DomainDataset* dataset_;
    int modality_dim_;
    BatchStream stream_;
    std::vector<std::size_t> val_indices_;
    std::mt19937_64 target_rng_;
    at::Generator torch_rng_;
    std::unique_ptr<torch::optim::SGD> opt_g_;
    std::unique_ptr<torch::optim::SGD> opt_d_;
    std::int64_t iteration_ = 0;
    std::vector<IterationLog> history_;
    std::function<void(const IterationLog&)> sink_;
    std::function<void(StdgnTrainer&)> hook_;
};

// ---------------------------------------------------------------------------
// Orchestration and model files
// ---------------------------------------------------------------------------

void save_baseline(const std::filesystem::path& path, const TrainConfig& config, BaselineUNet model);
BaselineUNet load_baseline(const std::filesystem::path& path);
void save_srn(const std::filesystem::path& path, const TrainConfig& config, ShapeReconstructionNet model);
ShapeReconstructionNet load_srn(const std::filesystem::path& path);

/// Loads any model checkpoint (baseline, or STDGN training/final) as a segmenter.
std::unique_ptr<Segmenter> load_segmenter(const std::filesystem::path& path);
/// Generator + its modality dimension from an STDGN checkpoint.
std::pair<Generator, TrainConfig> load_generator(const std::filesystem::path& path);

struct TrainPaths {
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> baseline;  ///< reuse instead of training
    std::optional<std::filesystem::path> srn;       ///< reuse instead of training
    std::optional<std::filesystem::path> resume;    ///< continue from this checkpoint
};

struct TrainOutcome {
    std::filesystem::path final_checkpoint;
    std::filesystem::path metrics_csv;
    std::vector<IterationLog> history;
};

/// Baseline -> SRN -> main loop, writing checkpoints, metrics.csv and final.ckpt under out_dir.
TrainOutcome train(const TrainConfig& config, const DomainDataset& dataset, const TrainPaths& paths);

}  // namespace stdgn

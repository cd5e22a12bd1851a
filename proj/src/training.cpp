#include "stdgn/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stdgn/checkpoint.hpp"

namespace stdgn {

namespace F = torch::nn::functional;

// ---------------------------------------------------------------------------
// Metrics rows
// ---------------------------------------------------------------------------

const std::vector<std::string>& metric_columns() {
    static const std::vector<std::string> cols{
        "lr",          "lambda_rec_lab", "d_real",      "d_fake",      "d_gp",        "d_adv",
        "d_cls_r",     "d_w_gp",         "d_w_cls_r",   "d_total",     "g_adv",       "g_cls_f",
        "g_rec_img",   "g_seg_cr",       "g_seg_sr",    "g_seg_sc",    "g_seg",       "g_lab_cr",
        "g_lab_sr",    "g_lab_sc",       "g_rec_lab",   "g_w_cls_f",   "g_w_rec_img", "g_w_seg",
        "g_w_rec_lab", "g_total",        "d_grad_norm", "g_grad_norm",  "val_dice_lv", "val_dice_myo",
        "val_dice_rv"};
    return cols;
}

std::string metrics_csv_header() {
    std::string h = "iteration,epoch,phase";
    for (const auto& c : metric_columns()) h += "," + c;
    return h + "\n";
}

std::string IterationLog::to_csv_row() const {
    std::string row = std::to_string(iteration) + "," + std::to_string(epoch) + "," + phase;
    char buf[40];
    for (const auto& c : metric_columns()) {
        row += ",";
        if (const auto it = values.find(c); it != values.end()) {
            std::snprintf(buf, sizeof(buf), "%.9g", it->second);
            row += buf;
        }
    }
    return row + "\n";
}

namespace {

IterationLog parse_log_row(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    const auto& cols = metric_columns();
    if (fields.size() != cols.size() + 3) throw std::runtime_error("corrupt metrics history row");
    IterationLog log;
    log.iteration = std::stoll(fields[0]);
    log.epoch = std::stoll(fields[1]);
    log.phase = fields[2];
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!fields[i + 3].empty()) log.values[cols[i]] = std::stod(fields[i + 3]);
    }
    return log;
}

double scalar(const torch::Tensor& t) { return t.item<double>(); }

std::unique_ptr<torch::optim::SGD> make_sgd(std::vector<torch::Tensor> params, const TrainConfig& c, double lr) {
    return std::make_unique<torch::optim::SGD>(
        std::move(params), torch::optim::SGDOptions(lr).momentum(c.momentum).weight_decay(c.weight_decay));
}

void set_sgd_lr(torch::optim::SGD& opt, double lr) {
    for (auto& group : opt.param_groups()) static_cast<torch::optim::SGDOptions&>(group.options()).lr(lr);
}

/// Labeled test records of source domains, limited to the first `max_stacks` (subject, phase) stacks.
std::vector<std::size_t> validation_indices(const DomainDataset& ds, int max_stacks) {
    std::vector<std::size_t> out;
    std::set<std::pair<std::string, CardiacPhase>> stacks;
    for (std::size_t i : ds.select(Split::Test, true, true)) {
        const auto& r = ds.records[i];
        const auto key = std::make_pair(r.image.subject_id, r.image.phase);
        if (!stacks.count(key)) {
            if (static_cast<int>(stacks.size()) >= max_stacks) continue;
            stacks.insert(key);
        }
        out.push_back(i);
    }
    return out;
}

void require_image_size(const DomainDataset& ds, int size) {
    for (const auto& r : ds.records) {
        if (r.image.pixels.height != size || r.image.pixels.width != size) {
            throw std::invalid_argument("record " + r.image.subject_id + " is " + std::to_string(r.image.pixels.height) +
                                        "x" + std::to_string(r.image.pixels.width) + ", config expects image_size " +
                                        std::to_string(size));
        }
    }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 step
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

UNetConfig baseline_config(const TrainConfig& c) { return UNetConfig{1, c.base_width, c.depth, kNumClasses}; }

GeneratorConfig generator_config(const TrainConfig& c, int modality_dim) {
    return GeneratorConfig{modality_dim, c.base_width, c.depth, kNumClasses, c.se_reduction};
}

DiscriminatorConfig discriminator_config(const TrainConfig& c, int modality_dim) {
    return DiscriminatorConfig{modality_dim, c.disc_base_width, c.disc_layers, c.image_size};
}

SRNConfig srn_config(const TrainConfig& c) { return SRNConfig{kNumClasses, c.srn_base_width}; }

// ---------------------------------------------------------------------------
// Baseline and SRN
// ---------------------------------------------------------------------------

BaselineResult train_baseline_unet(const TrainConfig& config, const DomainDataset& dataset) {
    config.validate();
    require_image_size(dataset, config.image_size);
    auto subset = dataset.select(Split::Train, true, true);
    if (subset.empty()) throw TrainingError("train_baseline_unet: no labeled training records");

    torch::manual_seed(derive_seed(config.seed, 1));
    BaselineResult result;
    result.model = BaselineUNet(baseline_config(config));
    BatchStream stream(dataset, std::move(subset), config.batch_size, derive_seed(config.seed, 2));
    auto opt = make_sgd(result.model->parameters(), config, config.baseline_lr);

    result.model->train();
    for (std::int64_t it = 0; it < config.baseline_iterations; ++it) {
        set_sgd_lr(*opt, lr_schedule(it, config.baseline_lr, config.lr_step, config.lr_decay_factor));
        const Batch b = stream.next();
        opt->zero_grad();
        const auto loss = cross_entropy_seg(result.model->forward(b.images), b.labels, b.label_mask);
        const double value = scalar(loss);
        if (!std::isfinite(value)) throw TrainingError("baseline: non-finite cross entropy at iteration " + std::to_string(it));
        loss.backward();
        opt->step();
        result.losses.push_back(value);
    }
    result.model->eval();
    return result;
}

SRNResult pretrain_srn(const TrainConfig& config, const DomainDataset& dataset, BaselineUNet baseline) {
    config.validate();
    const auto subset = dataset.select(Split::Train, true, true);
    if (subset.empty()) throw TrainingError("pretrain_srn: no labeled data available");

    const Batch all = collate(dataset, subset);
    const auto gold = one_hot_planes(all.labels, kNumClasses);
    torch::Tensor predicted;
    {
        torch::NoGradGuard no_grad;
        baseline->eval();
        predicted = F::softmax(baseline->forward(all.images), F::SoftmaxFuncOptions(1));
    }
    const auto inputs = torch::cat({gold, predicted}, 0);
    const auto targets = torch::cat({gold, gold}, 0);

    torch::manual_seed(derive_seed(config.seed, 3));
    SRNResult result;
    result.model = ShapeReconstructionNet(srn_config(config));
    auto opt = make_sgd(result.model->parameters(), config, config.srn_lr);
    std::mt19937_64 rng(derive_seed(config.seed, 4));

    result.model->train();
    for (int epoch = 0; epoch < config.srn_epochs; ++epoch) {
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& idx : make_batches(static_cast<std::size_t>(inputs.size(0)), config.batch_size, rng)) {
            const auto index = torch::tensor(std::vector<std::int64_t>(idx.begin(), idx.end()), torch::kLong);
            opt->zero_grad();
            const auto loss = (result.model->forward(inputs.index_select(0, index)) - targets.index_select(0, index))
                                  .pow(2)
                                  .mean();
            loss.backward();
            opt->step();
            total += scalar(loss) * static_cast<double>(idx.size());
            count += idx.size();
        }
        result.epoch_losses.push_back(total / static_cast<double>(count));
    }
    set_requires_grad(*result.model, false);
    result.model->eval();
    return result;
}

double srn_reconstruction_accuracy(ShapeReconstructionNet srn, const DomainDataset& dataset,
                                   const std::vector<std::size_t>& record_indices) {
    if (record_indices.empty()) throw std::invalid_argument("srn_reconstruction_accuracy: no records");
    torch::NoGradGuard no_grad;
    srn->eval();
    const Batch b = collate(dataset, record_indices);
    const auto recon = srn->forward(one_hot_planes(b.labels, kNumClasses));
    return recon.argmax(1).eq(b.labels).to(torch::kDouble).mean().item<double>();
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

StdgnTrainer::StdgnTrainer(const TrainConfig& config, const DomainDataset& dataset, ShapeReconstructionNet frozen_srn)
    : srn(std::move(frozen_srn)),
      config_(config),
      dataset_(&dataset),
      modality_dim_(dataset.modality_dim()),
      stream_(dataset, dataset.select(Split::Train, true, false), config.batch_size, derive_seed(config.seed, 5)),
      target_rng_(derive_seed(config.seed, 6)),
      torch_rng_(at::make_generator<at::CPUGeneratorImpl>(derive_seed(config.seed, 7))) {
    config_.validate();
    dataset.validate();
    require_image_size(dataset, config_.image_size);

    torch::manual_seed(derive_seed(config_.seed, 8));
    const auto gcfg = generator_config(config_, modality_dim_);
    generator = Generator(gcfg);
    scn = SpatialConstraintNet(SCNConfig{gcfg.bottleneck_channels(), config_.scn_hidden});
    discriminator = Discriminator(discriminator_config(config_, modality_dim_));

    set_requires_grad(*srn, false);
    srn->eval();

    auto g_params = generator->parameters();
    for (auto& p : scn->parameters()) g_params.push_back(p);
    opt_g_ = make_sgd(std::move(g_params), config_, config_.lr);
    opt_d_ = make_sgd(discriminator->parameters(), config_, config_.lr);
    val_indices_ = validation_indices(dataset, config_.val_max_stacks);
}

OptimPhase StdgnTrainer::current_phase() const {
    return alternation_controller(stream_.epoch(), config_.alternation_period);
}

double StdgnTrainer::current_lr() const {
    return lr_schedule(iteration_, config_.lr, config_.lr_step, config_.lr_decay_factor);
}

double StdgnTrainer::current_rec_lab_weight() const {
    return lambda_ramp(iteration_, config_.total_iterations, config_.lambda_rec_lab_max, config_.lambda_ramp_fraction);
}

void StdgnTrainer::set_lr(double lr) {
    set_sgd_lr(*opt_g_, lr);
    set_sgd_lr(*opt_d_, lr);
}

torch::Tensor StdgnTrainer::source_codes(const Batch& batch) const {
    return F::one_hot(batch.domain, modality_dim_).to(torch::kFloat);
}

torch::Tensor StdgnTrainer::draw_targets(const Batch& batch) {
    std::vector<ModalityVector> codes;
    for (long i = 0; i < batch.size(); ++i) {
        codes.push_back(sample_target_modality(target_rng_, modality_dim_, std::nullopt, config_.target_policy,
                                               config_.dirichlet_alpha));
    }
    return stack_codes(codes);
}

GeneratorStepParts StdgnTrainer::generator_parts(const Batch& batch, const torch::Tensor& targets,
                                                 double rec_lab_weight) {
    const auto& x = batch.images;
    GeneratorStepParts out;
    out.modality_diff = targets - source_codes(batch);
    out.recovery_diff = -out.modality_diff;

    const GeneratorOutput fwd = generator->forward(broadcast_concat(x, out.modality_diff));
    const GeneratorOutput rec = generator->forward(broadcast_concat(fwd.translated, out.recovery_diff));

    CyclePacket packet;
    packet.x = x;
    packet.x_translated = fwd.translated;
    packet.x_recovered = rec.translated;
    packet.seg_logits = fwd.segmentation_logits;
    packet.seg_logits_recovery = rec.segmentation_logits;
    packet.labels = batch.labels;
    packet.label_mask = batch.label_mask;
    packet.positions = batch.positions;
    packet.positions_pred = scn->forward(fwd.bottleneck);
    packet.positions_pred_recovery = scn->forward(rec.bottleneck);
    {
        torch::NoGradGuard no_grad;
        packet.recon_gold = srn->forward(one_hot_planes(batch.labels, kNumClasses));
    }
    packet.recon_pred = srn->forward(F::softmax(fwd.segmentation_logits, F::SoftmaxFuncOptions(1)));
    packet.recon_pred_recovery = srn->forward(F::softmax(rec.segmentation_logits, F::SoftmaxFuncOptions(1)));

    const DiscriminatorOutput judged = discriminator->forward(fwd.translated);
    out.parts.adv = adv_loss_G([&](const torch::Tensor&) { return judged.src_score; }, fwd.translated);
    out.parts.cls_f = cls_loss_fake(judged.cls_logits, targets, config_.target_policy == TargetPolicy::Soft);
    out.parts.rec_img = cycle_image_loss(x, rec.translated);
    out.seg = composite_seg_loss(packet, config_.weights, SegBranch::Forward);
    out.rec_lab = composite_seg_loss(packet, config_.weights, SegBranch::Recovery);
    out.parts.seg = out.seg.total;
    out.parts.rec_lab = out.rec_lab.total;

    LossWeights w = config_.weights;
    w.rec_lab = rec_lab_weight;
    out.total = total_loss_G(out.parts, w);
    return out;
}

DiscriminatorStepParts StdgnTrainer::discriminator_parts(const Batch& batch, const torch::Tensor& targets) {
    const auto v = source_codes(batch);
    torch::Tensor fake;
    {
        torch::NoGradGuard no_grad;
        fake = generator->forward(broadcast_concat(batch.images, targets - v)).translated;
    }
    const Critic critic = [this](const torch::Tensor& images) { return discriminator->critic(images); };
    DiscriminatorStepParts out;
    out.adv = adv_loss_D(critic, batch.images, fake, config_.weights.gp, torch_rng_);
    out.cls_r = cls_loss_real(discriminator->forward(batch.images).cls_logits, v);
    out.total = total_loss_D({out.adv.value, out.cls_r}, config_.weights);
    return out;
}

double StdgnTrainer::clip_gradients(const std::vector<torch::optim::OptimizerParamGroup>& groups) const {
    std::vector<torch::Tensor> params;
    for (const auto& g : groups) params.insert(params.end(), g.params().begin(), g.params().end());
    const double cap = config_.grad_clip > 0 ? config_.grad_clip : std::numeric_limits<double>::infinity();
    return torch::nn::utils::clip_grad_norm_(params, cap);
}

void StdgnTrainer::check_finite(const std::map<std::string, double>& values) const {
    for (const auto& [name, v] : values) {
        if (!std::isfinite(v)) {
            throw TrainingError("non-finite loss part '" + name + "' at iteration " + std::to_string(iteration_));
        }
    }
}

std::map<std::string, double> StdgnTrainer::train_step_G(const Batch& batch) {
    set_requires_grad(*discriminator, false);
    opt_g_->zero_grad();
    const double w_lab = current_rec_lab_weight();
    const auto targets = draw_targets(batch);
    GeneratorStepParts p = generator_parts(batch, targets, w_lab);
    std::map<std::string, double> v{
        {"g_adv", scalar(p.parts.adv)},        {"g_cls_f", scalar(p.parts.cls_f)},
        {"g_rec_img", scalar(p.parts.rec_img)}, {"g_seg_cr", scalar(p.seg.cr)},
        {"g_seg_sr", scalar(p.seg.sr)},        {"g_seg_sc", scalar(p.seg.sc)},
        {"g_seg", scalar(p.parts.seg)},        {"g_lab_cr", scalar(p.rec_lab.cr)},
        {"g_lab_sr", scalar(p.rec_lab.sr)},    {"g_lab_sc", scalar(p.rec_lab.sc)},
        {"g_rec_lab", scalar(p.parts.rec_lab)}, {"g_total", scalar(p.total)}};
    v["g_w_cls_f"] = config_.weights.cls * v["g_cls_f"];
    v["g_w_rec_img"] = config_.weights.rec_img * v["g_rec_img"];
    v["g_w_seg"] = config_.weights.seg * v["g_seg"];
    v["g_w_rec_lab"] = w_lab * v["g_rec_lab"];
    try {
        check_finite(v);
    } catch (...) {
        set_requires_grad(*discriminator, true);
        throw;
    }
    p.total.backward();
    v["g_grad_norm"] = clip_gradients(opt_g_->param_groups());
    opt_g_->step();
    set_requires_grad(*discriminator, true);
    return v;
}

std::map<std::string, double> StdgnTrainer::train_step_D(const Batch& batch) {
    opt_d_->zero_grad();
    const auto targets = draw_targets(batch);
    DiscriminatorStepParts p = discriminator_parts(batch, targets);
    std::map<std::string, double> v{{"d_real", scalar(p.adv.real_mean)}, {"d_fake", scalar(p.adv.fake_mean)},
                                    {"d_gp", scalar(p.adv.penalty)},     {"d_adv", scalar(p.adv.value)},
                                    {"d_cls_r", scalar(p.cls_r)},        {"d_total", scalar(p.total)}};
    v["d_w_gp"] = config_.weights.gp * v["d_gp"];
    v["d_w_cls_r"] = config_.weights.cls * v["d_cls_r"];
    check_finite(v);
    p.total.backward();
    v["d_grad_norm"] = clip_gradients(opt_d_->param_groups());
    opt_d_->step();
    return v;
}

std::vector<EvalRecord> StdgnTrainer::validate() {
    if (val_indices_.empty()) return {};
    GeneratorSegmenter seg(generator, config_.image_size);
    auto records = evaluate_dataset(seg, *dataset_, val_indices_);
    generator->train();
    return records;
}

void StdgnTrainer::run(std::optional<std::int64_t> stop_at) {
    const std::int64_t limit = std::min(stop_at.value_or(config_.total_iterations), config_.total_iterations);
    generator->train();
    scn->train();
    discriminator->train();
    while (iteration_ < limit) {
        const double lr = current_lr();
        set_lr(lr);
        IterationLog log;
        log.iteration = iteration_;
        log.epoch = stream_.epoch();
        const OptimPhase phase = current_phase();
        const Batch batch = stream_.next();

        if (config_.alternation == AlternationMode::Interleave) {
            log.phase = "DG";
            log.values = train_step_D(batch);
            for (const auto& [k, v] : train_step_G(batch)) log.values[k] = v;
        } else if (phase == OptimPhase::TrainG) {
            log.phase = "G";
            log.values = train_step_G(batch);
        } else {
            log.phase = "D";
            log.values = train_step_D(batch);
        }
        log.values["lr"] = lr;
        log.values["lambda_rec_lab"] = current_rec_lab_weight();
        ++iteration_;

        const bool last = iteration_ == config_.total_iterations;
        if ((config_.val_every > 0 && iteration_ % config_.val_every == 0) || last) {
            const auto dice = mean_dice_by_structure(validate());
            log.values["val_dice_lv"] = dice[0];
            log.values["val_dice_myo"] = dice[1];
            log.values["val_dice_rv"] = dice[2];
        }
        history_.push_back(log);
        if (sink_) sink_(history_.back());
        if (hook_) hook_(*this);
    }
}

void StdgnTrainer::save_checkpoint(const std::filesystem::path& path) {
    CheckpointWriter w;
    w.put_string("kind", "stdgn");
    w.put_string("config", config_.to_kv().dump());
    w.put_int("modality_dim", modality_dim_);
    w.put_int("iteration", iteration_);
    w.put_int("stream_epoch", stream_.cursor().epoch);
    w.put_int("stream_batch", stream_.cursor().batch);
    w.put_rng("rng_targets", target_rng_);
    w.put_rng("rng_torch", torch_rng_);
    w.put_module("generator", *generator);
    w.put_module("scn", *scn);
    w.put_module("discriminator", *discriminator);
    w.put_module("srn", *srn);
    w.put_optimizer("opt_g", *opt_g_);
    w.put_optimizer("opt_d", *opt_d_);
    std::string hist;
    for (const auto& row : history_) hist += row.to_csv_row();
    w.put_string("history", hist);
    w.save(path);
}

std::unique_ptr<StdgnTrainer> StdgnTrainer::resume(const std::filesystem::path& path, const DomainDataset& dataset) {
    CheckpointReader r(path);
    if (r.get_string("kind") != "stdgn") throw std::runtime_error(path.string() + ": not an STDGN training checkpoint");
    const TrainConfig config = TrainConfig::from_kv(KeyValueConfig::parse(r.get_string("config"), path.string()));
    if (r.get_int("modality_dim") != dataset.modality_dim()) {
        throw std::runtime_error(path.string() + ": checkpoint modality dimension does not match the dataset");
    }
    ShapeReconstructionNet srn(srn_config(config));
    auto trainer = std::make_unique<StdgnTrainer>(config, dataset, srn);
    r.load_module("generator", *trainer->generator);
    r.load_module("scn", *trainer->scn);
    r.load_module("discriminator", *trainer->discriminator);
    r.load_module("srn", *trainer->srn);
    set_requires_grad(*trainer->srn, false);
    r.load_optimizer("opt_g", *trainer->opt_g_);
    r.load_optimizer("opt_d", *trainer->opt_d_);
    r.load_rng("rng_targets", trainer->target_rng_);
    r.load_rng("rng_torch", trainer->torch_rng_);
    trainer->iteration_ = r.get_int("iteration");
    trainer->stream_.seek({r.get_int("stream_epoch"), r.get_int("stream_batch")});
    std::istringstream hist(r.get_string("history"));
    std::string line;
    while (std::getline(hist, line)) {
        if (!line.empty()) trainer->history_.push_back(parse_log_row(line));
    }
    return trainer;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

void save_baseline(const std::filesystem::path& path, const TrainConfig& config, BaselineUNet model) {
    CheckpointWriter w;
    w.put_string("kind", "baseline");
    w.put_string("config", config.to_kv().dump());
    w.put_module("unet", *model);
    w.save(path);
}

BaselineUNet load_baseline(const std::filesystem::path& path) {
    CheckpointReader r(path);
    if (r.get_string("kind") != "baseline") throw std::runtime_error(path.string() + ": not a baseline checkpoint");
    const auto config = TrainConfig::from_kv(KeyValueConfig::parse(r.get_string("config"), path.string()));
    BaselineUNet net(baseline_config(config));
    r.load_module("unet", *net);
    net->eval();
    return net;
}

void save_srn(const std::filesystem::path& path, const TrainConfig& config, ShapeReconstructionNet model) {
    CheckpointWriter w;
    w.put_string("kind", "srn");
    w.put_string("config", config.to_kv().dump());
    w.put_module("srn", *model);
    w.save(path);
}

ShapeReconstructionNet load_srn(const std::filesystem::path& path) {
    CheckpointReader r(path);
    if (r.get_string("kind") != "srn") throw std::runtime_error(path.string() + ": not an SRN checkpoint");
    const auto config = TrainConfig::from_kv(KeyValueConfig::parse(r.get_string("config"), path.string()));
    ShapeReconstructionNet net(srn_config(config));
    r.load_module("srn", *net);
    set_requires_grad(*net, false);
    net->eval();
    return net;
}

std::pair<Generator, TrainConfig> load_generator(const std::filesystem::path& path) {
    CheckpointReader r(path);
    if (r.get_string("kind") != "stdgn") throw std::runtime_error(path.string() + ": not an STDGN checkpoint");
    const auto config = TrainConfig::from_kv(KeyValueConfig::parse(r.get_string("config"), path.string()));
    Generator g(generator_config(config, static_cast<int>(r.get_int("modality_dim"))));
    r.load_module("generator", *g);
    g->eval();
    return {g, config};
}

std::unique_ptr<Segmenter> load_segmenter(const std::filesystem::path& path) {
    std::string kind;
    TrainConfig config;
    {
        CheckpointReader r(path);
        kind = r.get_string("kind");
        config = TrainConfig::from_kv(KeyValueConfig::parse(r.get_string("config"), path.string()));
    }
    if (kind == "baseline") return std::make_unique<UNetSegmenter>(load_baseline(path), config.image_size);
    if (kind == "stdgn") {
        auto [g, cfg] = load_generator(path);
        return std::make_unique<GeneratorSegmenter>(g, cfg.image_size);
    }
    throw std::runtime_error(path.string() + ": checkpoint kind '" + kind + "' cannot segment");
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

TrainOutcome train(const TrainConfig& config, const DomainDataset& dataset, const TrainPaths& paths) {
    namespace fs = std::filesystem;
    fs::create_directories(paths.out_dir);

    std::unique_ptr<StdgnTrainer> trainer;
    if (paths.resume) {
        trainer = StdgnTrainer::resume(*paths.resume, dataset);
    } else {
        ShapeReconstructionNet srn{nullptr};
        if (paths.srn) {
            srn = load_srn(*paths.srn);
        } else {
            BaselineUNet baseline = paths.baseline ? load_baseline(*paths.baseline) : BaselineUNet{nullptr};
            if (!paths.baseline) {
                baseline = train_baseline_unet(config, dataset).model;
                save_baseline(paths.out_dir / "baseline.ckpt", config, baseline);
            }
            srn = pretrain_srn(config, dataset, baseline).model;
            save_srn(paths.out_dir / "srn.ckpt", config, srn);
        }
        trainer = std::make_unique<StdgnTrainer>(config, dataset, srn);
    }

    TrainOutcome outcome;
    outcome.metrics_csv = paths.out_dir / "metrics.csv";
    std::ofstream csv(outcome.metrics_csv, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + outcome.metrics_csv.string());
    csv << metrics_csv_header();
    for (const auto& row : trainer->history()) csv << row.to_csv_row();
    csv.flush();
    trainer->set_metrics_sink([&csv](const IterationLog& row) { csv << row.to_csv_row() << std::flush; });

    const std::int64_t every = trainer->config().checkpoint_every;
    trainer->set_iteration_hook([&](StdgnTrainer& t) {
        if (every > 0 && t.iteration() % every == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "ckpt_%06lld.ckpt", static_cast<long long>(t.iteration()));
            t.save_checkpoint(paths.out_dir / name);
        }
    });
    trainer->run();

    outcome.final_checkpoint = paths.out_dir / "final.ckpt";
    trainer->save_checkpoint(outcome.final_checkpoint);
    outcome.history = trainer->history();
    return outcome;
}

}  // namespace stdgn

#include <cmath>
#include <cstdio>
#include <set>

#include "stdgn/training.hpp"

namespace stdgn {

std::string_view optim_phase_name(OptimPhase p) { return p == OptimPhase::TrainG ? "G" : "D"; }

double lr_schedule(std::int64_t iteration, double lr0, std::int64_t step, double factor) {
    if (iteration < 0) throw std::invalid_argument("lr_schedule: negative iteration");
    if (step <= 0) throw std::invalid_argument("lr_schedule: step must be positive");
    const auto drops = static_cast<double>(iteration / step);
    return lr0 * std::pow(factor, -drops);
}

double lambda_ramp(std::int64_t iteration, std::int64_t total, double max, double ramp_fraction) {
    const double ramp_end = ramp_fraction * static_cast<double>(total);
    if (ramp_end <= 0.0) return max;
    const double t = static_cast<double>(iteration) / ramp_end;
    return t >= 1.0 ? max : max * std::max(0.0, t);
}

OptimPhase alternation_controller(std::int64_t epoch, int period) {
    if (period < 1) throw std::invalid_argument("alternation period must be >= 1");
    return (epoch / period) % 2 == 0 ? OptimPhase::TrainG : OptimPhase::TrainD;
}

namespace {

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "seed", "lr", "lr_step", "lr_decay_factor", "momentum", "weight_decay", "grad_clip", "batch_size", "alternation",
        "alternation_period", "total_iterations", "lambda_rec_lab_max", "lambda_ramp_fraction", "lambda_gp",
        "lambda_cls", "lambda_seg", "lambda_rec_img", "lambda_sr", "lambda_sc", "target_policy", "dirichlet_alpha",
        "image_size", "base_width", "depth", "se_reduction", "disc_base_width", "disc_layers", "srn_base_width",
        "scn_hidden", "baseline_iterations", "baseline_lr", "srn_epochs", "srn_lr", "checkpoint_every", "val_every",
        "val_max_stacks"};
    return keys;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr > 0) || !(baseline_lr > 0) || !(srn_lr > 0)) throw std::invalid_argument("learning rates must be positive");
    if (lr_step <= 0 || !(lr_decay_factor > 0)) throw std::invalid_argument("lr schedule parameters must be positive");
    if (!(momentum >= 0) || !(weight_decay >= 0)) throw std::invalid_argument("momentum/weight_decay must be >= 0");
    if (!(grad_clip >= 0)) throw std::invalid_argument("grad_clip must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (alternation_period < 1) throw std::invalid_argument("alternation_period must be >= 1");
    if (total_iterations < 0 || baseline_iterations < 0 || srn_epochs < 0) {
        throw std::invalid_argument("iteration counts must be >= 0");
    }
    if (!(lambda_rec_lab_max >= 0) || !(lambda_ramp_fraction >= 0)) throw std::invalid_argument("ramp must be >= 0");
    weights.validate();
    if (image_size % (1 << depth) != 0) throw std::invalid_argument("image_size must be divisible by 2^depth");
    if (image_size % 4 != 0) throw std::invalid_argument("image_size must be divisible by 4 for the SRN");
    if (checkpoint_every < 0 || val_every < 0) throw std::invalid_argument("intervals must be >= 0");
}

void TrainConfig::apply(const KeyValueConfig& kv) {
    for (const auto& [key, value] : kv.entries()) {
        if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(seed)));
    lr = kv.get_double("lr", lr);
    lr_step = kv.get_int("lr_step", lr_step);
    lr_decay_factor = kv.get_double("lr_decay_factor", lr_decay_factor);
    momentum = kv.get_double("momentum", momentum);
    weight_decay = kv.get_double("weight_decay", weight_decay);
    grad_clip = kv.get_double("grad_clip", grad_clip);
    batch_size = static_cast<int>(kv.get_int("batch_size", batch_size));
    if (auto a = kv.raw("alternation")) {
        if (*a == "block") {
            alternation = AlternationMode::Block;
        } else if (*a == "interleave") {
            alternation = AlternationMode::Interleave;
        } else {
            throw ConfigError("alternation must be 'block' or 'interleave'");
        }
    }
    alternation_period = static_cast<int>(kv.get_int("alternation_period", alternation_period));
    total_iterations = kv.get_int("total_iterations", total_iterations);
    lambda_rec_lab_max = kv.get_double("lambda_rec_lab_max", lambda_rec_lab_max);
    lambda_ramp_fraction = kv.get_double("lambda_ramp_fraction", lambda_ramp_fraction);
    weights.gp = kv.get_double("lambda_gp", weights.gp);
    weights.cls = kv.get_double("lambda_cls", weights.cls);
    weights.seg = kv.get_double("lambda_seg", weights.seg);
    weights.rec_img = kv.get_double("lambda_rec_img", weights.rec_img);
    weights.sr = kv.get_double("lambda_sr", weights.sr);
    weights.sc = kv.get_double("lambda_sc", weights.sc);
    weights.rec_lab = lambda_rec_lab_max;
    if (auto p = kv.raw("target_policy")) {
        if (*p == "onehot") {
            target_policy = TargetPolicy::OneHot;
        } else if (*p == "soft") {
            target_policy = TargetPolicy::Soft;
        } else {
            throw ConfigError("target_policy must be 'onehot' or 'soft'");
        }
    }
    dirichlet_alpha = kv.get_double("dirichlet_alpha", dirichlet_alpha);
    image_size = static_cast<int>(kv.get_int("image_size", image_size));
    base_width = static_cast<int>(kv.get_int("base_width", base_width));
    depth = static_cast<int>(kv.get_int("depth", depth));
    se_reduction = static_cast<int>(kv.get_int("se_reduction", se_reduction));
    disc_base_width = static_cast<int>(kv.get_int("disc_base_width", disc_base_width));
    disc_layers = static_cast<int>(kv.get_int("disc_layers", disc_layers));
    srn_base_width = static_cast<int>(kv.get_int("srn_base_width", srn_base_width));
    scn_hidden = static_cast<int>(kv.get_int("scn_hidden", scn_hidden));
    baseline_iterations = kv.get_int("baseline_iterations", baseline_iterations);
    baseline_lr = kv.get_double("baseline_lr", baseline_lr);
    srn_epochs = static_cast<int>(kv.get_int("srn_epochs", srn_epochs));
    srn_lr = kv.get_double("srn_lr", srn_lr);
    checkpoint_every = kv.get_int("checkpoint_every", checkpoint_every);
    val_every = kv.get_int("val_every", val_every);
    val_max_stacks = static_cast<int>(kv.get_int("val_max_stacks", val_max_stacks));
}

KeyValueConfig TrainConfig::to_kv() const {
    KeyValueConfig kv;
    kv.set("seed", std::to_string(seed));
    kv.set("lr", exact(lr));
    kv.set("lr_step", std::to_string(lr_step));
    kv.set("lr_decay_factor", exact(lr_decay_factor));
    kv.set("momentum", exact(momentum));
    kv.set("weight_decay", exact(weight_decay));
    kv.set("grad_clip", exact(grad_clip));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("alternation", alternation == AlternationMode::Block ? "block" : "interleave");
    kv.set("alternation_period", std::to_string(alternation_period));
    kv.set("total_iterations", std::to_string(total_iterations));
    kv.set("lambda_rec_lab_max", exact(lambda_rec_lab_max));
    kv.set("lambda_ramp_fraction", exact(lambda_ramp_fraction));
    kv.set("lambda_gp", exact(weights.gp));
    kv.set("lambda_cls", exact(weights.cls));
    kv.set("lambda_seg", exact(weights.seg));
    kv.set("lambda_rec_img", exact(weights.rec_img));
    kv.set("lambda_sr", exact(weights.sr));
    kv.set("lambda_sc", exact(weights.sc));
    kv.set("target_policy", target_policy == TargetPolicy::OneHot ? "onehot" : "soft");
    kv.set("dirichlet_alpha", exact(dirichlet_alpha));
    kv.set("image_size", std::to_string(image_size));
    kv.set("base_width", std::to_string(base_width));
    kv.set("depth", std::to_string(depth));
    kv.set("se_reduction", std::to_string(se_reduction));
    kv.set("disc_base_width", std::to_string(disc_base_width));
    kv.set("disc_layers", std::to_string(disc_layers));
    kv.set("srn_base_width", std::to_string(srn_base_width));
    kv.set("scn_hidden", std::to_string(scn_hidden));
    kv.set("baseline_iterations", std::to_string(baseline_iterations));
    kv.set("baseline_lr", exact(baseline_lr));
    kv.set("srn_epochs", std::to_string(srn_epochs));
    kv.set("srn_lr", exact(srn_lr));
    kv.set("checkpoint_every", std::to_string(checkpoint_every));
    kv.set("val_every", std::to_string(val_every));
    kv.set("val_max_stacks", std::to_string(val_max_stacks));
    return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValueConfig& kv) {
    TrainConfig c;
    c.apply(kv);
    return c;
}

}  // namespace stdgn

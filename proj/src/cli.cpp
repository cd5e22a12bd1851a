#include "stdgn/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "stdgn/dataset_io.hpp"
#include "stdgn/evaluation.hpp"
#include "stdgn/experiment.hpp"
#include "stdgn/phantom.hpp"
#include "stdgn/training.hpp"

namespace stdgn::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Options shared by every command that builds a TrainConfig.
struct TrainFlags {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<long long> seed;
    std::optional<long long> iterations;
    std::optional<int> batch_size;
    std::optional<double> lr;
    std::optional<int> image_size;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides, "config override key=value (repeatable)");
        cmd->add_option("--seed", seed, "random seed (fallback: STDGN_SEED)");
        cmd->add_option("--iterations", iterations, "total_iterations");
        cmd->add_option("--batch-size", batch_size, "batch_size");
        cmd->add_option("--lr", lr, "initial learning rate");
        cmd->add_option("--image-size", image_size, "image_size");
    }

    /// defaults < file < flags; STDGN_SEED applies only when nothing else set the seed.
    [[nodiscard]] TrainConfig resolve() const {
        KeyValueConfig kv;
        if (!config_file.empty()) kv = KeyValueConfig::load(config_file);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + o + "'");
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t") + 1);
                return s;
            };
            kv.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
        }
        if (seed) kv.set("seed", std::to_string(*seed));
        if (iterations) kv.set("total_iterations", std::to_string(*iterations));
        if (batch_size) kv.set("batch_size", std::to_string(*batch_size));
        if (lr) {
            std::ostringstream s;
            s.precision(17);
            s << *lr;
            kv.set("lr", s.str());
        }
        if (image_size) kv.set("image_size", std::to_string(*image_size));
        if (!kv.contains("seed")) {
            if (const char* env = std::getenv("STDGN_SEED")) kv.set("seed", env);
        }
        TrainConfig cfg = TrainConfig::from_kv(kv);
        cfg.validate();
        return cfg;
    }
};

std::string command_line(const std::vector<std::string>& args) {
    std::string s = "stdgn";
    for (const auto& a : args) s += " " + a;
    return s;
}

/// Writes `out/resolved_config.cfg`: the invocation as a comment plus every resolved key.
void echo_config(const fs::path& out, const std::vector<std::string>& args, const KeyValueConfig& kv) {
    fs::create_directories(out);
    write_text(out / "resolved_config.cfg", "# " + command_line(args) + "\n" + kv.dump());
}

std::vector<std::size_t> split_indices(const DomainDataset& ds, const std::string& split) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        if (split == "all" || split_name(ds.records[i].split) == split) idx.push_back(i);
    }
    return idx;
}

int square_side(const fs::path& image) {
    const auto bytes = fs::file_size(image);
    const auto side = static_cast<std::uintmax_t>(std::llround(std::sqrt(static_cast<double>(bytes / 4))));
    if (bytes % 4 != 0 || side * side * 4 != bytes) {
        throw std::runtime_error(image.string() + ": size " + std::to_string(bytes) +
                                 " bytes is not a square float32 image");
    }
    return static_cast<int>(side);
}

std::vector<GroupKey> parse_group_by(const std::string& spec) {
    std::vector<GroupKey> keys;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            keys.push_back(parse_group_key(item));
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    return keys;
}

std::string format_table(const ReportTable& t) { return t.to_csv(); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Style-transfer domain-generalization segmentation on cardiac MR style slices", "stdgn"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every command");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate the four-domain phantom benchmark");
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    std::string gen_out;
    std::string gen_config;
    int gen_size = 64, gen_subjects = 6, gen_test = 2, gen_slices = 7;
    gen->add_option("--seed", gen_seed, "generator seed (fallback: STDGN_SEED)")
        ->each([&](const std::string&) { gen_seed_set = true; });
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--config", gen_config, "key = value file (seed, image_size, subjects, test_subjects, slices)")
        ->check(CLI::ExistingFile);
    auto* gen_size_opt = gen->add_option("--image-size", gen_size, "crop size");
    auto* gen_subj_opt = gen->add_option("--subjects", gen_subjects, "subjects per domain");
    auto* gen_test_opt = gen->add_option("--test-subjects", gen_test, "test subjects per source domain");
    auto* gen_slice_opt = gen->add_option("--slices", gen_slices, "slices per stack");

    // pretrain-baseline
    auto* pb = app.add_subcommand("pretrain-baseline", "train the cross-entropy U-Net baseline");
    TrainFlags pb_flags;
    std::string pb_data, pb_out;
    pb_flags.attach(pb);
    pb->add_option("--data", pb_data, "dataset directory or manifest")->required();
    pb->add_option("--out", pb_out, "output directory")->required();

    // pretrain-srn
    auto* ps = app.add_subcommand("pretrain-srn", "pretrain the shape reconstruction network");
    TrainFlags ps_flags;
    std::string ps_data, ps_out, ps_baseline;
    ps_flags.attach(ps);
    ps->add_option("--data", ps_data, "dataset directory or manifest")->required();
    ps->add_option("--baseline", ps_baseline, "baseline checkpoint")->required()->check(CLI::ExistingFile);
    ps->add_option("--out", ps_out, "output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train STDGN (pretraining stages run unless given)");
    TrainFlags tr_flags;
    std::string tr_data, tr_out, tr_baseline, tr_srn, tr_resume;
    tr_flags.attach(tr);
    tr->add_option("--data", tr_data, "dataset directory or manifest")->required();
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_option("--baseline", tr_baseline, "reuse a baseline checkpoint")->check(CLI::ExistingFile);
    tr->add_option("--srn", tr_srn, "reuse an SRN checkpoint")->check(CLI::ExistingFile);
    tr->add_option("--resume", tr_resume, "continue from a training checkpoint")->check(CLI::ExistingFile);
    tr->add_option("--checkpoint-every", tr_flags.overrides, "")->group("")->transform([](std::string v) {
        return "checkpoint_every=" + v;
    });

    // segment
    auto* sg = app.add_subcommand("segment", "write predicted label maps for a dataset split");
    std::string sg_model, sg_data, sg_out, sg_split = "test";
    bool sg_overlay = false;
    sg->add_option("--model", sg_model, "baseline or STDGN checkpoint")->required()->check(CLI::ExistingFile);
    sg->add_option("--data", sg_data, "dataset directory or manifest")->required();
    sg->add_option("--out", sg_out, "output directory")->required();
    sg->add_option("--split", sg_split, "train|test|all")->check(CLI::IsMember({"train", "test", "all"}));
    sg->add_flag("--overlays", sg_overlay, "also write PGM contour overlays");

    // translate
    auto* tl = app.add_subcommand("translate", "translate a float32 slice into another domain style");
    std::string tl_model, tl_image, tl_out = ".";
    int tl_target = 0, tl_source = 0;
    tl->add_option("--model", tl_model, "STDGN checkpoint")->required()->check(CLI::ExistingFile);
    tl->add_option("--image", tl_image, "square float32 .img file")->required()->check(CLI::ExistingFile);
    tl->add_option("--target", tl_target, "target domain index (K-1 is the fictitious domain)")->required();
    tl->add_option("--source", tl_source, "source domain index");
    tl->add_option("--out", tl_out, "output directory");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Dice/HD records per subject, phase and structure");
    std::string ev_model, ev_data, ev_out = ".", ev_split = "test";
    double ev_spacing = 1.0;
    ev->add_option("--model", ev_model, "baseline or STDGN checkpoint")->required()->check(CLI::ExistingFile);
    ev->add_option("--data", ev_data, "dataset directory or manifest")->required();
    ev->add_option("--split", ev_split, "train|test|all")->check(CLI::IsMember({"train", "test", "all"}));
    ev->add_option("--spacing", ev_spacing, "pixel spacing for HD")->check(CLI::PositiveNumber);
    ev->add_option("--out", ev_out, "output directory");

    // report
    auto* rp = app.add_subcommand("report", "aggregate record CSVs into mean/std tables");
    std::vector<std::string> rp_records;
    std::string rp_group = "method,structure", rp_out = ".";
    rp->add_option("--records", rp_records, "records CSV files")->required()->check(CLI::ExistingFile);
    rp->add_option("--group-by", rp_group, "comma list of method,vendor,center,phase,structure");
    rp->add_option("--out", rp_out, "output directory");

    // reproduce
    auto* rx = app.add_subcommand("reproduce", "baseline vs STDGN on the held-out phantom domain");
    TrainFlags rx_flags;
    std::string rx_out;
    std::vector<std::uint64_t> rx_seeds{0, 1, 2};
    rx_flags.attach(rx);
    rx->add_option("--seeds", rx_seeds, "experiment seeds")->delimiter(',');
    rx->add_option("--out", rx_out, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        err << "run 'stdgn --help' for usage\n";
        return kExitUsage;
    }

    try {
        if (*gen) {
            KeyValueConfig kv;
            if (!gen_config.empty()) kv = KeyValueConfig::load(gen_config);
            for (const auto& [k, v] : kv.entries()) {
                if (k != "seed" && k != "image_size" && k != "subjects" && k != "test_subjects" && k != "slices") {
                    throw UsageError("gen-data: unknown config key '" + k + "'");
                }
            }
            if (gen_seed_set) kv.set("seed", std::to_string(gen_seed));
            if (!kv.contains("seed")) kv.set("seed", std::getenv("STDGN_SEED") ? std::getenv("STDGN_SEED") : "0");
            if (gen_size_opt->count() || !kv.contains("image_size")) kv.set("image_size", std::to_string(gen_size));
            if (gen_subj_opt->count() || !kv.contains("subjects")) kv.set("subjects", std::to_string(gen_subjects));
            if (gen_test_opt->count() || !kv.contains("test_subjects")) kv.set("test_subjects", std::to_string(gen_test));
            if (gen_slice_opt->count() || !kv.contains("slices")) kv.set("slices", std::to_string(gen_slices));

            PhantomParams p = benchmark_phantom_params(static_cast<std::uint64_t>(kv.get_int("seed", 0)),
                                                       static_cast<int>(kv.get_int("image_size", 64)));
            p.num_subjects_per_domain = static_cast<int>(kv.get_int("subjects", 6));
            p.num_test_subjects_per_domain = static_cast<int>(kv.get_int("test_subjects", 2));
            p.num_slices = static_cast<int>(kv.get_int("slices", 7));
            const DomainDataset ds = generate_phantom_dataset(p);
            const auto manifest = save_dataset(ds, gen_out);
            echo_config(gen_out, args, kv);
            out << "wrote " << ds.records.size() << " slices to " << manifest.string() << "\n";
            return kExitOk;
        }
        if (*pb) {
            const TrainConfig cfg = pb_flags.resolve();
            const DomainDataset ds = load_dataset(pb_data);
            echo_config(pb_out, args, cfg.to_kv());
            const auto result = train_baseline_unet(cfg, ds);
            save_baseline(fs::path(pb_out) / "baseline.ckpt", cfg, result.model);
            out << "baseline: " << result.losses.size() << " iterations, final loss "
                << (result.losses.empty() ? 0.0 : result.losses.back()) << "\n";
            return kExitOk;
        }
        if (*ps) {
            const TrainConfig cfg = ps_flags.resolve();
            const DomainDataset ds = load_dataset(ps_data);
            echo_config(ps_out, args, cfg.to_kv());
            const auto result = pretrain_srn(cfg, ds, load_baseline(ps_baseline));
            save_srn(fs::path(ps_out) / "srn.ckpt", cfg, result.model);
            out << "srn: " << result.epoch_losses.size() << " epochs, final loss "
                << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\n";
            return kExitOk;
        }
        if (*tr) {
            const TrainConfig cfg = tr_flags.resolve();
            const DomainDataset ds = load_dataset(tr_data);
            TrainPaths paths;
            paths.out_dir = tr_out;
            if (!tr_baseline.empty()) paths.baseline = tr_baseline;
            if (!tr_srn.empty()) paths.srn = tr_srn;
            if (!tr_resume.empty()) paths.resume = tr_resume;
            echo_config(tr_out, args, cfg.to_kv());
            const auto outcome = train(cfg, ds, paths);
            out << "trained " << outcome.history.size() << " iterations; checkpoint " << outcome.final_checkpoint.string()
                << "\n";
            return kExitOk;
        }
        if (*sg) {
            auto model = load_segmenter(sg_model);
            const DomainDataset ds = load_dataset(sg_data);
            KeyValueConfig kv;
            kv.set("model", sg_model);
            kv.set("data", sg_data);
            kv.set("split", sg_split);
            echo_config(sg_out, args, kv);
            const fs::path dir = fs::path(sg_out) / "predictions";
            fs::create_directories(dir);
            const auto idx = split_indices(ds, sg_split);
            std::string index = "record,subject_id,phase,slice_index,file\n";
            for (std::size_t begin = 0; begin < idx.size(); begin += 16) {
                std::vector<const ImageSlice*> slices;
                const std::size_t end = std::min(idx.size(), begin + 16);
                for (std::size_t j = begin; j < end; ++j) slices.push_back(&ds.records[idx[j]].image);
                const auto pred = segment_volume(*model, slices);
                for (std::size_t j = begin; j < end; ++j) {
                    const auto& img = ds.records[idx[j]].image;
                    const std::string stem = img.subject_id + "_" + std::string(phase_name(img.phase)) + "_" +
                                             std::to_string(img.slice_index);
                    write_class_map(dir / (stem + ".lab"), pred[j - begin]);
                    if (sg_overlay) write_overlay_pgm(dir / (stem + ".pgm"), img.pixels, pred[j - begin]);
                    index += std::to_string(idx[j]) + "," + img.subject_id + "," + std::string(phase_name(img.phase)) +
                             "," + std::to_string(img.slice_index) + "," + stem + ".lab\n";
                }
            }
            write_text(fs::path(sg_out) / "predictions.csv", index);
            out << "segmented " << idx.size() << " slices\n";
            return kExitOk;
        }
        if (*tl) {
            auto [generator, cfg] = load_generator(tl_model);
            const int K = generator->config.modality_dim;
            if (tl_target < 0 || tl_target >= K || tl_source < 0 || tl_source >= K) {
                throw UsageError("domain indices must lie in [0, " + std::to_string(K) + ")");
            }
            const int side = square_side(tl_image);
            if (side != cfg.image_size) {
                throw std::runtime_error("image is " + std::to_string(side) + "x" + std::to_string(side) +
                                         ", model expects " + std::to_string(cfg.image_size));
            }
            ImageSlice slice;
            slice.pixels = read_float_image(tl_image, side, side);
            const auto diff = modality_difference(encode_modality(tl_source, K), encode_modality(tl_target, K));
            torch::Tensor translated;
            {
                torch::NoGradGuard no_grad;
                translated = generator->forward(broadcast_concat(slice, diff).unsqueeze(0)).translated.contiguous();
            }
            ImageF result(side, side);
            std::memcpy(result.data.data(), translated.data_ptr<float>(), result.data.size() * sizeof(float));
            KeyValueConfig kv;
            kv.set("model", tl_model);
            kv.set("image", tl_image);
            kv.set("source", std::to_string(tl_source));
            kv.set("target", std::to_string(tl_target));
            echo_config(tl_out, args, kv);
            const fs::path dst =
                fs::path(tl_out) / (fs::path(tl_image).stem().string() + "_to" + std::to_string(tl_target) + ".img");
            write_float_image(dst, result);
            out << "wrote " << dst.string() << "\n";
            return kExitOk;
        }
        if (*ev) {
            auto model = load_segmenter(ev_model);
            const DomainDataset ds = load_dataset(ev_data);
            KeyValueConfig kv;
            kv.set("model", ev_model);
            kv.set("data", ev_data);
            kv.set("split", ev_split);
            kv.set("spacing", std::to_string(ev_spacing));
            echo_config(ev_out, args, kv);
            const auto records = evaluate_dataset(*model, ds, split_indices(ds, ev_split), ev_spacing);
            write_text(fs::path(ev_out) / "records.csv", records_to_csv(records));
            const auto d = mean_dice_by_structure(records);
            out << records.size() << " records; mean Dice LV " << d[0] << " Myo " << d[1] << " RV " << d[2] << "\n";
            return kExitOk;
        }
        if (*rp) {
            const auto keys = parse_group_by(rp_group);
            std::vector<EvalRecord> records;
            for (const auto& f : rp_records) {
                const auto part = records_from_csv(read_text(f));
                records.insert(records.end(), part.begin(), part.end());
            }
            KeyValueConfig kv;
            std::string files;
            for (const auto& f : rp_records) files += (files.empty() ? "" : ",") + f;
            kv.set("records", files);
            kv.set("group_by", rp_group);
            echo_config(rp_out, args, kv);
            const std::string table = format_table(report(records, keys));
            write_text(fs::path(rp_out) / "report.csv", table);
            out << table;
            return kExitOk;
        }
        if (*rx) {
            ExperimentConfig ec;
            ec.train = rx_flags.resolve();
            ec.seeds = rx_seeds;
            ec.out_dir = rx_out;
            ec.verbose = true;
            KeyValueConfig kv = ec.train.to_kv();
            echo_config(rx_out, args, kv);
            const auto rep = reproduce_generalization_experiment(ec);
            out << rep.table.to_csv() << rep.summary();
            out << "STDGN >= U-Net on the unseen domain in " << rep.stdgn_wins() << " of " << rep.seeds.size()
                << " seeds\n";
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace stdgn::cli

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stdgn/evaluation.hpp"
#include "stdgn/training.hpp"

namespace stdgn {

struct ExperimentConfig {
    TrainConfig train;
    std::vector<std::uint64_t> seeds{0, 1, 2};
    /// When set, per-seed models and record CSVs are written here.
    std::optional<std::filesystem::path> out_dir;
    bool verbose = false;
};

struct SeedResult {
    std::uint64_t seed = 0;
    std::array<double, 3> baseline_unseen{};
    std::array<double, 3> stdgn_unseen{};
    std::array<double, 3> baseline_seen{};
    std::array<double, 3> stdgn_seen{};
    double seconds = 0.0;

    [[nodiscard]] static double mean(const std::array<double, 3>& d) { return (d[0] + d[1] + d[2]) / 3.0; }
};

struct ExperimentReport {
    /// Unseen-domain records of both methods over all seeds.
    std::vector<EvalRecord> unseen_records;
    std::vector<EvalRecord> seen_records;
    /// Method x structure rows on the unseen domain.
    ReportTable table;
    std::vector<SeedResult> seeds;

    /// Seeds where STDGN's unseen mean Dice >= the baseline's.
    [[nodiscard]] int stdgn_wins() const;
    [[nodiscard]] std::string summary() const;
};

/// Trains the baseline U-Net and STDGN on the phantom benchmark (A, B labeled, C
/// unlabeled) for each seed and evaluates both on held-out domain D and on the
/// test subjects of the seen domains.
ExperimentReport reproduce_generalization_experiment(const ExperimentConfig& config);

}  // namespace stdgn

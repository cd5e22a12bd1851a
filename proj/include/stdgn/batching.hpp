#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <torch/torch.h>

#include "stdgn/data_pipeline.hpp"

namespace stdgn {

struct Batch {
    torch::Tensor images;      ///< [B,1,H,W] float
    torch::Tensor labels;      ///< [B,H,W] int64; zeros where unlabeled
    torch::Tensor label_mask;  ///< [B] bool
    torch::Tensor domain;      ///< [B] int64 source domain index
    torch::Tensor positions;   ///< [B] float
    std::vector<std::size_t> record_indices;

    [[nodiscard]] long size() const { return images.size(0); }
};

/// One epoch: a seeded permutation of [0, n) cut into consecutive batches.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, std::mt19937_64& rng);

Batch collate(const DomainDataset& dataset, const std::vector<std::size_t>& record_indices);

/// Endless epoch stream over a fixed subset of records. Each epoch's order
/// depends only on (seed, epoch), so the cursor alone is enough to resume.
class BatchStream {
public:
    struct Cursor {
        std::int64_t epoch = 0;
        std::int64_t batch = 0;
    };

    BatchStream(const DomainDataset& dataset, std::vector<std::size_t> subset, int batch_size, std::uint64_t seed);

    Batch next();

    [[nodiscard]] Cursor cursor() const { return cursor_; }
    void seek(Cursor c);
    [[nodiscard]] std::size_t batches_per_epoch() const;
    [[nodiscard]] std::int64_t epoch() const { return cursor_.epoch; }

private:
    void load_epoch(std::int64_t epoch);

    const DomainDataset* dataset_;
    std::vector<std::size_t> subset_;
    int batch_size_;
    std::uint64_t seed_;
    Cursor cursor_;
    std::int64_t loaded_epoch_ = -1;
    std::vector<std::vector<std::size_t>> epoch_batches_;
};

}  // namespace stdgn

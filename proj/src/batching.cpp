#include "stdgn/batching.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace stdgn {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, int batch_size, std::mt19937_64& rng) {
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    if (n == 0) throw std::invalid_argument("make_batches: empty dataset");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Explicit Fisher-Yates: std::shuffle's draw pattern is library-specific.
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng() % (i + 1);
        std::swap(order[i], order[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
    }
    return batches;
}

Batch collate(const DomainDataset& dataset, const std::vector<std::size_t>& record_indices) {
    if (record_indices.empty()) throw std::invalid_argument("collate: empty batch");
    const auto& first = dataset.records.at(record_indices.front()).image.pixels;
    const long B = static_cast<long>(record_indices.size());
    const long H = first.height, W = first.width;

    Batch b;
    b.images = torch::empty({B, 1, H, W}, torch::kFloat);
    b.labels = torch::zeros({B, H, W}, torch::kLong);
    b.label_mask = torch::zeros({B}, torch::kBool);
    b.domain = torch::empty({B}, torch::kLong);
    b.positions = torch::empty({B}, torch::kFloat);
    b.record_indices = record_indices;

    auto labels = b.labels.accessor<std::int64_t, 3>();
    for (long i = 0; i < B; ++i) {
        const auto& r = dataset.records.at(record_indices[i]);
        const auto& px = r.image.pixels;
        if (px.height != H || px.width != W) throw std::invalid_argument("collate: mixed slice shapes in batch");
        std::memcpy(b.images[i].data_ptr<float>(), px.data.data(), px.data.size() * sizeof(float));
        if (r.label.is_labeled) {
            b.label_mask[i] = true;
            for (long y = 0; y < H; ++y)
                for (long x = 0; x < W; ++x) labels[i][y][x] = r.label.classes(static_cast<int>(y), static_cast<int>(x));
        }
        b.domain[i] = r.domain_index;
        b.positions[i] = static_cast<float>(r.position);
    }
    return b;
}

BatchStream::BatchStream(const DomainDataset& dataset, std::vector<std::size_t> subset, int batch_size,
                         std::uint64_t seed)
    : dataset_(&dataset), subset_(std::move(subset)), batch_size_(batch_size), seed_(seed) {
    if (subset_.empty()) throw std::invalid_argument("BatchStream: empty record subset");
    if (batch_size_ < 1) throw std::invalid_argument("BatchStream: batch_size must be >= 1");
}

std::size_t BatchStream::batches_per_epoch() const {
    return (subset_.size() + static_cast<std::size_t>(batch_size_) - 1) / static_cast<std::size_t>(batch_size_);
}

void BatchStream::load_epoch(std::int64_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    epoch_batches_ = make_batches(subset_.size(), batch_size_, rng);
    for (auto& batch : epoch_batches_)
        for (auto& i : batch) i = subset_[i];
    loaded_epoch_ = epoch;
}

void BatchStream::seek(Cursor c) {
    if (c.epoch < 0 || c.batch < 0 || static_cast<std::size_t>(c.batch) >= batches_per_epoch()) {
        throw std::invalid_argument("BatchStream::seek: cursor out of range");
    }
    cursor_ = c;
}

Batch BatchStream::next() {
    if (loaded_epoch_ != cursor_.epoch) load_epoch(cursor_.epoch);
    Batch b = collate(*dataset_, epoch_batches_[static_cast<std::size_t>(cursor_.batch)]);
    if (static_cast<std::size_t>(++cursor_.batch) == epoch_batches_.size()) {
        cursor_.batch = 0;
        ++cursor_.epoch;
    }
    return b;
}

}  // namespace stdgn

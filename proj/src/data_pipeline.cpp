#include "stdgn/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace stdgn {

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

double slice_position(int slice_index, int num_slices) {
    if (num_slices <= 1) return 0.0;
    const double half = (num_slices - 1) / 2.0;
    return (slice_index - half) / half;
}

int DomainDataset::num_source_domains() const {
    return static_cast<int>(std::count_if(domains.begin(), domains.end(), [](const DomainInfo& d) { return !d.held_out; }));
}

std::vector<std::size_t> DomainDataset::select(Split split, bool source_only, bool labeled_only) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.split != split) continue;
        if (source_only && domains.at(r.domain_index).held_out) continue;
        if (labeled_only && !r.label.is_labeled) continue;
        out.push_back(i);
    }
    return out;
}

void DomainDataset::validate() const {
    // Source domains occupy the leading indices so their codes are dense in [0, N-1].
    bool seen_held_out = false;
    for (const auto& d : domains) {
        if (d.held_out) {
            seen_held_out = true;
        } else if (seen_held_out) {
            throw std::invalid_argument("source domains must precede held-out domains");
        }
    }
    for (const auto& r : records) {
        if (r.domain_index < 0 || r.domain_index >= static_cast<int>(domains.size())) {
            throw std::invalid_argument("record " + r.image.subject_id + ": domain index out of range");
        }
        const auto& dom = domains[r.domain_index];
        if (dom.held_out && r.split == Split::Train) {
            throw std::invalid_argument("record " + r.image.subject_id + ": held-out domain in training split");
        }
        if (!dom.labeled && r.split == Split::Train && r.label.is_labeled) {
            throw std::invalid_argument("record " + r.image.subject_id + ": labeled record in unlabeled domain");
        }
        const auto& px = r.image.pixels;
        if (r.label.is_labeled && (r.label.classes.height != px.height || r.label.classes.width != px.width)) {
            throw std::invalid_argument("record " + r.image.subject_id + ": label shape mismatch");
        }
        if (r.image.slice_index < 0 || r.image.slice_index >= r.image.num_slices) {
            throw std::invalid_argument("record " + r.image.subject_id + ": slice index out of range");
        }
    }
}

ImageF zscore_normalize(const ImageF& pixels) {
    if (pixels.empty()) {
        throw std::invalid_argument("zscore_normalize: empty image");
    }
    const double n = static_cast<double>(pixels.size());
    double mean = 0.0;
    for (float v : pixels.data) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : pixels.data) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);

    ImageF out(pixels.height, pixels.width, 0.0f);
    if (sd < 1e-8) return out;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        out.data[i] = static_cast<float>((pixels.data[i] - mean) / sd);
    }
    return out;
}

template <typename T>
Image2D<T> center_crop(const Image2D<T>& pixels, int size, PixelCoord center) {
    if (size <= 0) throw std::invalid_argument("center_crop: size must be positive");
    if (pixels.empty()) throw std::invalid_argument("center_crop: empty image");
    const T fill = *std::min_element(pixels.data.begin(), pixels.data.end());
    Image2D<T> out(size, size, fill);
    const int top = center.row - size / 2;
    const int left = center.col - size / 2;
    for (int r = 0; r < size; ++r) {
        const int sr = top + r;
        if (sr < 0 || sr >= pixels.height) continue;
        for (int c = 0; c < size; ++c) {
            const int sc = left + c;
            if (sc < 0 || sc >= pixels.width) continue;
            out(r, c) = pixels(sr, sc);
        }
    }
    return out;
}

template Image2D<float> center_crop(const Image2D<float>&, int, PixelCoord);
template Image2D<std::uint8_t> center_crop(const Image2D<std::uint8_t>&, int, PixelCoord);

PixelCoord heart_center(const ImageSlice& image, const LabelMap& label) {
    const PixelCoord middle{image.pixels.height / 2, image.pixels.width / 2};
    if (!label.is_labeled) return middle;
    double sr = 0.0, sc = 0.0;
    long n = 0;
    for (int r = 0; r < label.classes.height; ++r) {
        for (int c = 0; c < label.classes.width; ++c) {
            if (label.classes(r, c) != 0) {
                sr += r;
                sc += c;
                ++n;
            }
        }
    }
    if (n == 0) return middle;
    return {static_cast<int>(std::lround(sr / n)), static_cast<int>(std::lround(sc / n))};
}

void preprocess_record(SliceRecord& record, int crop_size) {
    const PixelCoord center = heart_center(record.image, record.label);
    record.image.pixels = zscore_normalize(center_crop(record.image.pixels, crop_size, center));
    if (record.label.is_labeled) {
        record.label.classes = center_crop(record.label.classes, crop_size, center);
    }
}

bool ModalityVector::is_one_hot() const {
    int ones = 0;
    for (float v : code) {
        if (v == 1.0f) {
            ++ones;
        } else if (v != 0.0f) {
            return false;
        }
    }
    return ones == 1;
}

int ModalityVector::argmax() const {
    return static_cast<int>(std::max_element(code.begin(), code.end()) - code.begin());
}

ModalityDiff ModalityDiff::operator-() const {
    ModalityDiff out{diff};
    for (auto& v : out.diff) v = -v;
    return out;
}

ModalityVector encode_modality(int domain_index, int K) {
    if (K <= 0 || domain_index < 0 || domain_index >= K) {
        throw std::invalid_argument("encode_modality: index " + std::to_string(domain_index) + " out of range for K=" +
                                    std::to_string(K));
    }
    ModalityVector v{std::vector<float>(K, 0.0f)};
    v.code[domain_index] = 1.0f;
    return v;
}

ModalityVector sample_target_modality(std::mt19937_64& rng, int K, std::optional<int> exclude, TargetPolicy policy,
                                      double dirichlet_alpha) {
    if (K < 2) throw std::invalid_argument("sample_target_modality: K must be >= 2");
    if (policy == TargetPolicy::Soft) {
        std::gamma_distribution<double> gamma(dirichlet_alpha, 1.0);
        std::vector<double> g(K);
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            g[k] = (exclude && *exclude == k) ? 0.0 : gamma(rng);
            total += g[k];
        }
        ModalityVector v{std::vector<float>(K, 0.0f)};
        for (int k = 0; k < K; ++k) v.code[k] = static_cast<float>(g[k] / total);
        return v;
    }
    const bool excluding = exclude && *exclude >= 0 && *exclude < K;
    std::uniform_int_distribution<int> pick(0, excluding ? K - 2 : K - 1);
    int idx = pick(rng);
    if (excluding && idx >= *exclude) ++idx;
    return encode_modality(idx, K);
}

ModalityDiff modality_difference(const ModalityVector& source, const ModalityVector& target) {
    if (source.size() != target.size()) {
        throw std::invalid_argument("modality_difference: length mismatch");
    }
    ModalityDiff d{std::vector<float>(source.code.size())};
    for (std::size_t i = 0; i < d.diff.size(); ++i) d.diff[i] = target.code[i] - source.code[i];
    return d;
}

torch::Tensor broadcast_concat(const ImageSlice& image, const ModalityDiff& diff) {
    const auto& px = image.pixels;
    auto img = torch::from_blob(const_cast<float*>(px.data.data()), {1, 1, px.height, px.width}, torch::kFloat).clone();
    auto d = torch::tensor(diff.diff, torch::kFloat).unsqueeze(0);
    return broadcast_concat(img, d).squeeze(0);
}

torch::Tensor broadcast_concat(const torch::Tensor& images, const torch::Tensor& diffs) {
    TORCH_CHECK(images.dim() == 4 && images.size(1) == 1, "broadcast_concat: images must be [B,1,H,W]");
    TORCH_CHECK(diffs.dim() == 2 && diffs.size(0) == images.size(0), "broadcast_concat: diffs must be [B,K]");
    auto planes = diffs.to(images.dtype()).view({diffs.size(0), diffs.size(1), 1, 1})
                      .expand({diffs.size(0), diffs.size(1), images.size(2), images.size(3)});
    return torch::cat({images, planes}, 1);
}

torch::Tensor stack_codes(const std::vector<ModalityVector>& codes) {
    if (codes.empty()) return torch::empty({0, 0});
    const auto K = codes.front().code.size();
    auto out = torch::empty({static_cast<long>(codes.size()), static_cast<long>(K)}, torch::kFloat);
    auto acc = out.accessor<float, 2>();
    for (std::size_t b = 0; b < codes.size(); ++b) {
        if (codes[b].code.size() != K) throw std::invalid_argument("stack_codes: ragged modality codes");
        for (std::size_t k = 0; k < K; ++k) acc[b][k] = codes[b].code[k];
    }
    return out;
}

}  // namespace stdgn

#include "stdgn/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace stdgn {

namespace {

// Noise-free intensity of each class before styling.
constexpr std::array<double, kNumClasses> kBaseIntensity{0.25, 0.9, 0.4, 0.8};
constexpr double kAirIntensity = 0.02;

int canvas_size_for(int image_size) { return image_size + image_size / 4; }

std::mt19937_64 subject_rng(std::uint64_t seed, std::size_t domain, int subject) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(domain), static_cast<std::uint32_t>(subject)};
    return std::mt19937_64(seq);
}

}  // namespace

void DomainStyle::validate() const {
    if (!(gamma > 0.0)) throw std::invalid_argument("domain " + vendor_id + ": gamma must be > 0");
    if (!(contrast > 0.0)) throw std::invalid_argument("domain " + vendor_id + ": contrast must be > 0");
    if (!(bias_field_amplitude >= 0.0)) throw std::invalid_argument("domain " + vendor_id + ": bias amplitude must be >= 0");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("domain " + vendor_id + ": noise_std must be >= 0");
    if (held_out && labeled == false) {
        // Held-out domains are evaluation-only; their test labels are always rendered.
        throw std::invalid_argument("domain " + vendor_id + ": held-out domains must be labeled for evaluation");
    }
}

void PhantomParams::validate() const {
    if (image_size < 16) throw std::invalid_argument("phantom: image_size must be >= 16");
    if (num_subjects_per_domain < 1) throw std::invalid_argument("phantom: need at least one subject per domain");
    if (num_test_subjects_per_domain < 0 || num_test_subjects_per_domain > num_subjects_per_domain) {
        throw std::invalid_argument("phantom: num_test_subjects_per_domain out of range");
    }
    if (num_slices < 1) throw std::invalid_argument("phantom: num_slices must be >= 1");
    if (domains.empty()) throw std::invalid_argument("phantom: no domains");
    for (const auto& d : domains) d.validate();
}

double slice_radius_scale(double position) {
    return position >= 0.0 ? 1.0 - 0.5 * position : 1.0 + 0.2 * position;
}

SubjectAnatomy sample_anatomy(std::mt19937_64& rng, int canvas_size) {
    const double image_size = canvas_size * 0.8;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    SubjectAnatomy a;
    a.center_row = canvas_size / 2.0 + between(-0.05, 0.05) * image_size;
    a.center_col = canvas_size / 2.0 + between(-0.05, 0.05) * image_size;
    a.lv_radius = between(0.09, 0.12) * image_size;
    a.myo_thickness = between(0.04, 0.055) * image_size;
    a.rv_radius = between(0.11, 0.14) * image_size;
    a.rv_angle = std::numbers::pi + between(-0.5, 0.5);
    a.es_contraction = between(0.68, 0.8);
    a.body_radius = between(0.40, 0.46) * image_size;
    return a;
}

ClassMap render_labels(const SubjectAnatomy& a, int canvas_size, double position, CardiacPhase phase) {
    const double s = slice_radius_scale(position);
    const bool es = phase == CardiacPhase::ES;
    const double lv = a.lv_radius * s * (es ? a.es_contraction : 1.0);
    const double myo_outer = lv + a.myo_thickness * s * (es ? 1.25 : 1.0);
    const double rv_dist = (a.lv_radius + a.myo_thickness + 0.45 * a.rv_radius) * s;
    const double rv_r = a.rv_radius * s * (es ? 0.85 : 1.0);
    const double rv_row = a.center_row + rv_dist * std::sin(a.rv_angle);
    const double rv_col = a.center_col + rv_dist * std::cos(a.rv_angle);

    ClassMap out(canvas_size, canvas_size, 0);
    for (int r = 0; r < canvas_size; ++r) {
        for (int c = 0; c < canvas_size; ++c) {
            const double y = r + 0.5, x = c + 0.5;
            const double d = std::hypot(y - a.center_row, x - a.center_col);
            std::uint8_t cls = 0;
            if (d < lv) {
                cls = 1;
            } else if (d < myo_outer) {
                cls = 2;
            } else if (std::hypot(y - rv_row, x - rv_col) < rv_r) {
                cls = 3;
            }
            out(r, c) = cls;
        }
    }
    return out;
}

ImageF render_intensity(const ClassMap& classes, const SubjectAnatomy& a, const DomainStyle& style,
                        std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    const double bx = coef(rng), by = coef(rng), bxy = coef(rng);
    std::normal_distribution<double> noise(0.0, 1.0);

    const int h = classes.height, w = classes.width;
    ImageF out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int cls = classes(r, c);
            double base = kBaseIntensity[cls];
            if (cls == 0 && std::hypot(r + 0.5 - a.center_row, c + 0.5 - a.center_col) > a.body_radius) {
                base = kAirIntensity;
            }
            const double u = 2.0 * (c + 0.5) / w - 1.0;
            const double v = 2.0 * (r + 0.5) / h - 1.0;
            const double bias = style.bias_field_amplitude * (bx * u + by * v + bxy * u * v);
            double value = style.intensity_offsets[cls] + style.contrast * std::pow(base, style.gamma) + bias;
            // Draw even when the std is zero so the stream stays aligned across styles.
            value += style.noise_std * noise(rng);
            out(r, c) = static_cast<float>(value);
        }
    }
    return out;
}

DomainDataset generate_phantom_dataset(const PhantomParams& params) {
    params.validate();
    const int canvas = canvas_size_for(params.image_size);

    DomainDataset ds;
    for (const auto& style : params.domains) {
        ds.domains.push_back({style.vendor_id, style.center_id, style.labeled, style.held_out});
    }

    for (std::size_t d = 0; d < params.domains.size(); ++d) {
        const auto& style = params.domains[d];
        for (int s = 0; s < params.num_subjects_per_domain; ++s) {
            auto rng = subject_rng(params.seed, d, s);
            const SubjectAnatomy anatomy = sample_anatomy(rng, canvas);
            const bool test = style.held_out || s >= params.num_subjects_per_domain - params.num_test_subjects_per_domain;
            const Split split = test ? Split::Test : Split::Train;
            char id[64];
            std::snprintf(id, sizeof(id), "%s%s_s%03d", style.vendor_id.c_str(), style.center_id.c_str(), s);
            const PixelCoord center{static_cast<int>(anatomy.center_row), static_cast<int>(anatomy.center_col)};

            for (CardiacPhase phase : {CardiacPhase::ED, CardiacPhase::ES}) {
                for (int k = 0; k < params.num_slices; ++k) {
                    const double pos = slice_position(k, params.num_slices);
                    const ClassMap full_labels = render_labels(anatomy, canvas, pos, phase);
                    const ImageF full_image = render_intensity(full_labels, anatomy, style, rng);

                    SliceRecord rec;
                    rec.image.subject_id = id;
                    rec.image.slice_index = k;
                    rec.image.num_slices = params.num_slices;
                    rec.image.phase = phase;
                    rec.image.pixels = center_crop(full_image, params.image_size, center);
                    if (params.normalize) rec.image.pixels = zscore_normalize(rec.image.pixels);
                    rec.label.is_labeled = style.labeled || split == Split::Test;
                    if (rec.label.is_labeled) rec.label.classes = center_crop(full_labels, params.image_size, center);
                    rec.domain_index = static_cast<int>(d);
                    rec.vendor_id = style.vendor_id;
                    rec.center_id = style.center_id;
                    rec.position = pos;
                    rec.split = split;
                    ds.records.push_back(std::move(rec));
                }
            }
        }
    }
    ds.validate();
    return ds;
}

PhantomParams benchmark_phantom_params(std::uint64_t seed, int image_size) {
    PhantomParams p;
    p.seed = seed;
    p.image_size = image_size;
    p.num_subjects_per_domain = 6;
    p.num_test_subjects_per_domain = 2;
    p.num_slices = 7;

    DomainStyle a{"A", "1", 1.0, 1.0, 0.05, 0.03, {0.0, 0.0, 0.0, 0.0}, true, false};
    DomainStyle b{"B", "2", 0.6, 1.1, 0.10, 0.04, {0.0, 0.0, 0.1, -0.05}, true, false};
    DomainStyle c{"C", "4", 1.8, 0.9, 0.15, 0.05, {0.05, -0.1, 0.15, 0.0}, false, false};
    DomainStyle d{"D", "5", 2.4, 0.8, 0.20, 0.06, {0.1, -0.15, 0.2, -0.1}, true, true};
    p.domains = {a, b, c, d};
    return p;
}

}  // namespace stdgn

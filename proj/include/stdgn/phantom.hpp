#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stdgn/data_pipeline.hpp"

namespace stdgn {

/// Appearance of one synthetic domain. Rendered intensity of a pixel of class c is
///   offset[c] + contrast * base[c]^gamma + bias(x, y) + noise.
struct DomainStyle {
    std::string vendor_id;
    std::string center_id;
    double gamma = 1.0;
    double contrast = 1.0;
    double bias_field_amplitude = 0.0;
    double noise_std = 0.0;
    std::array<double, kNumClasses> intensity_offsets{0.0, 0.0, 0.0, 0.0};
    bool labeled = true;
    bool held_out = false;

    void validate() const;
};

struct PhantomParams {
    std::uint64_t seed = 0;
    int image_size = 64;
    int num_subjects_per_domain = 6;
    /// Of those, this many per domain go to the test split (all of them for held-out domains).
    int num_test_subjects_per_domain = 2;
    int num_slices = 7;
    /// Crop + z-score the rendered slices. Off only for raw-intensity inspection.
    bool normalize = true;
    std::vector<DomainStyle> domains;

    void validate() const;
};

/// Subject-level geometry, in pixels relative to the rendering canvas.
struct SubjectAnatomy {
    double center_row = 0.0;
    double center_col = 0.0;
    double lv_radius = 0.0;
    double myo_thickness = 0.0;
    double rv_radius = 0.0;
    double rv_angle = 0.0;
    double es_contraction = 0.75;
    double body_radius = 0.0;
};

/// Multiplicative radius scale for a slice at normalized position p:
/// 1 at the centre, shrinking toward the base (p < 0) and faster toward the apex (p > 0).
double slice_radius_scale(double position);

SubjectAnatomy sample_anatomy(std::mt19937_64& rng, int canvas_size);

/// Exact class map of one slice of a subject.
ClassMap render_labels(const SubjectAnatomy& anatomy, int canvas_size, double position, CardiacPhase phase);

/// Styled intensities for a class map (before cropping and normalization).
ImageF render_intensity(const ClassMap& classes, const SubjectAnatomy& anatomy, const DomainStyle& style,
                        std::mt19937_64& rng);

/// Deterministic multi-domain phantom set: every subject yields an ED and an ES stack.
DomainDataset generate_phantom_dataset(const PhantomParams& params);

/// Four-domain benchmark mirroring the multi-vendor setting: A, B labeled, C unlabeled,
/// D held out as the unseen vendor.
PhantomParams benchmark_phantom_params(std::uint64_t seed, int image_size = 64);

}  // namespace stdgn

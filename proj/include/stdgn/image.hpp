#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stdgn {

/// Dense row-major 2D array.
template <typename T>
struct Image2D {
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Image2D() = default;
    Image2D(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
        if (h < 0 || w < 0) {
            throw std::invalid_argument("Image2D: negative dimension");
        }
    }

    [[nodiscard]] bool empty() const noexcept { return data.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return data.size(); }

    T& operator()(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    const T& operator()(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }

    friend bool operator==(const Image2D&, const Image2D&) = default;
};

using ImageF = Image2D<float>;
using ClassMap = Image2D<std::uint8_t>;

inline constexpr int kNumClasses = 4;

enum class Structure : int { LV = 1, Myo = 2, RV = 3 };
inline constexpr std::array<Structure, 3> kStructures = {Structure::LV, Structure::Myo, Structure::RV};

inline std::string_view structure_name(Structure s) {
    switch (s) {
        case Structure::LV: return "LV";
        case Structure::Myo: return "Myo";
        case Structure::RV: return "RV";
    }
    return "?";
}

enum class CardiacPhase { ED, ES };

inline std::string_view phase_name(CardiacPhase p) { return p == CardiacPhase::ED ? "ED" : "ES"; }

inline CardiacPhase parse_phase(std::string_view s) {
    if (s == "ED") return CardiacPhase::ED;
    if (s == "ES") return CardiacPhase::ES;
    throw std::invalid_argument("unknown cardiac phase '" + std::string(s) + "'");
}

}  // namespace stdgn

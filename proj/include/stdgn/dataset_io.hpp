#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "stdgn/data_pipeline.hpp"

namespace stdgn {

/// Raised by load_dataset; `record_id` names the offending record or file.
class LoadError : public std::runtime_error {
public:
    LoadError(std::string record_id, const std::string& what)
        : std::runtime_error(record_id + ": " + what), record_id_(std::move(record_id)) {}

    [[nodiscard]] const std::string& record_id() const noexcept { return record_id_; }

private:
    std::string record_id_;
};

/// Writes `dir/manifest.json` plus one float32 LE `.img` and (if labeled) one
/// uint8 `.lab` file per record under `dir/slices/`. Returns the manifest path.
std::filesystem::path save_dataset(const DomainDataset& dataset, const std::filesystem::path& dir);

DomainDataset load_dataset(const std::filesystem::path& manifest_path);

/// Raw slice files, also used by the CLI for single images.
void write_float_image(const std::filesystem::path& path, const ImageF& image);
ImageF read_float_image(const std::filesystem::path& path, int height, int width);
void write_class_map(const std::filesystem::path& path, const ClassMap& map);
ClassMap read_class_map(const std::filesystem::path& path, int height, int width);

}  // namespace stdgn

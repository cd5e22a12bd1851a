#include "stdgn/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "json.hpp"

namespace stdgn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "raw slice files are little-endian float32");

std::vector<char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), "cannot open file");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const void* data, std::size_t n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace

void write_float_image(const fs::path& path, const ImageF& image) {
    write_bytes(path, image.data.data(), image.data.size() * sizeof(float));
}

ImageF read_float_image(const fs::path& path, int height, int width) {
    const auto bytes = read_bytes(path);
    ImageF img(height, width);
    if (bytes.size() != img.size() * sizeof(float)) {
        throw LoadError(path.string(), "expected " + std::to_string(img.size() * sizeof(float)) + " bytes, found " +
                                           std::to_string(bytes.size()));
    }
    std::memcpy(img.data.data(), bytes.data(), bytes.size());
    return img;
}

void write_class_map(const fs::path& path, const ClassMap& map) { write_bytes(path, map.data.data(), map.data.size()); }

ClassMap read_class_map(const fs::path& path, int height, int width) {
    const auto bytes = read_bytes(path);
    ClassMap map(height, width);
    if (bytes.size() != map.size()) {
        throw LoadError(path.string(), "expected " + std::to_string(map.size()) + " bytes, found " +
                                           std::to_string(bytes.size()));
    }
    std::memcpy(map.data.data(), bytes.data(), bytes.size());
    for (std::uint8_t v : map.data) {
        if (v >= kNumClasses) {
            throw LoadError(path.string(), "unknown class index " + std::to_string(static_cast<int>(v)));
        }
    }
    return map;
}

fs::path save_dataset(const DomainDataset& dataset, const fs::path& dir) {
    dataset.validate();
    fs::create_directories(dir / "slices");

    json manifest;
    manifest["format"] = "stdgn-dataset";
    manifest["version"] = 1;
    json domains = json::array();
    for (std::size_t i = 0; i < dataset.domains.size(); ++i) {
        const auto& d = dataset.domains[i];
        domains.push_back({{"domain_index", i},
                           {"vendor_id", d.vendor_id},
                           {"center_id", d.center_id},
                           {"labeled", d.labeled},
                           {"held_out", d.held_out}});
    }
    manifest["domains"] = std::move(domains);

    std::map<std::string, int> per_subject;
    json records = json::array();
    for (const auto& r : dataset.records) {
        const int k = per_subject[r.image.subject_id]++;
        const std::string stem = "slices/" + r.image.subject_id + "_" + std::to_string(k);
        json rec{{"subject_id", r.image.subject_id},
                 {"vendor_id", r.vendor_id},
                 {"center_id", r.center_id},
                 {"domain_index", r.domain_index},
                 {"slice_index", r.image.slice_index},
                 {"num_slices", r.image.num_slices},
                 {"phase", phase_name(r.image.phase)},
                 {"labeled", r.label.is_labeled},
                 {"split", split_name(r.split)},
                 {"H", r.image.pixels.height},
                 {"W", r.image.pixels.width},
                 {"image_file", stem + ".img"}};
        write_float_image(dir / (stem + ".img"), r.image.pixels);
        if (r.label.is_labeled) {
            rec["label_file"] = stem + ".lab";
            write_class_map(dir / (stem + ".lab"), r.label.classes);
        }
        records.push_back(std::move(rec));
    }
    manifest["records"] = std::move(records);

    const fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::trunc);
    out << manifest.dump(1) << '\n';
    if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
    return manifest_path;
}

DomainDataset load_dataset(const fs::path& manifest_path) {
    fs::path manifest_file = manifest_path;
    if (fs::is_directory(manifest_file)) manifest_file /= "manifest.json";
    std::ifstream in(manifest_file);
    if (!in) throw LoadError(manifest_file.string(), "cannot open manifest");
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw LoadError(manifest_file.string(), std::string("malformed manifest: ") + e.what());
    }
    const fs::path root = manifest_file.parent_path();

    DomainDataset ds;
    try {
        for (const auto& d : manifest.at("domains")) {
            ds.domains.push_back({d.at("vendor_id").get<std::string>(), d.at("center_id").get<std::string>(),
                                  d.at("labeled").get<bool>(), d.value("held_out", false)});
        }
    } catch (const json::exception& e) {
        throw LoadError(manifest_file.string(), std::string("malformed domain registry: ") + e.what());
    }

    const auto& records = manifest.contains("records") ? manifest["records"] : throw LoadError(manifest_file.string(), "missing records");
    std::size_t index = 0;
    for (const auto& j : records) {
        const std::string id = j.value("subject_id", std::string("?")) + "#" + std::to_string(index++);
        SliceRecord r;
        int h = 0, w = 0;
        std::string image_file;
        try {
            r.image.subject_id = j.at("subject_id").get<std::string>();
            r.vendor_id = j.at("vendor_id").get<std::string>();
            r.center_id = j.at("center_id").get<std::string>();
            r.domain_index = j.at("domain_index").get<int>();
            r.image.slice_index = j.at("slice_index").get<int>();
            r.image.num_slices = j.at("num_slices").get<int>();
            r.image.phase = parse_phase(j.at("phase").get<std::string>());
            r.label.is_labeled = j.at("labeled").get<bool>();
            r.split = parse_split(j.value("split", std::string("train")));
            h = j.at("H").get<int>();
            w = j.at("W").get<int>();
            image_file = j.at("image_file").get<std::string>();
        } catch (const std::exception& e) {
            throw LoadError(id, std::string("malformed record: ") + e.what());
        }
        if (h <= 0 || w <= 0) throw LoadError(id, "non-positive image shape");
        if (r.domain_index < 0 || r.domain_index >= static_cast<int>(ds.domains.size())) {
            throw LoadError(id, "domain index " + std::to_string(r.domain_index) + " not in registry");
        }
        r.position = slice_position(r.image.slice_index, r.image.num_slices);
        try {
            r.image.pixels = read_float_image(root / image_file, h, w);
            if (r.label.is_labeled) {
                if (!j.contains("label_file")) throw LoadError(id, "labeled record without label_file");
                r.label.classes = read_class_map(root / j["label_file"].get<std::string>(), h, w);
            }
        } catch (const LoadError& e) {
            throw LoadError(id, e.what());
        }
        ds.records.push_back(std::move(r));
    }
    try {
        ds.validate();
    } catch (const std::invalid_argument& e) {
        throw LoadError(manifest_file.string(), e.what());
    }
    return ds;
}

}  // namespace stdgn

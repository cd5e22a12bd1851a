#include "stdgn/checkpoint.hpp"

#include <sstream>
#include <stdexcept>

namespace stdgn {

void CheckpointWriter::put_string(const std::string& key, const std::string& value) { archive_.write(key, c10::IValue(value)); }

void CheckpointWriter::put_int(const std::string& key, std::int64_t value) { archive_.write(key, c10::IValue(value)); }

void CheckpointWriter::put_tensor(const std::string& key, const torch::Tensor& value) { archive_.write(key, value); }

void CheckpointWriter::put_module(const std::string& key, const torch::nn::Module& module) {
    torch::serialize::OutputArchive sub;
    module.save(sub);
    archive_.write(key, sub);
}

void CheckpointWriter::put_optimizer(const std::string& key, const torch::optim::Optimizer& optimizer) {
    torch::serialize::OutputArchive sub;
    optimizer.save(sub);
    archive_.write(key, sub);
}

void CheckpointWriter::put_rng(const std::string& key, const std::mt19937_64& rng) {
    std::ostringstream ss;
    ss << rng;
    put_string(key, ss.str());
}

void CheckpointWriter::put_rng(const std::string& key, const at::Generator& rng) { put_tensor(key, rng.get_state()); }

void CheckpointWriter::save(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write then rename so an interrupted save never leaves a truncated checkpoint.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    archive_.save_to(tmp.string());
    std::filesystem::rename(tmp, path);
}

CheckpointReader::CheckpointReader(const std::filesystem::path& path) : path_(path) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("checkpoint not found: " + path.string());
    archive_.load_from(path.string());
}

bool CheckpointReader::has(const std::string& key) {
    c10::IValue v;
    return archive_.try_read(key, v);
}

std::string CheckpointReader::get_string(const std::string& key) {
    c10::IValue v;
    if (!archive_.try_read(key, v) || !v.isString()) {
        throw std::runtime_error(path_.string() + ": missing string entry '" + key + "'");
    }
    return v.toStringRef();
}

std::int64_t CheckpointReader::get_int(const std::string& key) {
    c10::IValue v;
    if (!archive_.try_read(key, v) || !v.isInt()) {
        throw std::runtime_error(path_.string() + ": missing integer entry '" + key + "'");
    }
    return v.toInt();
}

torch::Tensor CheckpointReader::get_tensor(const std::string& key) {
    torch::Tensor t;
    if (!archive_.try_read(key, t)) throw std::runtime_error(path_.string() + ": missing tensor entry '" + key + "'");
    return t;
}

void CheckpointReader::load_module(const std::string& key, torch::nn::Module& module) {
    torch::serialize::InputArchive sub;
    if (!archive_.try_read(key, sub)) throw std::runtime_error(path_.string() + ": missing module '" + key + "'");
    module.load(sub);
}

void CheckpointReader::load_optimizer(const std::string& key, torch::optim::Optimizer& optimizer) {
    torch::serialize::InputArchive sub;
    if (!archive_.try_read(key, sub)) throw std::runtime_error(path_.string() + ": missing optimizer '" + key + "'");
    optimizer.load(sub);
}

void CheckpointReader::load_rng(const std::string& key, std::mt19937_64& rng) {
    std::istringstream ss(get_string(key));
    ss >> rng;
    if (!ss) throw std::runtime_error(path_.string() + ": corrupt RNG state '" + key + "'");
}

void CheckpointReader::load_rng(const std::string& key, at::Generator& rng) { rng.set_state(get_tensor(key)); }

}  // namespace stdgn

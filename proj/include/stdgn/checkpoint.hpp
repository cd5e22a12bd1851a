#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <torch/torch.h>

namespace stdgn {

/// Named-entry checkpoint container on top of the torch archive format.
class CheckpointWriter {
public:
    void put_string(const std::string& key, const std::string& value);
    void put_int(const std::string& key, std::int64_t value);
    void put_tensor(const std::string& key, const torch::Tensor& value);
    void put_module(const std::string& key, const torch::nn::Module& module);
    void put_optimizer(const std::string& key, const torch::optim::Optimizer& optimizer);
    void put_rng(const std::string& key, const std::mt19937_64& rng);
    void put_rng(const std::string& key, const at::Generator& rng);

    void save(const std::filesystem::path& path);

private:
    torch::serialize::OutputArchive archive_;
};

class CheckpointReader {
public:
    explicit CheckpointReader(const std::filesystem::path& path);

    [[nodiscard]] bool has(const std::string& key);
    std::string get_string(const std::string& key);
    std::int64_t get_int(const std::string& key);
    torch::Tensor get_tensor(const std::string& key);
    void load_module(const std::string& key, torch::nn::Module& module);
    void load_optimizer(const std::string& key, torch::optim::Optimizer& optimizer);
    void load_rng(const std::string& key, std::mt19937_64& rng);
    void load_rng(const std::string& key, at::Generator& rng);

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    torch::serialize::InputArchive archive_;
};

}  // namespace stdgn

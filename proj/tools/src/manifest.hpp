#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace dynrisk::cli {

/// Hex SHA-256 of a file's bytes. Throws dynrisk::Error if unreadable.
std::string sha256_file(const std::filesystem::path &path);

/// Collects what a command read and wrote, then writes manifest.json into
/// the output directory.
class RunRecorder {
public:
    RunRecorder(std::string command, std::filesystem::path out_dir);

    const std::filesystem::path &out_dir() const noexcept { return out_dir_; }

    void input(const std::filesystem::path &path);
    void seed(std::uint64_t seed) { seed_ = seed; }
    void config(const std::string &key, nlohmann::json value) { config_[key] = std::move(value); }
    void result(const std::string &key, nlohmann::json value) { results_[key] = std::move(value); }

    /// Writes out_dir/name through `body`; throws if the stream fails.
    void write(const std::string &name, const std::function<void(std::ostream &)> &body);

    void finish();

private:
    std::string command_;
    std::filesystem::path out_dir_;
    std::string started_at_;
    std::uint64_t seed_ = 0;
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::object();
    nlohmann::json config_ = nlohmann::json::object();
    nlohmann::json results_ = nlohmann::json::object();
    std::vector<std::string> outputs_;
};

} // namespace dynrisk::cli

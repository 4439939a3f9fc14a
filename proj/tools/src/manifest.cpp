#include "manifest.hpp"

#include <dynrisk/error.hpp>

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

namespace dynrisk::cli {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

} // namespace

std::string sha256_file(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), EVP_MD_CTX_free};
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 init failed");
    }
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

RunRecorder::RunRecorder(std::string command, fs::path out_dir)
    : command_{std::move(command)}, out_dir_{std::move(out_dir)}, started_at_{utc_now()} {
    fs::create_directories(out_dir_);
}

void RunRecorder::input(const fs::path &path) { inputs_[path.string()] = sha256_file(path); }

void RunRecorder::write(const std::string &name, const std::function<void(std::ostream &)> &body) {
    const auto path = out_dir_ / name;
    std::ofstream out{path, std::ios::binary | std::ios::trunc};
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    body(out);
    out.close();
    if (!out) {
        throw Error("write failed for " + path.string());
    }
    outputs_.push_back(name);
}

void RunRecorder::finish() {
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["tool_version"] = DYNRISK_VERSION;
    m["master_seed"] = seed_;
    m["config"] = config_;
    m["inputs"] = inputs_;
    nlohmann::ordered_json outputs = nlohmann::ordered_json::object();
    for (const auto &name : outputs_) {
        outputs[name] = sha256_file(out_dir_ / name);
    }
    m["outputs"] = outputs;
    m["results"] = results_;
    m["started_at"] = started_at_;
    m["finished_at"] = utc_now();
    std::ofstream out{out_dir_ / "manifest.json", std::ios::binary | std::ios::trunc};
    out << m.dump(2) << '\n';
    out.close();
    if (!out) {
        throw Error("cannot write manifest in " + out_dir_.string());
    }
}

} // namespace dynrisk::cli

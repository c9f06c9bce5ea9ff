#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "foreco/foreco.hpp"

namespace foreco::cli {

namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitNumeric = 4;

[[nodiscard]] inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Io: return kExitIo;
        case ErrorKind::Config:
        case ErrorKind::InvalidTrace: return kExitConfig;
        default: return kExitNumeric;
    }
}

/// Human-readable line, then one JSON object as the final stderr line.
inline void report_error(std::string_view kind, const std::string& message) {
    spdlog::error("{}", message);
    Json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
}

inline void setup_logging() {
    auto logger = spdlog::stderr_color_mt("foreco");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    const char* env = std::getenv("FORECO_LOG");
    const std::string level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
        if (level != "info") spdlog::warn("FORECO_LOG='{}' not recognised, using info", level);
    }
}

[[nodiscard]] inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[nodiscard]] inline std::string sha256_hex(const std::string& data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

[[nodiscard]] inline std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

/// SOURCE_DATE_EPOCH as an ISO-8601 UTC stamp; nothing when unset, so
/// outputs do not depend on the wall clock.
[[nodiscard]] inline std::optional<std::string> build_timestamp() {
    const char* env = std::getenv("SOURCE_DATE_EPOCH");
    if (!env || !*env) return std::nullopt;
    char* end = nullptr;
    const long long secs = std::strtoll(env, &end, 10);
    if (*end != '\0' || secs < 0) {
        spdlog::warn("ignoring malformed SOURCE_DATE_EPOCH '{}'", env);
        return std::nullopt;
    }
    const std::time_t t = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

/// Collects inputs and outputs of one run for manifest.json.
class Manifest {
public:
    Manifest(std::string command, std::vector<std::string> argv)
        : command_(std::move(command)), argv_(std::move(argv)) {}

    void input(const std::string& role, const fs::path& path) {
        inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", file_sha256(path)}});
    }
    void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
    void config(const std::string& name, const Json& value) { config_[name] = value; }

    /// Writes `content` atomically under the output directory and records its digest.
    void output(const fs::path& dir, const std::string& name, const std::string& content) {
        write_file_atomic(dir / name, content);
        outputs_.push_back({{"path", name}, {"sha256", sha256_hex(content)}});
    }
    void record_output(const fs::path& dir, const fs::path& path) {
        outputs_.push_back({{"path", fs::relative(path, dir).string()}, {"sha256", file_sha256(path)}});
    }

    void write(const fs::path& dir, std::optional<std::string> timings_file = std::nullopt) const {
        Json j;
        j["tool"] = "foreco";
        j["version"] = kVersion;
        j["command"] = command_;
        j["argv"] = argv_;
        j["inputs"] = inputs_;
        j["config"] = config_.is_null() ? Json::object() : config_;
        j["seeds"] = seeds_.is_null() ? Json::object() : seeds_;
        j["outputs"] = outputs_;
        j["timings"] = timings_file ? Json(*timings_file) : Json(nullptr);
        write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
    Json seeds_;
    Json config_;
};

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory: " + dir.string());
}

}  // namespace foreco::cli

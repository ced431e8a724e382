#pragma once

// Output plumbing for the command-line tool: atomic file writes, CSV
// formatting, SHA-256 checksums and the run manifest.

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <type_traits>
#include <unistd.h>
#include <vector>

#include "json.hpp"

namespace vimtool {

namespace fs = std::filesystem;

/// Shortest representation that parses back to the same double.
inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
    }
}

/// Comma-separated, '.' decimal, LF line endings, header row first.
class CsvBuilder {
public:
    explicit CsvBuilder(const std::vector<std::string>& header) : columns_(header.size()) { row_strings(header); }

    template <class... T>
    void row(const T&... cells) {
        static_assert(sizeof...(T) > 0);
        if (sizeof...(T) != columns_) throw std::logic_error("csv row width mismatch");
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    static std::string cell(double v) { return fmt_double(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    template <class I>
        requires std::is_integral_v<I>
    static std::string cell(I v) {
        return std::to_string(v);
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::size_t columns_;
    std::ostringstream out_;
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Collects produced files; the manifest itself is written last.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void write(const std::string& name, const std::string& content) {
        atomic_write(dir_ / name, content);
        files_.push_back({name, sha256_hex(content), content.size()});
    }

    [[nodiscard]] const fs::path& path() const { return dir_; }

    [[nodiscard]] nlohmann::json file_list() const {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& f : files_) a.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
        return a;
    }

private:
    struct File {
        std::string name, sha256;
        std::size_t bytes = 0;
    };
    fs::path dir_;
    std::vector<File> files_;
};

}  // namespace vimtool

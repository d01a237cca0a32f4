#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "schema.hpp"

namespace fraclap::cli {

namespace fs = std::filesystem;

inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// CSV table with a unit-annotated header, floats printed with 17 significant digits.
class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) {
        for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }

    Csv& row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("Csv: row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << '\n';
        ++rows_;
        return *this;
    }

    std::string str() const { return os_.str(); }
    std::size_t rows() const { return rows_; }

private:
    std::size_t cols_;
    std::size_t rows_ = 0;
    std::ostringstream os_;
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Write through a temporary file and rename, so readers never see a partial file.
inline void write_atomic(const fs::path& path, const std::string& data) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << data;
        if (!os) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

/// Files produced by a run, with checksums for the manifest.
class ArtifactSet {
public:
    explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& data) {
        write_atomic(dir_ / name, data);
        ojson a;
        a["file"] = name;
        a["sha256"] = sha256_hex(data);
        a["bytes"] = data.size();
        list_.push_back(a);
    }

    void write_json(const std::string& name, const ojson& j) { write(name, j.dump(2) + "\n"); }

    const ojson& list() const { return list_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    ojson list_ = ojson::array();
};

} // namespace fraclap::cli

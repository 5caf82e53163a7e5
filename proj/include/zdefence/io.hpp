#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zdefence/errors.hpp"

namespace zdefence {

// Every file this toolkit produces goes through here: write to a sibling temp
// file, then rename over the target, so readers never observe a partial file.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
    std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(target.parent_path(), ec);
    }
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        throw IoError("rename failed: " + tmp.string() + " -> " +
                      target.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace zdefence

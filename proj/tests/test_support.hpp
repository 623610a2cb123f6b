#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>

namespace test_support {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = std::filesystem::temp_directory_path() /
               ("ipwres_" + tag + "_" + std::to_string(stamp));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace test_support

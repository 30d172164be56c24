#pragma once

#include <filesystem>
#include <string>

namespace vra {

/// Layout of one self-contained run directory:
///   <root>/{manifest.json, instances/, reference/, transcripts/, images/,
///           cache/, reports/}
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path manifest_path() const { return root / "manifest.json"; }
    std::filesystem::path instances_dir() const { return root / "instances"; }
    std::filesystem::path reference_dir(int m) const {
        return root / "reference" / ("m" + std::to_string(m));
    }
    std::filesystem::path reference_file(int m, const std::string& instance_id) const {
        return reference_dir(m) / (instance_id + ".routes");
    }
    std::filesystem::path transcripts_root() const { return root / "transcripts"; }
    std::filesystem::path transcripts_dir(const std::string& run_label) const {
        return transcripts_root() / run_label;
    }
    std::filesystem::path images_dir() const { return root / "images"; }
    std::filesystem::path cache_dir() const { return root / "cache"; }
    std::filesystem::path reports_dir() const { return root / "reports"; }
};

}  // namespace vra

#pragma once

#include <string>
#include <vector>

namespace holespin {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct FileRecord {
    std::string path;  // relative to the manifest directory when possible
    std::string sha256;
    unsigned long long bytes = 0;
};

struct StageTiming {
    std::string name;
    double seconds = 0.0;
};

struct RunManifest {
    std::string command;
    std::string tool_version;
    std::string config_hash;
    std::string started_utc, finished_utc;
    std::string status = "ok";
    std::vector<FileRecord> inputs, outputs;
    std::vector<StageTiming> stages;

    /// Records a file with its checksum; paths inside `base_dir` are stored relative to it.
    void add_input(const std::string& path, const std::string& base_dir);
    void add_output(const std::string& path, const std::string& base_dir);

    void write(const std::string& path) const;
    static RunManifest read(const std::string& path);
};

std::string utc_timestamp();

/// Re-checksums every output listed in the manifest; returns one message per problem (empty if clean).
std::vector<std::string> verify_manifest(const std::string& manifest_path);

}  // namespace holespin

#include "holespin/manifest.hpp"

#include "holespin/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>

namespace holespin {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw IoError("SHA-256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw IoError("SHA-256 final failed");
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 15];
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

FileRecord make_record(const std::string& path, const std::string& base_dir) {
    FileRecord r;
    std::error_code ec;
    const fs::path p(path);
    if (!base_dir.empty()) {
        const fs::path rel = fs::relative(p, fs::path(base_dir), ec);
        r.path = (!ec && !rel.empty() && rel.native().rfind("..", 0) != 0) ? rel.generic_string() : p.generic_string();
    } else {
        r.path = p.generic_string();
    }
    r.sha256 = sha256_file(path);
    r.bytes = fs::file_size(p);
    return r;
}

json records_json(const std::vector<FileRecord>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back({{"path", r.path}, {"sha256", r.sha256}, {"bytes", r.bytes}});
    return a;
}

std::vector<FileRecord> records_from(const json& a) {
    std::vector<FileRecord> v;
    for (const auto& e : a) v.push_back({e.at("path").get<std::string>(), e.at("sha256").get<std::string>(), e.at("bytes").get<unsigned long long>()});
    return v;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "' for checksumming");
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) h.update(buf, std::size_t(in.gcount()));
    }
    return h.hex();
}

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void RunManifest::add_input(const std::string& path, const std::string& base_dir) {
    inputs.push_back(make_record(path, base_dir));
}

void RunManifest::add_output(const std::string& path, const std::string& base_dir) {
    outputs.push_back(make_record(path, base_dir));
}

void RunManifest::write(const std::string& path) const {
    json j;
    j["command"] = command;
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    j["status"] = status;
    j["inputs"] = records_json(inputs);
    j["outputs"] = records_json(outputs);
    json st = json::array();
    for (const auto& s : stages) st.push_back({{"name", s.name}, {"seconds", s.seconds}});
    j["stages"] = st;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing manifest '" + path + "'");
}

RunManifest RunManifest::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest '" + path + "'");
    json j;
    try {
        in >> j;
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.started_utc = j.value("started_utc", "");
        m.finished_utc = j.value("finished_utc", "");
        m.status = j.value("status", "ok");
        m.inputs = records_from(j.at("inputs"));
        m.outputs = records_from(j.at("outputs"));
        for (const auto& s : j.at("stages")) m.stages.push_back({s.at("name").get<std::string>(), s.at("seconds").get<double>()});
        return m;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest '" + path + "': " + e.what());
    }
}

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
    const RunManifest m = RunManifest::read(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<std::string> problems;
    for (const auto& r : m.outputs) {
        fs::path p(r.path);
        if (p.is_relative()) p = base / p;
        std::error_code ec;
        if (!fs::exists(p, ec)) {
            problems.push_back("missing: " + r.path);
            continue;
        }
        const std::string h = sha256_file(p.string());
        if (h != r.sha256) problems.push_back("checksum mismatch: " + r.path);
    }
    return problems;
}

}  // namespace holespin

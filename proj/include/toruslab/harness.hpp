#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace toruslab::harness {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat key = value store addressed as "section.key". Only keys present in the defaults are accepted.
class Config {
public:
    static Config defaults();

    /// INI file with [section] headers.
    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    /// "section.key=value"
    void set_assignment(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    long get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;

    json section(const std::string& name) const;
    json to_json() const;

private:
    std::map<std::string, std::string> values_;
};

std::string sha256_hex(const std::string& bytes);
/// Shortest decimal form that reads back to the same binary64.
std::string fmt_real(double x);

class Logger {
public:
    explicit Logger(bool quiet = false) : quiet_(quiet) {}
    void info(const std::string& msg);
    void warn(const std::string& msg);

private:
    bool quiet_;
    std::mutex mu_;
};

/// Content-addressed JSON blobs: cache/<sha256 of the canonical key>.json holding the key, the value and its digest.
class Cache {
public:
    Cache(std::filesystem::path dir, bool enabled, Logger& log);

    std::optional<json> get(const json& key);
    void put(const json& key, const json& value);
    json get_or_compute(const json& key, const std::function<json()>& compute);

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

private:
    std::filesystem::path dir_;
    bool enabled_;
    Logger& log_;
    std::atomic<std::size_t> hits_{0}, misses_{0};
};

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string>& fields);
    const std::string& str() const { return out_; }

    static std::string quote(const std::string& field);

private:
    std::size_t width_;
    std::string out_;
};

/// Artifacts of one subcommand under out_dir/<name>, listed with their digests in manifest.json.
class RunDir {
public:
    RunDir(const std::filesystem::path& out_dir, const std::string& name, json config);

    const std::filesystem::path& path() const { return dir_; }
    void write(const std::string& file, const std::string& bytes);
    void write_json(const std::string& file, const json& j);
    void finish();

private:
    std::filesystem::path dir_;
    json manifest_;
};

struct ManifestCheck {
    std::string subcommand;
    std::size_t artifacts = 0;
    std::size_t verified = 0;
    std::vector<std::string> mismatched;
};

/// Re-hash every artifact named by out_dir/*/manifest.json.
std::vector<ManifestCheck> verify_manifests(const std::filesystem::path& out_dir);

/// Results indexed like the inputs whatever the worker count. The first exception by index is rethrown.
template <class T>
std::vector<T> parallel_map(std::size_t count, std::size_t workers, const std::function<T(std::size_t)>& fn) {
    std::vector<std::optional<T>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < count;) {
            try {
                slots[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t w = std::max<std::size_t>(1, std::min(workers, count));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < w; ++k) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<T> out;
    out.reserve(count);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// out_dir from TORUSLAB_OUT when set, else run.out_dir.
std::filesystem::path resolve_out_dir(const Config& cfg);

/// Entry point shared by the toruslab binary and the tests. Exit codes: 2 config, 3 resource cap, 4 non-convergence.
int run_cli(const std::vector<std::string>& args);

}  // namespace toruslab::harness

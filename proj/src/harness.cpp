#include "toruslab/harness.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>
#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace toruslab::harness {

namespace fs = std::filesystem;

Config Config::defaults() {
    Config c;
    c.values_ = {
        {"run.out_dir", "toruslab_out"},
        {"run.seed", "7"},
        {"run.workers", "1"},
        {"run.cache", "true"},
        {"run.quiet", "false"},

        {"disc.poly", "x^3 - x - 1"},

        {"classes.poly", "x^3 - x - 1"},
        {"classes.cap", "200000"},

        {"packets.poly", "x^2 - x - 1"},
        {"packets.grid", "8"},
        {"packets.samples", "0"},

        {"equidist.family", "quadratic"},
        {"equidist.kmin", "25"},
        {"equidist.kmax", "0"},
        {"equidist.count", "30"},
        {"equidist.density", "6"},
        {"equidist.mass", "false"},
        {"equidist.mass_samples", "100000"},
        {"equidist.mass_points", "11"},
        {"equidist.mass_floor", "10"},

        {"hecke.sigma", "1.0"},
        {"hecke.quadrature_tol", "1e-9"},
        {"hecke.quadratic", "x^2 - x - 1;x^2 - 2;x^2 - 3;x^2 - x - 3;x^2 - 6;x^2 - 7;x^2 - x - 7;x^2 - 10;x^2 - 11"},
        {"hecke.cubic", "x^3 - x^2 - 2*x + 1;x^3 - 3*x - 1;x^3 - x^2 - 3*x + 1;x^3 - x^2 - 4*x - 1;x^3 - 4*x - 1"},
        {"hecke.max_quadratic", "10"},
        {"hecke.max_cubic", "5"},

        {"building.mode", "row"},
        {"building.prime", "7"},
        {"building.poly", "x^2 - x - 1"},
        {"building.conjugate", "1,0;0,1"},
        {"building.lemma_count", "100"},
        {"building.primes", "5;7;11;13"},
        {"building.extreme_per_datum", "500"},
        {"building.rays_prime", "7"},
        {"building.rays_polys", "x^2 - 2;x^3 - 7*x^2 + 14*x - 1"},
        {"building.rays_max", "20"},
        {"building.tate_points", "10"},
        {"building.growth_prime", "7"},
        {"building.growth_rmax", "20"},

        {"zeta.mode", "cnf"},
        {"zeta.poly", "x^2 - x - 1"},
        {"zeta.B", "1000000"},
        {"zeta.family", "quadratic"},
        {"zeta.dmin", "100"},
        {"zeta.dmax", "1000000"},
        {"zeta.count", "40"},
        {"zeta.cubic_kmax", "200"},
        {"zeta.cubic_count", "25"},
        {"zeta.delta", "1.0"},
        {"zeta.char_dmin", "50"},
        {"zeta.char_dmax", "200000"},
        {"zeta.char_count", "12"},

        {"cube_roots.d", "2;3;5;10;17;30"},
        {"cube_roots.radius", "2.0"},
        {"cube_roots.cap", "400000"},
    };
    return c;
}

void Config::load_file(const fs::path& path) {
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    for (const auto& [sec, body] : pt) {
        if (body.empty()) throw ConfigError(fmt::format("{}: key '{}' outside a section", path.string(), sec));
        for (const auto& [key, val] : body) set(sec + "." + key, val.get_value<std::string>());
    }
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second = value;
}

void Config::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected section.key=value, got '" + assignment + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

const std::string& Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

long Config::get_int(const std::string& key) const {
    const std::string& s = get(key);
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": not an integer: '" + s + "'");
    return v;
}

double Config::get_double(const std::string& key) const {
    const std::string& s = get(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw ConfigError(key + ": not a number: '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + ": not a boolean: '" + s + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get(key));
    for (std::string item; std::getline(ss, item, ';');) {
        const auto a = item.find_first_not_of(' ');
        if (a == std::string::npos) continue;
        out.push_back(item.substr(a, item.find_last_not_of(' ') - a + 1));
    }
    return out;
}

json Config::section(const std::string& name) const {
    json j = json::object();
    const std::string prefix = name + ".";
    for (const auto& [k, v] : values_)
        if (k.compare(0, prefix.size(), prefix) == 0) j[k.substr(prefix.size())] = v;
    return j;
}

json Config::to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
}

std::string fmt_real(double x) { return fmt::format("{}", x); }

void Logger::info(const std::string& msg) {
    if (quiet_) return;
    std::lock_guard lk(mu_);
    fmt::print(stderr, "[toruslab] {}\n", msg);
}

void Logger::warn(const std::string& msg) {
    std::lock_guard lk(mu_);
    fmt::print(stderr, "[toruslab] warning: {}\n", msg);
}

Cache::Cache(fs::path dir, bool enabled, Logger& log) : dir_(std::move(dir)), enabled_(enabled), log_(log) {}

std::optional<json> Cache::get(const json& key) {
    if (!enabled_) return std::nullopt;
    const std::string k = key.dump();
    const std::string h = sha256_hex(k);
    const fs::path file = dir_ / (h + ".json");
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    try {
        const json entry = json::parse(in);
        const json& value = entry.at("value");
        if (entry.at("key").dump() != k || entry.at("digest").get<std::string>() != sha256_hex(value.dump()))
            throw std::runtime_error("digest mismatch");
        ++hits_;
        log_.info(fmt::format("cache hit {} {}", key.value("op", "?"), h.substr(0, 12)));
        return value;
    } catch (const std::exception& e) {
        log_.warn(fmt::format("corrupt cache entry {} ({}), recomputing", h.substr(0, 12), e.what()));
        ++misses_;
        return std::nullopt;
    }
}

void Cache::put(const json& key, const json& value) {
    if (!enabled_) return;
    const std::string h = sha256_hex(key.dump());
    fs::create_directories(dir_);
    const json entry = {{"key", key}, {"value", value}, {"digest", sha256_hex(value.dump())}};
    const fs::path tmp = dir_ / (h + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp, std::ios::binary);
        out << entry.dump();
    }
    fs::rename(tmp, dir_ / (h + ".json"));
}

json Cache::get_or_compute(const json& key, const std::function<json()>& compute) {
    if (auto v = get(key)) return *v;
    json value = compute();
    put(key, value);
    return value;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

std::string CsvWriter::quote(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ += ',';
        out_ += quote(fields[i]);
    }
    out_ += "\r\n";
}

RunDir::RunDir(const fs::path& out_dir, const std::string& name, json config) : dir_(out_dir / name) {
    fs::create_directories(dir_);
    manifest_ = {{"subcommand", name}, {"config", std::move(config)}, {"artifacts", json::array()}};
}

void RunDir::write(const std::string& file, const std::string& bytes) {
    std::ofstream out(dir_ / file, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + (dir_ / file).string());
    manifest_["artifacts"].push_back({{"path", file}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
}

void RunDir::write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

void RunDir::finish() {
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest_.dump(2) << "\n";
}

std::vector<ManifestCheck> verify_manifests(const fs::path& out_dir) {
    std::vector<fs::path> dirs;
    if (fs::exists(out_dir))
        for (const auto& e : fs::directory_iterator(out_dir))
            if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<ManifestCheck> out;
    for (const auto& d : dirs) {
        std::ifstream in(d / "manifest.json");
        const json m = json::parse(in);
        ManifestCheck c;
        c.subcommand = m.value("subcommand", d.filename().string());
        for (const auto& a : m.at("artifacts")) {
            ++c.artifacts;
            std::ifstream f(d / a.at("path").get<std::string>(), std::ios::binary);
            std::stringstream ss;
            ss << f.rdbuf();
            if (f && sha256_hex(ss.str()) == a.at("sha256").get<std::string>())
                ++c.verified;
            else
                c.mismatched.push_back(a.at("path").get<std::string>());
        }
        out.push_back(std::move(c));
    }
    return out;
}

fs::path resolve_out_dir(const Config& cfg) {
    if (const char* env = std::getenv("TORUSLAB_OUT"); env && *env) return env;
    return cfg.get("run.out_dir");
}

}  // namespace toruslab::harness

#pragma once

// CSV and JSON artifact writers with provenance sidecars.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "serialization.hpp"

namespace pinn_spectral {

/// Round-trip formatting: 17 significant digits.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_number(long v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

using CsvRow = std::vector<std::string>;

/// Output directory for one experiment run. Every CSV gets a sibling
/// `<name>.json` holding the library version, the config echo and extras.
class ArtifactWriter {
public:
    ArtifactWriter(std::filesystem::path dir, std::string experiment, Json config)
        : dir_(std::move(dir)), experiment_(std::move(experiment)), config_(std::move(config)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    }

    const std::filesystem::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

    Json provenance() const {
        return Json{{"library_version", kLibraryVersion}, {"experiment", experiment_}, {"config", config_}};
    }

    void write_csv(const std::string& name, const CsvRow& header, const std::vector<CsvRow>& rows,
                   const Json& extra = Json::object()) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
        write_line(out, header);
        for (const auto& r : rows) write_line(out, r);
        files_.push_back(name);
        Json meta = provenance();
        meta["file"] = name;
        meta["rows"] = rows.size();
        for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
        write_text(name + ".json", meta.dump(2) + "\n");
    }

    /// Writes `body` with the provenance block merged in.
    void write_json(const std::string& name, const Json& body) {
        Json doc = provenance();
        for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
        write_text(name, doc.dump(2) + "\n");
        files_.push_back(name);
    }

private:
    static void write_line(std::ofstream& out, const CsvRow& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }

    void write_text(const std::string& name, const std::string& text) const {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + (dir_ / name).string() + "'");
        out << text;
    }

    std::filesystem::path dir_;
    std::string experiment_;
    Json config_;
    std::vector<std::string> files_;
};

}  // namespace pinn_spectral

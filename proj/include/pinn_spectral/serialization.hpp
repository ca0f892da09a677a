#pragma once

// JSON forms of kernels and operators. Requires nlohmann/json (json.hpp).

#include <charconv>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kernels.hpp"
#include "operators.hpp"

namespace pinn_spectral {

using Json = nlohmann::ordered_json;

/// Reads an object while recording which keys were consumed, so that leftover
/// (unknown) keys can be rejected.
class ConfigReader {
public:
    ConfigReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& at(const std::string& key) {
        used_.insert(key);
        if (!j_.contains(key)) throw ConfigError(path_ + ": missing key '" + key + "'");
        return j_.at(key);
    }

    template <typename T>
    T get(const std::string& key) {
        const Json& v = at(key);
        try {
            return v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(path_ + "." + key + ": wrong type");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        return get<T>(key);
    }

    double positive(const std::string& key) {
        const double v = get<double>(key);
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path_ + "." + key + ": must be positive");
        return v;
    }

    double positive_or(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }

    ConfigReader child(const std::string& key) { return ConfigReader(at(key), path_ + "." + key); }

    std::string path_of(const std::string& key) const { return path_ + "." + key; }

    /// Throws if the object holds keys that were never read.
    void finish() const {
        std::string unknown;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) unknown += (unknown.empty() ? "" : ", ") + it.key();
        }
        if (!unknown.empty()) throw ConfigError(path_ + ": unknown key(s): " + unknown);
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

inline Json to_json(const KernelSpec& k) {
    return Json{{"family", to_string(k.family)},
                {"l", k.l},
                {"sigma_a2", k.sigma_a2},
                {"sigma_w2", k.sigma_w2},
                {"bias_var", k.bias_var}};
}

/// "family" is required; "l" defaults to 1; sigma_w2 and sigma_a2 default to
/// 1/l^2 and 1/sqrt(2 pi l^2); bias_var defaults to 1.
inline KernelSpec kernel_from_json(const Json& j, const std::string& path = "kernel") {
    ConfigReader r(j, path);
    KernelFamily family;
    try {
        family = kernel_family_from_string(r.get<std::string>("family"));
    } catch (const DomainError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    KernelSpec k = KernelSpec::with_defaults(family, r.positive_or("l", 1.0));
    k.sigma_a2 = r.positive_or("sigma_a2", k.sigma_a2);
    k.sigma_w2 = r.positive_or("sigma_w2", k.sigma_w2);
    if (r.has("bias_var")) {
        k.bias_var = r.get<double>("bias_var");
        if (!(k.bias_var >= 0.0) || !std::isfinite(k.bias_var)) throw ConfigError(path + ".bias_var: must be >= 0");
    }
    r.finish();
    return k;
}

inline std::string format_coefficient(double c) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, c);
    return "const:" + std::string(buf, res.ptr);
}

inline double parse_coefficient(const std::string& s, const std::string& path) {
    const std::string prefix = "const:";
    if (s.rfind(prefix, 0) != 0) throw ConfigError(path + ": coefficient must look like 'const:<number>'");
    const std::string num = s.substr(prefix.size());
    double v = 0.0;
    const auto res = std::from_chars(num.data(), num.data() + num.size(), v);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size() || !std::isfinite(v)) {
        throw ConfigError(path + ": bad coefficient '" + s + "'");
    }
    return v;
}

/// Constant-coefficient operators only.
inline Json to_json(const LinearDiffOp& op) {
    Json terms = Json::array();
    for (const auto& t : op.terms()) {
        if (!t.is_constant()) throw DomainError("only constant-coefficient operators can be serialized");
        terms.push_back(Json{{"orders", t.orders}, {"coeff", format_coefficient(t.constant)}});
    }
    return terms;
}

inline LinearDiffOp operator_from_json(const Json& j, const std::string& path = "operator") {
    if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array of terms");
    std::vector<DiffTerm> terms;
    int dim = -1;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        ConfigReader r(j[i], p);
        DiffTerm t;
        t.orders = r.get<std::vector<int>>("orders");
        t.constant = parse_coefficient(r.get<std::string>("coeff"), p + ".coeff");
        r.finish();
        if (dim < 0) dim = static_cast<int>(t.orders.size());
        terms.push_back(std::move(t));
    }
    try {
        return LinearDiffOp(dim, std::move(terms));
    } catch (const DomainError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace pinn_spectral

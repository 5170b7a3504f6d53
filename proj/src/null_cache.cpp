#include "rpcp/null_cache.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace rpcp {

std::int64_t NullKey::trim_micros() const {
    return std::llround(trim_fraction * 1e6);
}

std::string NullKey::file_name() const {
    return fmt::format("null_{}_t{:07d}_r{}_i{}_s{}.csv", to_string(variant), trim_micros(), replications,
                       increments, seed);
}

void write_null(std::ostream& out, const NullDistribution& null) {
    out << "variant,trim_fraction,replications,increments,seed\n";
    out << fmt::format("{},{},{},{},{}\n", to_string(null.variant), null.trim_fraction, null.replications,
                       null.increments, null.seed);
    out << "sample\n";
    std::string buf;
    for (double v : null.samples) {
        buf.clear();
        fmt::format_to(std::back_inserter(buf), "{}\n", v);
        out << buf;
    }
}

namespace {

template <typename T>
T parse_number(std::string_view text, const char* what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::invalid_argument(std::string("null file: bad ") + what + " '" + std::string(text) + "'");
    }
    return value;
}

}  // namespace

NullDistribution read_null(std::istream& in) {
    std::string line;
    auto next = [&] {
        if (!std::getline(in, line)) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };
    if (!next() || line != "variant,trim_fraction,replications,increments,seed") {
        throw std::invalid_argument("null file: missing header");
    }
    if (!next()) throw std::invalid_argument("null file: missing metadata row");
    std::vector<std::string_view> fields;
    {
        std::string_view view(line);
        std::size_t start = 0;
        for (std::size_t i = 0; i <= view.size(); ++i) {
            if (i == view.size() || view[i] == ',') {
                fields.push_back(view.substr(start, i - start));
                start = i + 1;
            }
        }
    }
    if (fields.size() != 5) throw std::invalid_argument("null file: metadata row needs 5 fields");
    NullDistribution null;
    null.variant = parse_variant(fields[0]);
    null.trim_fraction = parse_number<double>(fields[1], "trim fraction");
    null.replications = parse_number<std::size_t>(fields[2], "replications");
    null.increments = parse_number<std::size_t>(fields[3], "increments");
    null.seed = parse_number<std::uint64_t>(fields[4], "seed");
    if (!next() || line != "sample") throw std::invalid_argument("null file: missing sample header");
    null.samples.reserve(null.replications);
    while (next()) {
        if (line.empty()) continue;
        null.samples.push_back(parse_number<double>(line, "sample"));
    }
    if (null.samples.size() != null.replications) {
        throw std::invalid_argument("null file: expected " + std::to_string(null.replications) + " samples, found " +
                                    std::to_string(null.samples.size()));
    }
    return null;
}

NullCache::NullCache(std::filesystem::path dir, unsigned threads) : dir_(std::move(dir)), threads_(threads) {}

NullCache::Lookup NullCache::get(const NullKey& key, bool force) {
    const std::string name = key.file_name();
    std::lock_guard lock(mutex_);
    Lookup result;
    if (!dir_.empty()) result.file = dir_ / name;

    if (!force) {
        if (const auto it = memory_.find(name); it != memory_.end()) {
            result.null = it->second;
            result.cache_hit = true;
            return result;
        }
        if (!result.file.empty() && std::filesystem::exists(result.file)) {
            std::ifstream in(result.file);
            auto null = std::make_shared<const NullDistribution>(read_null(in));
            memory_[name] = null;
            result.null = std::move(null);
            result.cache_hit = true;
            return result;
        }
    }

    auto null = std::make_shared<const NullDistribution>(
        simulate_null(key.variant, key.trim_fraction, key.replications, key.increments, key.seed, threads_));
    if (!result.file.empty()) {
        std::filesystem::create_directories(dir_);
        const auto tmp = result.file.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write null cache file " + tmp);
            write_null(out, *null);
        }
        std::filesystem::rename(tmp, result.file);
    }
    memory_[name] = null;
    result.null = std::move(null);
    return result;
}

}  // namespace rpcp

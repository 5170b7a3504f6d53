#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "rpcp/cusum.hpp"

namespace rpcp {

/// Identity of a simulated null law. The trim fraction is keyed at 1e-6 resolution.
struct NullKey {
    CusumVariant variant = CusumVariant::weighted;
    double trim_fraction = 0.0;
    std::size_t replications = 100000;
    std::size_t increments = 10000;
    std::uint64_t seed = 1;

    std::int64_t trim_micros() const;
    std::string file_name() const;
};

/// CSV layout:
///   variant,trim_fraction,replications,increments,seed
///   weighted,0.06,100000,10000,1
///   sample
///   <ascending samples, shortest round-trip decimal>
void write_null(std::ostream& out, const NullDistribution& null);
NullDistribution read_null(std::istream& in);

/// Thread-safe memoising store for simulated null laws, optionally backed by a
/// directory of CSV files.
class NullCache {
public:
    /// Empty `dir` keeps results in memory only.
    explicit NullCache(std::filesystem::path dir = {}, unsigned threads = 0);

    struct Lookup {
        std::shared_ptr<const NullDistribution> null;
        bool cache_hit = false;
        std::filesystem::path file;  // empty for memory-only caches
    };

    /// Returns the cached law for `key`, simulating (and persisting) it on a
    /// miss or when `force` is set.
    Lookup get(const NullKey& key, bool force = false);

    const std::filesystem::path& directory() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    unsigned threads_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const NullDistribution>> memory_;
};

}  // namespace rpcp

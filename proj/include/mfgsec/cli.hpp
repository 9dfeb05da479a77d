#pragma once

// Command-line front end: TOML-style config file, overrides, dispatch to the
// module pipelines and artifact writing.

#include "mfgsec/algorithm_runner.hpp"
#include "mfgsec/bounds.hpp"
#include "mfgsec/hawkes_adversary.hpp"
#include "mfgsec/kl_optics.hpp"
#include "mfgsec/mr_pipeline.hpp"
#include "mfgsec/randomization_outage.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mfgsec::cli {

enum ExitCode : int { kOk = 0, kDomainError = 1, kUsageError = 2 };

// Flat key/value file. `[section]` headers prefix the keys that follow, so
// `nt = 51` under `[mfg]` is stored as `mfg.nt`. Values are numbers, booleans,
// quoted strings or bracketed lists; `#` starts a comment.
class ConfigFile {
public:
    static ConfigFile parse(std::string_view text);
    static ConfigFile load(const std::filesystem::path& path);

    // `key=value` override; replaces or adds the key.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double number(const std::string& key, double fallback) const;
    std::optional<double> optional_number(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;

    // Sorted key=value rendering, used for the config hash.
    std::string canonical() const;

private:
    struct Entry {
        std::string text;
        std::size_t line = 0;  // 0 for overrides
    };
    std::map<std::string, Entry> values_;

    const Entry* find(const std::string& key) const;
    [[noreturn]] static void bad_value(const std::string& key, const Entry& e, const std::string& expected);
};

struct CliConfig {
    std::string command;
    std::filesystem::path config_path;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::vector<std::string> overrides;
    bool quiet = false;
};

const std::vector<std::string>& commands();
std::string usage();

// Builders shared by the commands; all read from a parsed config.
mfg::MFGGrid grid_from(const ConfigFile& cfg);
mfg::NoiseSpec noise_from(const ConfigFile& cfg, std::uint64_t seed);
mfg::MfgProblem problem_from(const ConfigFile& cfg, const mfg::MFGGrid& grid, std::uint64_t seed);
mfg::PicardOptions picard_from(const ConfigFile& cfg);
algo::AlgorithmConfig algorithm_from(const ConfigFile& cfg, std::uint64_t seed);
hawkes::HawkesModel hawkes_from(const ConfigFile& cfg);
hawkes::LatticeRegion lattice_from(const ConfigFile& cfg);
mr::StructuralModel structural_from(const ConfigFile& cfg);
outage::OutageConfig outage_from(const ConfigFile& cfg);
kl::BeamSet beams_from(const ConfigFile& cfg);
bounds::BoundParams bounds_from(const ConfigFile& cfg);

// Two-column CSV (x, density) on a uniform grid; a header line is optional.
outage::PdfTable load_pdf_csv(const std::filesystem::path& path);

int run_command(const CliConfig& config, std::ostream& out, std::ostream& err);

// Parses argv and runs; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfgsec::cli

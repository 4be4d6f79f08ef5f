#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hvz/grid.hpp"
#include "hvz/hamiltonians.hpp"
#include "hvz/symmetry.hpp"

namespace hvz::cli {

inline constexpr int config_format_version = 1;

// Flat "section.key = value" entries, sorted by key.
using ConfigEntries = std::map<std::string, std::string>;

struct ConfigIssue {
    std::string key;
    std::string message;
};

// Every violated constraint of one configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

// '#' starts a comment; blank lines are skipped. Malformed lines and
// repeated keys raise ConfigError.
ConfigEntries parse_config(const std::string& text);
ConfigEntries load_config(const std::string& path);

// "key=value" replaces or adds one entry.
void apply_override(ConfigEntries& entries, const std::string& assignment);

enum class TaskKind { spectrum, threshold, weyl, checks };

std::string task_name(TaskKind kind);

struct RunConfig {
    TaskKind task = TaskKind::spectrum;
    SystemSpec system;

    int points = 0;
    double p_max = 0.0;
    SpinorMode mode = SpinorMode::compressed;
    std::size_t memory_budget = default_memory_budget;

    std::string permutation_irrep;
    std::string point_group;
    std::string point_irrep;
    InversionConvention convention = InversionConvention::literal;

    int eigen_count = 1;
    double tol = 1e-10;
    int max_iter = 5000;
    std::uint64_t seed = 1;

    // spectrum
    bool save_vectors = false;
    // threshold
    bool deduplicate = true;
    bool prune = true;
    // weyl
    std::vector<int> first_cluster;
    int weyl_steps = 3;
    double box0 = 0.0;
    double width0 = 0.1;
    double separation0 = 4.0;
    std::vector<double> offsets{0.0};  // lambda = kappa + offset, one study each
    // checks
    std::string suite;

    // Every recognised key with its effective value (defaults filled in).
    ConfigEntries resolved;
};

// Validates everything before any lattice is allocated and raises
// ConfigError listing all problems at once.
RunConfig build_run_config(const ConfigEntries& entries);

}  // namespace hvz::cli

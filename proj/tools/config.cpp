#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "hvz/checks.hpp"

namespace hvz::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, const std::string& separators) {
    std::vector<std::string> out;
    std::string token;
    for (char c : s) {
        if (separators.find(c) != std::string::npos) {
            if (!token.empty()) out.push_back(token);
            token.clear();
        } else {
            token += c;
        }
    }
    if (!token.empty()) out.push_back(token);
    return out;
}

std::optional<double> to_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (errno != 0 || *end != '\0') return std::nullopt;
    return v;
}

std::optional<long long> to_integer(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (errno != 0 || *end != '\0') return std::nullopt;
    return v;
}

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

std::string join(const std::vector<int>& v, const char* separator) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? separator : "") + std::to_string(v[i]);
    return out;
}

// Reads typed values, records every problem and the effective value of
// each key it touches.
class Reader {
public:
    Reader(const ConfigEntries& entries, ConfigEntries& resolved, std::vector<ConfigIssue>& issues)
        : entries_(entries), resolved_(resolved), issues_(issues) {}

    std::optional<std::string> raw(const std::string& key, bool required) {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) {
            if (required) issue(key, "missing required key");
            return std::nullopt;
        }
        resolved_[key] = it->second;
        return it->second;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto v = raw(key, false);
        if (!v) {
            if (!fallback.empty()) resolved_[key] = fallback;
            return fallback;
        }
        return *v;
    }

    double number(const std::string& key, std::optional<double> fallback) {
        const auto v = raw(key, !fallback);
        if (!v) {
            if (fallback) resolved_[key] = format_double(*fallback);
            return fallback.value_or(0.0);
        }
        const auto d = to_double(*v);
        if (!d) issue(key, "expected a number, got '" + *v + "'");
        return d.value_or(0.0);
    }

    long long integer(const std::string& key, std::optional<long long> fallback) {
        const auto v = raw(key, !fallback);
        if (!v) {
            if (fallback) resolved_[key] = std::to_string(*fallback);
            return fallback.value_or(0);
        }
        const auto i = to_integer(*v);
        if (!i) issue(key, "expected an integer, got '" + *v + "'");
        return i.value_or(0);
    }

    bool flag(const std::string& key, bool fallback) {
        const auto v = raw(key, false);
        if (!v) {
            resolved_[key] = fallback ? "true" : "false";
            return fallback;
        }
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        issue(key, "expected true or false, got '" + *v + "'");
        return fallback;
    }

    void issue(const std::string& key, const std::string& message) { issues_.push_back({key, message}); }

    // Keys never read are reported as unknown.
    void report_unused(TaskKind task) {
        for (const auto& [key, value] : entries_)
            if (!used_.count(key)) issue(key, "unknown key for task " + task_name(task));
    }

private:
    const ConfigEntries& entries_;
    ConfigEntries& resolved_;
    std::vector<ConfigIssue>& issues_;
    std::set<std::string> used_;
};

std::optional<Potential> parse_potential(Reader& reader, const std::string& key, int matrix_dim) {
    const auto v = reader.raw(key, false);
    if (!v) return std::nullopt;
    const auto words = split(*v, " \t");
    const auto fail = [&](const std::string& why) {
        reader.issue(key, why);
        return std::nullopt;
    };
    if (words.empty()) return fail("empty potential");
    const auto& kind = words[0];
    std::vector<double> args;
    if (kind != "table")
        for (std::size_t i = 1; i < words.size(); ++i) {
            const auto d = to_double(words[i]);
            if (!d) return fail("expected a number, got '" + words[i] + "'");
            args.push_back(*d);
        }
    try {
        if (kind == "none" && words.size() == 1) return std::nullopt;
        if (kind == "coulomb" && args.size() == 1) return Potential::coulomb(args[0]);
        if (kind == "yukawa" && args.size() == 2) return Potential::yukawa(args[0], args[1]);
        if (kind == "gaussian" && args.size() == 2) return Potential::gaussian_well(args[0], args[1]);
        if (kind == "table" && words.size() == 2) return Potential::load_table(words[1], matrix_dim);
    } catch (const Error& e) {
        return fail(e.what());
    }
    return fail("expected 'coulomb g', 'yukawa g mu', 'gaussian depth width', 'table path' or 'none'");
}

bool same_potential(const std::optional<Potential>& a, const std::optional<Potential>& b) {
    return a.has_value() == b.has_value() && (!a || *a == *b);
}

std::optional<Potential> pair_potential(const SystemSpec& s, int a, int b) {
    const auto* p = s.pair_between(a, b);
    return p ? std::optional<Potential>(p->potential) : std::nullopt;
}

// Identical particles share masses, external fields and pair terms.
void check_identical(const SystemSpec& s, Reader& reader) {
    const int n = s.particle_count();
    std::set<int> seen;
    for (const auto& group : s.identical) {
        for (int k : group) {
            if (k < 0 || k >= n) {
                reader.issue("system.identical", "particle " + std::to_string(k) + " out of range");
                return;
            }
            if (!seen.insert(k).second)
                reader.issue("system.identical", "particle " + std::to_string(k) + " listed twice");
        }
        if (group.size() < 2) reader.issue("system.identical", "groups need at least two particles");
    }
    for (const auto& group : s.identical) {
        const int a = group[0];
        for (std::size_t i = 1; i < group.size(); ++i) {
            const int b = group[i];
            const std::string tag = "particles " + std::to_string(a) + " and " + std::to_string(b);
            if (a < 0 || a >= n || b < 0 || b >= n) continue;
            if (s.masses[a] != s.masses[b]) reader.issue("system.masses", tag + " are identical but differ in mass");
            if (!same_potential(s.external_of(a), s.external_of(b)))
                reader.issue("system.external", tag + " are identical but see different external fields");
            for (int c = 0; c < n; ++c) {
                if (c == a || c == b) continue;
                if (!same_potential(pair_potential(s, a, c), pair_potential(s, b, c)))
                    reader.issue("system.pair", tag + " are identical but interact differently with particle " +
                                                    std::to_string(c));
            }
        }
    }
}

void read_system(Reader& reader, SystemSpec& s) {
    const auto masses = reader.raw("system.masses", true);
    if (masses) {
        for (const auto& word : split(*masses, ", \t")) {
            const auto m = to_double(word);
            if (!m || *m <= 0.0) {
                reader.issue("system.masses", "masses must be positive numbers, got '" + word + "'");
                continue;
            }
            s.masses.push_back(*m);
        }
        if (s.masses.empty()) reader.issue("system.masses", "at least one mass is required");
    }
    if (const auto n = reader.raw("system.particles", false)) {
        const auto count = to_integer(*n);
        if (!count || *count < 1)
            reader.issue("system.particles", "expected a positive integer, got '" + *n + "'");
        else if (masses && *count != static_cast<long long>(s.masses.size()))
            reader.issue("system.particles", "declares " + *n + " particles but system.masses lists " +
                                                 std::to_string(s.masses.size()));
    }
    const int n = s.particle_count();
    s.allow_supercritical = reader.flag("system.allow_supercritical", false);

    for (int k = 0; k < n; ++k) {
        s.external.push_back(parse_potential(reader, "system.external." + std::to_string(k), 4));
    }
    if (std::none_of(s.external.begin(), s.external.end(), [](const auto& p) { return p.has_value(); }))
        s.external.clear();
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (auto p = parse_potential(reader, "system.pair." + std::to_string(a) + "." + std::to_string(b), 16))
                s.pairs.push_back({a, b, *p});

    if (const auto groups = reader.raw("system.identical", false)) {
        for (const auto& group : split(*groups, ";")) {
            std::vector<int> members;
            for (const auto& word : split(group, ", \t")) {
                const auto k = to_integer(word);
                if (!k) {
                    reader.issue("system.identical", "expected particle indices, got '" + word + "'");
                    continue;
                }
                members.push_back(static_cast<int>(*k));
            }
            if (!members.empty()) s.identical.push_back(std::move(members));
        }
    }
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& i : issues) msg += "\n  " + i.key + ": " + i.message;
          return msg;
      }()),
      issues_(std::move(issues)) {}

ConfigEntries parse_config(const std::string& text) {
    ConfigEntries out;
    std::vector<ConfigIssue> issues;
    std::istringstream in(text);
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(number);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({where, "expected 'section.key = value'"});
            continue;
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.') {
            issues.push_back({where, "key '" + key + "' lacks a section prefix"});
            continue;
        }
        if (!out.emplace(key, value).second) issues.push_back({key, "repeated on " + where});
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return out;
}

ConfigEntries load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(std::vector<ConfigIssue>{{"config", "cannot read " + path}});
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void apply_override(ConfigEntries& entries, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto key = eq == std::string::npos ? std::string{} : trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw ConfigError(std::vector<ConfigIssue>{{"override", "expected section.key=value, got '" + assignment + "'"}});
    entries[key] = trim(assignment.substr(eq + 1));
}

std::string task_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::spectrum: return "spectrum";
        case TaskKind::threshold: return "threshold";
        case TaskKind::weyl: return "weyl";
        case TaskKind::checks: return "checks";
    }
    return "unknown";
}

RunConfig build_run_config(const ConfigEntries& entries) {
    RunConfig c;
    std::vector<ConfigIssue> issues;
    Reader reader(entries, c.resolved, issues);

    const auto type = reader.raw("task.type", true);
    if (type) {
        if (*type == "spectrum") c.task = TaskKind::spectrum;
        else if (*type == "threshold") c.task = TaskKind::threshold;
        else if (*type == "weyl") c.task = TaskKind::weyl;
        else if (*type == "checks") c.task = TaskKind::checks;
        else reader.issue("task.type", "expected spectrum, threshold, weyl or checks, got '" + *type + "'");
    }
    c.seed = static_cast<std::uint64_t>(reader.integer("solver.seed", 1));

    if (c.task == TaskKind::checks) {
        c.suite = reader.text("task.suite", "");
        const auto& names = check_suite_names();
        if (c.suite.empty()) reader.issue("task.suite", "missing required key");
        else if (std::find(names.begin(), names.end(), c.suite) == names.end())
            reader.issue("task.suite", "unknown suite '" + c.suite + "'");
        reader.report_unused(c.task);
        if (!issues.empty()) throw ConfigError(std::move(issues));
        return c;
    }

    read_system(reader, c.system);
    const int n = c.system.particle_count();

    c.points = static_cast<int>(reader.integer("discretization.points_per_axis", std::nullopt));
    if (entries.count("discretization.points_per_axis") && (c.points < 2 || c.points % 2))
        reader.issue("discretization.points_per_axis", "expected an even integer >= 2");
    c.p_max = reader.number("discretization.p_max", std::nullopt);
    if (entries.count("discretization.p_max") && !(c.p_max > 0.0))
        reader.issue("discretization.p_max", "must be positive");
    const auto mode = reader.text("discretization.spinor_mode", "compressed");
    if (mode == "full") c.mode = SpinorMode::full;
    else if (mode != "compressed") reader.issue("discretization.spinor_mode", "expected compressed or full");
    if (c.mode == SpinorMode::full)
        reader.issue("discretization.spinor_mode",
                     "task " + task_name(c.task) + " acts on the compressed positive-energy space");
    const auto budget = reader.integer("discretization.memory_budget_mib",
                                       static_cast<long long>(default_memory_budget >> 20));
    if (budget < 1) reader.issue("discretization.memory_budget_mib", "must be positive");
    c.memory_budget = static_cast<std::size_t>(std::max(budget, 1LL)) << 20;

    c.permutation_irrep = reader.text("symmetry.permutation_irrep", "");
    c.point_group = reader.text("symmetry.point_group", "");
    c.point_irrep = reader.text("symmetry.point_irrep", "");
    const auto convention = reader.text("symmetry.convention", "literal");
    if (convention == "parity") c.convention = InversionConvention::parity;
    else if (convention != "literal") reader.issue("symmetry.convention", "expected literal or parity");
    if (c.point_group.empty() != c.point_irrep.empty())
        reader.issue(c.point_group.empty() ? "symmetry.point_group" : "symmetry.point_irrep",
                     "point_group and point_irrep must be given together");

    c.eigen_count = static_cast<int>(reader.integer("solver.k", 1));
    if (c.eigen_count < 1) reader.issue("solver.k", "must be at least 1");
    c.tol = reader.number("solver.tol", 1e-10);
    if (!(c.tol > 0.0)) reader.issue("solver.tol", "must be positive");
    c.max_iter = static_cast<int>(reader.integer("solver.max_iter", 5000));
    if (c.max_iter < 1) reader.issue("solver.max_iter", "must be at least 1");

    switch (c.task) {
        case TaskKind::spectrum:
            c.save_vectors = reader.flag("task.save_vectors", false);
            break;
        case TaskKind::threshold:
            c.deduplicate = reader.flag("task.deduplicate", true);
            c.prune = reader.flag("task.prune", true);
            break;
        case TaskKind::weyl: {
            if (const auto first = reader.raw("task.first", false)) {
                for (const auto& word : split(*first, ", \t")) {
                    const auto k = to_integer(word);
                    if (!k || *k < 0 || *k >= n) reader.issue("task.first", "invalid particle index '" + word + "'");
                    else c.first_cluster.push_back(static_cast<int>(*k));
                }
            } else if (n > 0) {
                c.first_cluster.resize(n - 1);
                std::iota(c.first_cluster.begin(), c.first_cluster.end(), 0);
                c.resolved["task.first"] = join(c.first_cluster, ",");
            }
            std::sort(c.first_cluster.begin(), c.first_cluster.end());
            if (n > 0 && static_cast<int>(c.first_cluster.size()) != n - 1)
                reader.issue("task.first", "the second cluster must hold exactly one particle");
            c.weyl_steps = static_cast<int>(reader.integer("task.steps", 3));
            if (c.weyl_steps < 1) reader.issue("task.steps", "must be at least 1");
            const double natural = c.p_max > 0.0 ? std::numbers::pi * c.points / c.p_max : 0.0;
            c.box0 = reader.number("task.box0", natural);
            c.width0 = reader.number("task.width0", 0.1);
            c.separation0 = reader.number("task.separation0", 4.0);
            if (const auto offsets = reader.raw("task.offsets", false)) {
                c.offsets.clear();
                for (const auto& word : split(*offsets, ", \t")) {
                    const auto d = to_double(word);
                    if (!d) reader.issue("task.offsets", "expected a number, got '" + word + "'");
                    else c.offsets.push_back(*d);
                }
                if (c.offsets.empty()) reader.issue("task.offsets", "at least one offset is required");
            } else {
                c.resolved["task.offsets"] = "0";
            }
            if (!(c.width0 > 0.0)) reader.issue("task.width0", "must be positive");
            if (!(c.separation0 > 0.0)) reader.issue("task.separation0", "must be positive");
            break;
        }
        case TaskKind::checks: break;
    }

    reader.report_unused(c.task);
    if (n > 0) check_identical(c.system, reader);

    // Group names and labels, before any lattice exists.
    if (n > 0 && !c.permutation_irrep.empty()) {
        try {
            FiniteGroup::permutation_group(n, c.system.identical).irrep(c.permutation_irrep);
        } catch (const Error& e) {
            reader.issue("symmetry.permutation_irrep", e.what());
        }
    }
    if (!c.point_group.empty() && !c.point_irrep.empty()) {
        try {
            FiniteGroup::point_group(c.point_group, c.convention).irrep(c.point_irrep);
        } catch (const Error& e) {
            reader.issue("symmetry.point_group", e.what());
        }
    }

    if (issues.empty()) {
        try {
            validate_system(c.system);
        } catch (const Error& e) {
            reader.issue("system", e.what());
        }
    }
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return c;
}

}  // namespace hvz::cli

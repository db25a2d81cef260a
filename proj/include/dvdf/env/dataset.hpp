#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dvdf/core/policy.hpp"
#include "dvdf/core/tabular_mdp.hpp"

namespace dvdf {

enum class Domain { source, target };

std::string to_string(Domain d);
Domain parse_domain(const std::string& text);

struct DatasetRecord {
    std::size_t s = 0;
    std::size_t a = 0;
    double r = 0.0;
    std::size_t s_next = 0;
    bool done = false;
    Domain domain = Domain::source;
    std::string quality;

    bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
    std::vector<DatasetRecord> records;
    PolicyTable behavior = PolicyTable::uniform(1, 1);
    std::string mdp_id;
    std::uint64_t seed = 0;
    Domain domain = Domain::source;
    std::string quality;
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    double gamma = 0.0;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }
};

/// Episodes start from rho0 and reset when the next state is absorbing or
/// after this many steps.
std::size_t episode_horizon(double gamma);

/// n transitions from episodic rollouts of mu. Deterministic given seed.
Dataset collect(const TabularMDP& mdp, const PolicyTable& mu, std::size_t n, std::uint64_t seed, Domain domain,
                const std::string& quality, const std::string& mdp_id = "");

/// Concatenation in argument order. The behavior is the per-state
/// count-weighted mixture of the component behaviors.
Dataset mix(std::span<const Dataset> datasets);

/// Visit counts N(s, a), row-major.
std::vector<double> pair_counts(const Dataset& data);

/// Maximum-likelihood behavior; uniform on unvisited states.
PolicyTable empirical_behavior(const Dataset& data);

/// Throws InvalidInput on out-of-range ids or pairs the behavior cannot produce.
void validate(const Dataset& data);

void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in, std::optional<PolicyTable> behavior = std::nullopt);

/// Writes the records to path and the behavior to path + ".behavior". Loading
/// without the sidecar falls back to the empirical behavior.
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace dvdf

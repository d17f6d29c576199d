#pragma once

// Offspring laws and the lazily materialized tree environment.

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace brwlab {

/// Raised for malformed or inadmissible user input (law specs, env specs,
/// configs). The CLI maps it to exit status 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Finite-support probability law on the positive integers with no mass on 0
/// and mass on 1 strictly below 1.
class OffspringLaw {
public:
    struct Atom {
        int count;
        double probability;
    };

    /// Validates and normalizes. Rejects counts < 1 (in particular any mass on
    /// 0), duplicate counts, negative weights, a total deviating from 1 by more
    /// than 1e-9, and the degenerate law {1: 1}.
    static OffspringLaw from_entries(std::vector<std::pair<int, double>> entries);

    /// Parses "k1:w1,k2:w2,...".
    static OffspringLaw parse(std::string_view spec);

    static OffspringLaw point_mass(int count);

    /// Point mass without the p_1 < 1 check. Used for the ray regular:1 and
    /// the degenerate branching law {1: 1}, under which a BRW is a single walk.
    static OffspringLaw unchecked_point_mass(int count);

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    double mean() const noexcept { return mean_; }
    int d_min() const noexcept { return atoms_.front().count; }
    int d_max() const noexcept { return atoms_.back().count; }
    std::vector<int> support() const;
    bool is_point_mass() const noexcept { return atoms_.size() == 1; }
    double probability(int count) const noexcept;

    /// Inverse-CDF sample from a uniform draw in [0, 1).
    int sample(double u) const noexcept;

    std::string to_string() const;

    friend bool operator==(const OffspringLaw& a, const OffspringLaw& b) noexcept;

private:
    OffspringLaw() = default;

    std::vector<Atom> atoms_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

struct LawStats {
    double mean;
    int d_min;
    std::vector<int> support;
};

LawStats law_stats(const OffspringLaw& law);

/// Canonical hash of a vertex path. The root has kRootKey and the key of the
/// j-th child (1-based) is child_key(parent_key, j).
using VertexKey = std::uint64_t;
inline constexpr VertexKey kRootKey = 0x5EEDBA5E0F7EE000ULL;
VertexKey child_key(VertexKey parent, std::uint32_t index) noexcept;

/// Path of 1-based child indices from the root; the root is the empty path.
class VertexId {
public:
    VertexId() = default;
    explicit VertexId(std::vector<std::uint32_t> path) : path_(std::move(path)) {}

    static VertexId root() { return {}; }

    bool is_root() const noexcept { return path_.empty(); }
    int depth() const noexcept { return static_cast<int>(path_.size()); }
    std::span<const std::uint32_t> path() const noexcept { return path_; }

    VertexId parent() const;
    VertexId child(std::uint32_t index) const;
    VertexKey key() const noexcept;

    std::string to_string() const;

    friend bool operator==(const VertexId&, const VertexId&) = default;
    friend auto operator<=>(const VertexId&, const VertexId&) = default;

private:
    std::vector<std::uint32_t> path_;
};

/// A rooted tree without leaves whose child counts are a pure function of
/// (seed, vertex key). Copies share one read-through cache; racing writers
/// compute identical values, so concurrent queries are safe.
class TreeEnvironment {
public:
    enum class Kind { regular, random };

    static TreeEnvironment regular(int degree);
    static TreeEnvironment random(OffspringLaw law, std::uint64_t seed);

    /// "regular:d" or "bgw:<lawspec>:seed".
    static TreeEnvironment parse(std::string_view spec);

    Kind kind() const noexcept { return kind_; }
    bool is_regular() const noexcept { return kind_ == Kind::regular; }
    /// Degree of every vertex when the tree is deterministic (regular kind or
    /// a point-mass law), 0 otherwise.
    int fixed_degree() const noexcept;
    const OffspringLaw& law() const noexcept { return law_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Same law, independent draw of the tree (used for annealed replicas).
    TreeEnvironment with_seed(std::uint64_t seed) const;

    /// Uncached child count of the vertex with the given key.
    int child_count_at(VertexKey key) const noexcept {
        if (kind_ == Kind::regular) return degree_;
        return sample_child_count(key);
    }

    /// Cached child count; throws std::out_of_range for a path that leaves the tree.
    int child_count(const VertexId& v) const;
    std::vector<VertexId> children(const VertexId& v) const;
    bool contains(const VertexId& v) const;

    std::size_t cache_size() const;
    std::map<VertexKey, int> cache_snapshot() const;

    std::string to_string() const;

private:
    TreeEnvironment(Kind kind, OffspringLaw law, int degree, std::uint64_t seed);
    int sample_child_count(VertexKey key) const noexcept;
    int cached_count(VertexKey key) const;

    struct Cache;

    Kind kind_;
    OffspringLaw law_;
    int degree_;
    std::uint64_t seed_;
    std::shared_ptr<Cache> cache_;
};

/// Append-only arena of vertex visits owned by one particle system. Each
/// descent appends a record for the child; ascending follows the parent link.
/// Two records may name the same vertex (equal keys). Planted records have no
/// parent and let a subsystem start below the root.
class PathArena {
public:
    using Node = std::uint32_t;
    static constexpr Node kNone = 0xFFFFFFFFu;

    explicit PathArena(TreeEnvironment env);

    const TreeEnvironment& environment() const noexcept { return env_; }

    /// Drops all records and plants the root.
    Node reset();
    /// Drops all records and plants a parentless record for the vertex with `key` at `depth`.
    Node reset_at(VertexKey key, int depth);

    int depth(Node n) const noexcept { return static_cast<int>(nodes_[n].depth); }
    int child_count(Node n) const noexcept { return static_cast<int>(nodes_[n].child_count); }
    Node parent(Node n) const noexcept { return nodes_[n].parent; }
    VertexKey key(Node n) const noexcept { return nodes_[n].key; }

    /// Appends the child with 0-based `index`.
    Node descend(Node n, int index) {
        const auto j = static_cast<std::uint32_t>(index + 1);
        const VertexKey key = child_key(nodes_[n].key, j);
        nodes_.push_back({key, n, nodes_[n].depth + 1, static_cast<std::uint32_t>(env_.child_count_at(key)), j});
        return static_cast<Node>(nodes_.size() - 1);
    }

    /// Path from the outermost planted record; equals the VertexId when planted at the root.
    VertexId vertex(Node n) const;
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Record {
        VertexKey key;
        Node parent;
        std::uint32_t depth;
        std::uint32_t child_count;
        std::uint32_t index;  // 1-based position among siblings
    };

    TreeEnvironment env_;
    std::vector<Record> nodes_;
};

}  // namespace brwlab

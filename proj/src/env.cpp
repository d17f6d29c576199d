#include "brwlab/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "brwlab/rng.hpp"

namespace brwlab {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view text, std::string_view what) {
    text = trim(text);
    T value{};
    if constexpr (std::is_floating_point_v<T>) {
        // std::from_chars for double is available in libstdc++ 11.
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    } else {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

constexpr std::uint64_t kEnvLane = 0xE7F1A5C0DEULL;

}  // namespace

// ---------------------------------------------------------------------------
// OffspringLaw

OffspringLaw OffspringLaw::from_entries(std::vector<std::pair<int, double>> entries) {
    if (entries.empty()) throw ConfigError("offspring law has no entries");
    std::sort(entries.begin(), entries.end());
    double total = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto [count, prob] = entries[i];
        if (count == 0) throw ConfigError("offspring law puts mass on 0 (trees must have no leaves)");
        if (count < 0) throw ConfigError("offspring counts must be positive");
        if (!(prob >= 0.0) || !std::isfinite(prob)) throw ConfigError("offspring probabilities must be finite and >= 0");
        if (i > 0 && entries[i - 1].first == count) throw ConfigError("duplicate offspring count " + std::to_string(count));
        total += prob;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "offspring probabilities sum to " << total << ", expected 1";
        throw ConfigError(msg.str());
    }

    OffspringLaw law;
    for (const auto& [count, prob] : entries)
        if (prob > 0.0) law.atoms_.push_back({count, prob / total});
    if (law.atoms_.size() == 1 && law.atoms_.front().count == 1)
        throw ConfigError("offspring law is the point mass at 1 (need p_1 < 1)");

    double acc = 0.0;
    for (const auto& atom : law.atoms_) {
        acc += atom.probability;
        law.cdf_.push_back(acc);
        law.mean_ += atom.count * atom.probability;
    }
    law.cdf_.back() = 1.0;
    return law;
}

OffspringLaw OffspringLaw::parse(std::string_view spec) {
    std::vector<std::pair<int, double>> entries;
    spec = trim(spec);
    if (spec.empty()) throw ConfigError("empty offspring law spec");
    while (!spec.empty()) {
        const auto comma = spec.find(',');
        const auto item = spec.substr(0, comma);
        const auto colon = item.find(':');
        if (colon == std::string_view::npos)
            throw ConfigError("law entry '" + std::string(item) + "' is not of the form k:w");
        entries.emplace_back(parse_number<int>(item.substr(0, colon), "offspring count"),
                             parse_number<double>(item.substr(colon + 1), "offspring weight"));
        if (comma == std::string_view::npos) break;
        spec.remove_prefix(comma + 1);
    }
    return from_entries(std::move(entries));
}

OffspringLaw OffspringLaw::point_mass(int count) { return from_entries({{count, 1.0}}); }

OffspringLaw OffspringLaw::unchecked_point_mass(int count) {
    if (count < 1) throw ConfigError("offspring counts must be positive");
    OffspringLaw law;
    law.atoms_.push_back({count, 1.0});
    law.cdf_.push_back(1.0);
    law.mean_ = count;
    return law;
}

std::vector<int> OffspringLaw::support() const {
    std::vector<int> out;
    out.reserve(atoms_.size());
    for (const auto& atom : atoms_) out.push_back(atom.count);
    return out;
}

double OffspringLaw::probability(int count) const noexcept {
    for (const auto& atom : atoms_)
        if (atom.count == count) return atom.probability;
    return 0.0;
}

int OffspringLaw::sample(double u) const noexcept {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), atoms_.size() - 1);
    return atoms_[i].count;
}

std::string OffspringLaw::to_string() const {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) out << ',';
        out << atoms_[i].count << ':' << atoms_[i].probability;
    }
    return out.str();
}

bool operator==(const OffspringLaw& a, const OffspringLaw& b) noexcept {
    if (a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t i = 0; i < a.atoms_.size(); ++i)
        if (a.atoms_[i].count != b.atoms_[i].count || a.atoms_[i].probability != b.atoms_[i].probability)
            return false;
    return true;
}

LawStats law_stats(const OffspringLaw& law) { return {law.mean(), law.d_min(), law.support()}; }

// ---------------------------------------------------------------------------
// VertexId

VertexKey child_key(VertexKey parent, std::uint32_t index) noexcept { return hash_combine(parent, index); }

VertexId VertexId::parent() const {
    if (path_.empty()) throw std::out_of_range("the root has no parent");
    return VertexId(std::vector<std::uint32_t>(path_.begin(), path_.end() - 1));
}

VertexId VertexId::child(std::uint32_t index) const {
    if (index == 0) throw std::out_of_range("child indices are 1-based");
    auto path = path_;
    path.push_back(index);
    return VertexId(std::move(path));
}

VertexKey VertexId::key() const noexcept {
    VertexKey key = kRootKey;
    for (auto index : path_) key = child_key(key, index);
    return key;
}

std::string VertexId::to_string() const {
    if (path_.empty()) return "root";
    std::string out;
    for (std::size_t i = 0; i < path_.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(path_[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// TreeEnvironment

struct TreeEnvironment::Cache {
    mutable std::shared_mutex mutex;
    std::unordered_map<VertexKey, int> counts;
};

TreeEnvironment::TreeEnvironment(Kind kind, OffspringLaw law, int degree, std::uint64_t seed)
    : kind_(kind), law_(std::move(law)), degree_(degree), seed_(seed), cache_(std::make_shared<Cache>()) {}

TreeEnvironment TreeEnvironment::regular(int degree) {
    if (degree < 1) throw ConfigError("regular tree degree must be >= 1");
    // regular:1 is a ray; its law is the point mass at 1, which from_entries rejects.
    return TreeEnvironment(Kind::regular, OffspringLaw::unchecked_point_mass(degree), degree, 0);
}

TreeEnvironment TreeEnvironment::random(OffspringLaw law, std::uint64_t seed) {
    const int degree = law.is_point_mass() ? law.d_min() : 0;
    return TreeEnvironment(Kind::random, std::move(law), degree, seed);
}

TreeEnvironment TreeEnvironment::parse(std::string_view spec) {
    spec = trim(spec);
    if (spec.starts_with("regular:")) {
        return regular(parse_number<int>(spec.substr(8), "regular degree"));
    }
    if (spec.starts_with("bgw:")) {
        const auto body = spec.substr(4);
        const auto colon = body.rfind(':');
        if (colon == std::string_view::npos || body.substr(0, colon).find(':') == std::string_view::npos)
            throw ConfigError("environment spec must be bgw:<lawspec>:<seed>");
        return random(OffspringLaw::parse(body.substr(0, colon)),
                      parse_number<std::uint64_t>(body.substr(colon + 1), "environment seed"));
    }
    throw ConfigError("unknown environment spec '" + std::string(spec) + "' (expected regular:d or bgw:<law>:<seed>)");
}

int TreeEnvironment::fixed_degree() const noexcept { return degree_; }

TreeEnvironment TreeEnvironment::with_seed(std::uint64_t seed) const {
    if (kind_ == Kind::regular) return *this;
    return random(law_, seed);
}

int TreeEnvironment::sample_child_count(VertexKey key) const noexcept {
    return law_.sample(to_unit(counter_hash(seed_, kEnvLane, key)));
}

int TreeEnvironment::cached_count(VertexKey key) const {
    {
        std::shared_lock lock(cache_->mutex);
        if (auto it = cache_->counts.find(key); it != cache_->counts.end()) return it->second;
    }
    const int count = child_count_at(key);
    std::unique_lock lock(cache_->mutex);
    cache_->counts.emplace(key, count);
    return count;
}

int TreeEnvironment::child_count(const VertexId& v) const {
    VertexKey key = kRootKey;
    int count = cached_count(key);
    for (auto index : v.path()) {
        if (index < 1 || static_cast<int>(index) > count)
            throw std::out_of_range("vertex " + v.to_string() + " is not in the tree");
        key = child_key(key, index);
        count = cached_count(key);
    }
    return count;
}

std::vector<VertexId> TreeEnvironment::children(const VertexId& v) const {
    const int count = child_count(v);
    std::vector<VertexId> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 1; j <= count; ++j) out.push_back(v.child(static_cast<std::uint32_t>(j)));
    return out;
}

bool TreeEnvironment::contains(const VertexId& v) const {
    VertexKey key = kRootKey;
    for (auto index : v.path()) {
        if (index < 1 || static_cast<int>(index) > child_count_at(key)) return false;
        key = child_key(key, index);
    }
    return true;
}

std::size_t TreeEnvironment::cache_size() const {
    std::shared_lock lock(cache_->mutex);
    return cache_->counts.size();
}

std::map<VertexKey, int> TreeEnvironment::cache_snapshot() const {
    std::shared_lock lock(cache_->mutex);
    return {cache_->counts.begin(), cache_->counts.end()};
}

std::string TreeEnvironment::to_string() const {
    if (kind_ == Kind::regular) return "regular:" + std::to_string(degree_);
    return "bgw:" + law_.to_string() + ":" + std::to_string(seed_);
}

// ---------------------------------------------------------------------------
// PathArena

PathArena::PathArena(TreeEnvironment env) : env_(std::move(env)) {
    nodes_.reserve(1024);
    reset();
}

PathArena::Node PathArena::reset() { return reset_at(kRootKey, 0); }

PathArena::Node PathArena::reset_at(VertexKey key, int depth) {
    nodes_.clear();
    nodes_.push_back({key, kNone, static_cast<std::uint32_t>(depth),
                      static_cast<std::uint32_t>(env_.child_count_at(key)), 0});
    return 0;
}

VertexId PathArena::vertex(Node n) const {
    std::vector<std::uint32_t> path;
    for (Node cur = n; nodes_[cur].parent != kNone; cur = nodes_[cur].parent) path.push_back(nodes_[cur].index);
    std::reverse(path.begin(), path.end());
    return VertexId(std::move(path));
}

}  // namespace brwlab

#include "smellmap/community.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "smellmap/errors.hpp"
#include "smellmap/rng.hpp"

namespace smellmap::community {

using nlohmann::json;

namespace {

constexpr double kGainEps = 1e-12;
constexpr int kRestarts = 4;
constexpr int kMaxPasses = 128;
constexpr int kChainRetries = 8;
constexpr std::size_t kMaxChain = 32;

double plogp(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

void WeightedGraph::init(std::size_t nodes) {
    n = nodes;
    adj.assign(n, {});
    self_loop.assign(n, 0.0);
    degree.assign(n, 0.0);
    total_weight = 0.0;
}

void WeightedGraph::add_edge(std::uint32_t u, std::uint32_t v, double w) {
    if (u == v) {
        self_loop[u] += w;
        degree[u] += 2.0 * w;
    } else {
        adj[u].emplace_back(v, w);
        adj[v].emplace_back(u, w);
        degree[u] += w;
        degree[v] += w;
    }
    total_weight += w;
}

WeightedGraph WeightedGraph::from_cograph(const cograph::CooccurrenceGraph& g) {
    WeightedGraph wg;
    wg.init(g.node_count());
    for (const auto& [pair, w] : g.edges) {
        wg.add_edge(pair.first, pair.second, static_cast<double>(w));
    }
    return wg;
}

Partition Partition::singletons(std::size_t n) {
    Partition p;
    p.community.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.community[i] = static_cast<std::uint32_t>(i);
    p.count = static_cast<std::uint32_t>(n);
    return p;
}

void Partition::canonicalize() {
    std::vector<std::uint32_t> remap(community.size(), UINT32_MAX);
    std::uint32_t next = 0;
    for (auto& c : community) {
        if (remap[c] == UINT32_MAX) remap[c] = next++;
        c = remap[c];
    }
    count = next;
}

namespace {

void check_partition(const WeightedGraph& g, const Partition& p) {
    if (p.community.size() != g.n) {
        throw ValidationError("partition size does not match graph");
    }
    for (auto c : p.community) {
        if (c >= p.count) throw ValidationError("partition has out-of-range community id");
    }
}

struct CommunityAggregates {
    std::vector<double> deg;  // sum of member degrees
    std::vector<double> in;   // intra weight: self-loops once, intra edges once

    CommunityAggregates(const WeightedGraph& g, const Partition& p)
        : deg(p.count, 0.0), in(p.count, 0.0) {
        for (std::size_t u = 0; u < g.n; ++u) {
            const auto c = p.community[u];
            deg[c] += g.degree[u];
            in[c] += g.self_loop[u];
            for (const auto& [v, w] : g.adj[u]) {
                if (p.community[v] == c && v > u) in[c] += w;
            }
        }
    }
};

}  // namespace

double modularity(const WeightedGraph& g, const Partition& p) {
    if (g.n == 0) throw ValidationError("modularity: empty graph");
    if (g.total_weight <= 0.0) throw ValidationError("modularity: zero-weight graph");
    check_partition(g, p);
    CommunityAggregates agg(g, p);
    const double W = g.total_weight;
    double q = 0.0;
    for (std::uint32_t c = 0; c < p.count; ++c) {
        const double frac = agg.deg[c] / (2.0 * W);
        q += agg.in[c] / W - frac * frac;
    }
    return q;
}

double map_equation(const WeightedGraph& g, const Partition& p) {
    if (g.n == 0) throw ValidationError("map_equation: empty graph");
    check_partition(g, p);
    // No edges means no flow: nothing to encode, zero description length.
    // Covers the single-node graph in particular.
    if (g.total_weight <= 0.0) return 0.0;
    CommunityAggregates agg(g, p);
    const double two_w = 2.0 * g.total_weight;

    // L = h(q) - 2*sum h(q_i) + sum h(p_i) - sum h(p_alpha), h(x) = x log2 x,
    // with q_i the module exit rate and p_i = q_i + module visit mass.
    double sum_q = 0.0, sum_h_q = 0.0, sum_h_p = 0.0;
    for (std::uint32_t c = 0; c < p.count; ++c) {
        const double exit = (agg.deg[c] - 2.0 * agg.in[c]) / two_w;
        const double visit = agg.deg[c] / two_w;
        sum_q += exit;
        sum_h_q += plogp(exit);
        sum_h_p += plogp(exit + visit);
    }
    double sum_h_node = 0.0;
    for (std::size_t u = 0; u < g.n; ++u) sum_h_node += plogp(g.degree[u] / two_w);

    const double codelength = plogp(sum_q) - 2.0 * sum_h_q + sum_h_p - sum_h_node;
    return std::max(codelength, 0.0);
}

double modularity(const cograph::CooccurrenceGraph& g, const Partition& p) {
    return modularity(WeightedGraph::from_cograph(g), p);
}

double map_equation(const cograph::CooccurrenceGraph& g, const Partition& p) {
    return map_equation(WeightedGraph::from_cograph(g), p);
}

namespace {

enum class Objective { modularity, codelength };

// One level of local moving: starts from singletons, sweeps nodes in a
// seeded shuffled order, applies the single best strictly-improving move
// per node (ties broken towards the lowest community id), until a full
// pass makes no move.
class LocalMover {
public:
    // Starts from singletons, or from `init` when given (used to re-sweep the
    // flat graph after coarse levels have already merged communities).
    LocalMover(const WeightedGraph& g, Objective obj,
               const std::vector<std::uint32_t>* init = nullptr)
        : g_(g), obj_(obj) {
        comm_.resize(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            comm_[i] = init ? (*init)[i] : static_cast<std::uint32_t>(i);
        }
        c_deg_.assign(g.n, 0.0);
        c_in_.assign(g.n, 0.0);
        csize_.assign(g.n, 0);
        for (std::size_t u = 0; u < g.n; ++u) {
            const auto c = comm_[u];
            c_deg_[c] += g.degree[u];
            c_in_[c] += g.self_loop[u];
            ++csize_[c];
            for (const auto& [v, w] : g.adj[u]) {
                if (v > u && comm_[v] == c) c_in_[c] += w;
            }
        }
        for (std::uint32_t c = 0; c < g.n; ++c) {
            if (csize_[c] == 0) empty_.insert(c);
        }
        sum_q_ = 0.0;
        const double two_w = 2.0 * g_.total_weight;
        for (std::size_t c = 0; c < g.n; ++c) {
            sum_q_ += (c_deg_[c] - 2.0 * c_in_[c]) / two_w;
        }
        neigh_weight_.assign(g.n, 0.0);
    }

    Partition run(Rng& rng) {
        std::vector<std::uint32_t> order(g_.n);
        for (std::size_t i = 0; i < g_.n; ++i) order[i] = static_cast<std::uint32_t>(i);
        for (int cycle = 0; cycle < kMaxPasses; ++cycle) {
            for (int pass = 0; pass < kMaxPasses; ++pass) {
                rng.shuffle(order);
                std::size_t moved = 0;
                for (const auto u : order) moved += try_move(u);
                if (moved == 0) break;
            }
            bool improved = chain_round(nullptr);
            for (int t = 0; !improved && t < kChainRetries; ++t) {
                improved = chain_round(&rng);
            }
            if (!improved) break;
        }
        Partition p;
        p.community = comm_;
        p.count = static_cast<std::uint32_t>(g_.n);
        p.canonicalize();
        return p;
    }

private:
    // Weight from u to each touched community, including its own.
    void gather_neighbour_weights(std::uint32_t u) {
        for (const auto c : touched_) neigh_weight_[c] = 0.0;
        touched_.clear();
        touched_.push_back(comm_[u]);
        for (const auto& [v, w] : g_.adj[u]) {
            const auto c = comm_[v];
            if (neigh_weight_[c] == 0.0 && c != comm_[u]) touched_.push_back(c);
            neigh_weight_[c] += w;
        }
        std::sort(touched_.begin(), touched_.end());
    }

    double gain_modularity(std::uint32_t u, std::uint32_t from, std::uint32_t to,
                           double k_from, double k_to) const {
        const double W = g_.total_weight;
        const double d = g_.degree[u];
        return (k_to - k_from) / W - d * (c_deg_[to] - c_deg_[from] + d) / (2.0 * W * W);
    }

    // Negative of the codelength change, so larger is better for both
    // objectives.
    double gain_codelength(std::uint32_t u, std::uint32_t from, std::uint32_t to,
                           double k_from, double k_to) const {
        const double two_w = 2.0 * g_.total_weight;
        const double d = g_.degree[u];
        const double self = g_.self_loop[u];

        const double from_deg_new = c_deg_[from] - d;
        const double from_in_new = c_in_[from] - k_from - self;
        const double to_deg_new = c_deg_[to] + d;
        const double to_in_new = c_in_[to] + k_to + self;

        const double q_from = (c_deg_[from] - 2.0 * c_in_[from]) / two_w;
        const double q_to = (c_deg_[to] - 2.0 * c_in_[to]) / two_w;
        const double q_from_new = (from_deg_new - 2.0 * from_in_new) / two_w;
        const double q_to_new = (to_deg_new - 2.0 * to_in_new) / two_w;

        const double sum_q_new = sum_q_ - q_from - q_to + q_from_new + q_to_new;

        double delta = plogp(sum_q_new) - plogp(sum_q_);
        delta -= 2.0 * (plogp(q_from_new) + plogp(q_to_new) - plogp(q_from) - plogp(q_to));
        delta += plogp(q_from_new + from_deg_new / two_w) - plogp(q_from + c_deg_[from] / two_w);
        delta += plogp(q_to_new + to_deg_new / two_w) - plogp(q_to + c_deg_[to] / two_w);
        return -delta;
    }

    bool try_move(std::uint32_t u) {
        gather_neighbour_weights(u);
        const auto from = comm_[u];
        const double k_from = neigh_weight_[from];

        double best_gain = kGainEps;
        std::uint32_t best_to = from;
        for (const auto to : touched_) {
            if (to == from) continue;
            const double g = obj_ == Objective::modularity
                                 ? gain_modularity(u, from, to, k_from, neigh_weight_[to])
                                 : gain_codelength(u, from, to, k_from, neigh_weight_[to]);
            // touched_ is sorted, so on ties the lowest community id wins.
            if (g > best_gain + kGainEps ||
                (g > best_gain - kGainEps && g > kGainEps && to < best_to)) {
                if (g > best_gain) best_gain = g;
                best_to = to;
            }
        }
        // Also consider carving u out into a fresh community. Whenever the
        // source community has another member, some id is vacant, and this
        // escape hatch is what lets a node stuck in an oversized community
        // step back out. It is taken only on a strict win so the lowest-id
        // rule above still settles ties between occupied communities.
        if (csize_[from] > 1 && !empty_.empty()) {
            const std::uint32_t to = *empty_.begin();
            const double g = obj_ == Objective::modularity
                                 ? gain_modularity(u, from, to, k_from, 0.0)
                                 : gain_codelength(u, from, to, k_from, 0.0);
            if (g > best_gain + kGainEps) {
                best_gain = g;
                best_to = to;
            }
        }
        if (best_to == from) return false;
        apply_move(u, from, best_to, k_from, neigh_weight_[best_to]);
        return true;
    }

    // Best single relocation for u, worsening ones included. Used by the
    // chain phase, which needs a move for every node, not just good ones.
    bool best_move_any(std::uint32_t u, double& gain, std::uint32_t& to_out) {
        gather_neighbour_weights(u);
        const auto from = comm_[u];
        const double k_from = neigh_weight_[from];
        bool have = false;
        for (const auto to : touched_) {
            if (to == from) continue;
            const double g = obj_ == Objective::modularity
                                 ? gain_modularity(u, from, to, k_from, neigh_weight_[to])
                                 : gain_codelength(u, from, to, k_from, neigh_weight_[to]);
            if (!have || g > gain + kGainEps) {
                gain = g;
                to_out = to;
                have = true;
            }
        }
        if (csize_[from] > 1 && !empty_.empty()) {
            const std::uint32_t to = *empty_.begin();
            const double g = obj_ == Objective::modularity
                                 ? gain_modularity(u, from, to, k_from, 0.0)
                                 : gain_codelength(u, from, to, k_from, 0.0);
            if (!have || g > gain + kGainEps) {
                gain = g;
                to_out = to;
                have = true;
            }
        }
        return have;
    }

    // One Kernighan-Lin style chain: repeatedly take the best single move
    // even when it worsens the objective, lock the moved node, then keep the
    // best prefix of the chain and revert the rest. This escapes optima that
    // need a coordinated pair of moves, where each move alone loses but the
    // pair wins; greedy sweeps and restarts never find those. Without
    // order_rng each step takes the globally best move; with it nodes are
    // visited in a shuffled order instead, which reaches chains the greedy
    // pick walks past (it favours zero-gain lateral moves that can dismantle
    // the winning combination before a mildly losing opener gets a turn).
    bool chain_round(Rng* order_rng) {
        struct Step {
            std::uint32_t u, from, to;
        };
        std::vector<Step> chain;
        std::vector<char> locked(g_.n, 0);
        double cum = 0.0, best_cum = kGainEps;
        std::size_t best_len = 0;
        std::vector<std::uint32_t> order(g_.n);
        for (std::size_t i = 0; i < g_.n; ++i) order[i] = static_cast<std::uint32_t>(i);
        if (order_rng) order_rng->shuffle(order);
        const std::size_t max_len = std::min<std::size_t>(g_.n, kMaxChain);
        for (std::size_t step = 0; step < g_.n && chain.size() < max_len; ++step) {
            bool have = false;
            double pick_gain = 0.0;
            std::uint32_t pick_u = 0, pick_to = 0;
            if (order_rng) {
                const auto u = order[step];
                if (best_move_any(u, pick_gain, pick_to)) {
                    pick_u = u;
                    have = true;
                }
            } else {
                for (std::size_t u = 0; u < g_.n; ++u) {
                    if (locked[u]) continue;
                    double g = 0.0;
                    std::uint32_t to = 0;
                    if (!best_move_any(static_cast<std::uint32_t>(u), g, to)) continue;
                    // Scan order breaks ties towards the lowest node id.
                    if (!have || g > pick_gain + kGainEps) {
                        pick_gain = g;
                        pick_u = static_cast<std::uint32_t>(u);
                        pick_to = to;
                        have = true;
                    }
                }
                if (!have) break;
            }
            if (!have) continue;
            gather_neighbour_weights(pick_u);
            const auto from = comm_[pick_u];
            apply_move(pick_u, from, pick_to, neigh_weight_[from], neigh_weight_[pick_to]);
            locked[pick_u] = 1;
            chain.push_back({pick_u, from, pick_to});
            cum += pick_gain;
            if (cum > best_cum) {
                best_cum = cum;
                best_len = chain.size();
            }
        }
        for (std::size_t i = chain.size(); i > best_len; --i) {
            const auto& s = chain[i - 1];
            gather_neighbour_weights(s.u);
            apply_move(s.u, s.to, s.from, neigh_weight_[s.to], neigh_weight_[s.from]);
        }
        return best_len > 0;
    }

    void apply_move(std::uint32_t u, std::uint32_t from, std::uint32_t to,
                    double k_from, double k_to) {
        const double two_w = 2.0 * g_.total_weight;
        const double d = g_.degree[u];
        const double self = g_.self_loop[u];
        sum_q_ -= (c_deg_[from] - 2.0 * c_in_[from]) / two_w;
        sum_q_ -= (c_deg_[to] - 2.0 * c_in_[to]) / two_w;
        c_deg_[from] -= d;
        c_in_[from] -= k_from + self;
        c_deg_[to] += d;
        c_in_[to] += k_to + self;
        sum_q_ += (c_deg_[from] - 2.0 * c_in_[from]) / two_w;
        sum_q_ += (c_deg_[to] - 2.0 * c_in_[to]) / two_w;
        comm_[u] = to;
        if (--csize_[from] == 0) empty_.insert(from);
        if (csize_[to]++ == 0) empty_.erase(to);
    }

    const WeightedGraph& g_;
    Objective obj_;
    std::vector<std::uint32_t> comm_;
    std::vector<double> c_deg_, c_in_;
    std::vector<double> neigh_weight_;
    std::vector<std::uint32_t> touched_;
    std::vector<std::uint32_t> csize_;
    std::set<std::uint32_t> empty_;
    double sum_q_ = 0.0;
};

WeightedGraph aggregate(const WeightedGraph& g, const Partition& p) {
    WeightedGraph out;
    out.init(p.count);
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> edges;
    for (std::size_t u = 0; u < g.n; ++u) {
        const auto cu = p.community[u];
        if (g.self_loop[u] != 0.0) edges[{cu, cu}] += g.self_loop[u];
        for (const auto& [v, w] : g.adj[u]) {
            if (v < u) continue;
            const auto cv = p.community[v];
            auto a = cu, b = cv;
            if (a > b) std::swap(a, b);
            edges[{a, b}] += w;
        }
    }
    for (const auto& [pair, w] : edges) out.add_edge(pair.first, pair.second, w);
    return out;
}

Partition optimize_once(const WeightedGraph& g, Objective obj, std::uint64_t seed,
                        const std::vector<std::uint32_t>* init = nullptr) {
    Rng rng(seed);
    Partition mapping = Partition::singletons(g.n);
    if (init) {
        mapping.community = *init;
        mapping.canonicalize();
    }
    for (int round = 0; round < kMaxPasses; ++round) {
        // Sweep the flat graph first, starting from the current partition.
        // Coarsening alone would freeze nodes into super-nodes for good, so
        // this is what lets a single node still leave a merged community.
        LocalMover flat(g, obj, &mapping.community);
        mapping = flat.run(rng);

        WeightedGraph level = aggregate(g, mapping);
        LocalMover coarse(level, obj);
        Partition p = coarse.run(rng);
        if (p.count == level.n) break;
        for (auto& c : mapping.community) c = p.community[c];
        mapping.count = p.count;
        mapping.canonicalize();
    }
    return mapping;
}

Partition optimize(const WeightedGraph& g, Objective obj, std::uint64_t seed) {
    if (g.n == 0) throw ValidationError("optimize: empty graph");
    if (g.total_weight <= 0.0) return Partition::singletons(g.n);

    Rng seeder(seed);
    Partition best;
    double best_score = 0.0;
    // Tiny graphs have rugged landscapes relative to their size and each
    // attempt costs microseconds, so give them many more random starts.
    const int restarts = g.n <= 16 ? 16 : kRestarts;
    std::vector<std::uint32_t> rand_init(g.n);
    for (int r = 0; r < restarts; ++r) {
        const std::uint64_t run_seed = seeder.fork();
        const std::vector<std::uint32_t>* init = nullptr;
        if (r > 0) {
            // Later restarts begin from a random partition; from-singleton
            // runs are heavily canalised and mostly rediscover each other.
            for (auto& c : rand_init) {
                c = static_cast<std::uint32_t>(seeder.below(g.n));
            }
            init = &rand_init;
        }
        Partition p = optimize_once(g, obj, run_seed, init);
        const double score =
            obj == Objective::modularity ? modularity(g, p) : -map_equation(g, p);
        if (r == 0 || score > best_score + kGainEps) {
            best = std::move(p);
            best_score = score;
        }
    }
    return best;
}

}  // namespace

Partition infomap_partition(const WeightedGraph& g, std::uint64_t seed) {
    return optimize(g, Objective::codelength, seed);
}

Partition infomap_partition(const cograph::CooccurrenceGraph& g, std::uint64_t seed) {
    return infomap_partition(WeightedGraph::from_cograph(g), seed);
}

Partition louvain_partition(const WeightedGraph& g, std::uint64_t seed) {
    return optimize(g, Objective::modularity, seed);
}

namespace {

// Subgraph induced by sorted unique node ids; edges between subset members.
WeightedGraph induced_subgraph(const WeightedGraph& g,
                               const std::vector<std::uint32_t>& nodes) {
    std::vector<std::uint32_t> local(g.n, UINT32_MAX);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        local[nodes[i]] = static_cast<std::uint32_t>(i);
    }
    WeightedGraph out;
    out.init(nodes.size());
    for (const auto u : nodes) {
        if (g.self_loop[u] != 0.0) out.add_edge(local[u], local[u], g.self_loop[u]);
        for (const auto& [v, w] : g.adj[u]) {
            if (v > u && local[v] != UINT32_MAX) out.add_edge(local[u], local[v], w);
        }
    }
    return out;
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

Partition louvain_refine(const WeightedGraph& g, const std::vector<std::uint32_t>& subset,
                         std::uint64_t seed, std::vector<std::string>* warnings) {
    const auto nodes = sorted_unique(subset);
    if (nodes.empty()) throw ValidationError("louvain_refine: empty subset");
    if (!nodes.empty() && nodes.back() >= g.n) {
        throw ValidationError("louvain_refine: subset node out of range");
    }
    const WeightedGraph sub = induced_subgraph(g, nodes);
    if (sub.total_weight <= 0.0) {
        if (warnings) {
            warnings->push_back("louvain_refine: edgeless subgraph of " +
                                std::to_string(nodes.size()) +
                                " nodes, returning singletons");
        }
        return Partition::singletons(nodes.size());
    }
    return louvain_partition(sub, seed);
}

Partition louvain_refine(const cograph::CooccurrenceGraph& g,
                         const std::vector<std::uint32_t>& subset, std::uint64_t seed,
                         std::vector<std::string>* warnings) {
    return louvain_refine(WeightedGraph::from_cograph(g), subset, seed, warnings);
}

namespace {

std::vector<std::vector<std::uint32_t>> connected_components(const WeightedGraph& g) {
    std::vector<std::vector<std::uint32_t>> comps;
    std::vector<bool> seen(g.n, false);
    for (std::uint32_t s = 0; s < g.n; ++s) {
        if (seen[s]) continue;
        std::vector<std::uint32_t> comp, stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (const auto& [v, w] : g.adj[u]) {
                (void)w;
                if (!seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

// Deterministic ordering for sibling nodes: clustered before unclustered,
// larger first, then by first member.
void order_children(std::vector<HierarchyNode>& children) {
    std::stable_sort(children.begin(), children.end(),
                     [](const HierarchyNode& a, const HierarchyNode& b) {
                         if (a.unclustered != b.unclustered) return !a.unclustered;
                         if (a.members.size() != b.members.size()) {
                             return a.members.size() > b.members.size();
                         }
                         return a.members < b.members;
                     });
}

void assign_ids(HierarchyNode& node, const std::string& prefix, int depth) {
    node.depth = depth;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        auto& child = node.children[i];
        child.id = prefix.empty() ? std::to_string(i) : prefix + "." + std::to_string(i);
        assign_ids(child, child.id, depth + 1);
    }
}

constexpr int kMaxSplitDepth = 4;  // top level is 1; up to 3 levels below it

void split_node(HierarchyNode& node, const WeightedGraph& g,
                const std::map<std::string, std::uint32_t>& word_index,
                std::size_t size_threshold, Rng& seeder,
                std::vector<std::string>* warnings) {
    if (node.members.size() <= size_threshold || node.depth >= kMaxSplitDepth) return;

    std::vector<std::uint32_t> subset;
    subset.reserve(node.members.size());
    for (const auto& w : node.members) subset.push_back(word_index.at(w));
    std::sort(subset.begin(), subset.end());

    const Partition part = louvain_refine(g, subset, seeder.fork(), warnings);
    if (part.count <= 1) return;  // no split improves modularity

    std::vector<HierarchyNode> children(part.count);
    for (std::size_t i = 0; i < subset.size(); ++i) {
        // louvain_refine's partition indexes the sorted subset; member order
        // matches because node.members is sorted the same way words are.
        children[part.community[i]].members.push_back(node.members[i]);
    }
    for (auto& child : children) child.depth = node.depth + 1;
    order_children(children);
    node.children = std::move(children);
    for (auto& child : node.children) {
        split_node(child, g, word_index, size_threshold, seeder, warnings);
    }
}

}  // namespace

CategoryHierarchy hierarchical_classify(const cograph::CooccurrenceGraph& graph,
                                        std::size_t size_threshold, std::uint64_t seed,
                                        std::vector<std::string>* warnings) {
    if (size_threshold < 2) {
        throw ValidationError("hierarchical_classify: size_threshold must be >= 2");
    }
    if (graph.node_count() == 0) {
        throw ValidationError("hierarchical_classify: empty graph");
    }
    const WeightedGraph wg = WeightedGraph::from_cograph(graph);
    std::map<std::string, std::uint32_t> word_index;
    for (std::uint32_t i = 0; i < graph.node_count(); ++i) word_index[graph.words[i]] = i;

    Rng seeder(seed);
    CategoryHierarchy h;
    h.root.label = "root";
    h.root.members = graph.words;

    for (const auto& comp : connected_components(wg)) {
        if (comp.size() == 1 && wg.degree[comp[0]] == 0.0) {
            HierarchyNode leaf;
            leaf.members = {graph.words[comp[0]]};
            leaf.unclustered = true;
            leaf.depth = 1;
            h.root.children.push_back(std::move(leaf));
            continue;
        }
        // Initial partition per component, then size-based refinement.
        const WeightedGraph sub = induced_subgraph(wg, comp);
        const Partition part = infomap_partition(sub, seeder.fork());
        std::vector<HierarchyNode> nodes(part.count);
        for (std::size_t i = 0; i < comp.size(); ++i) {
            nodes[part.community[i]].members.push_back(graph.words[comp[i]]);
        }
        for (auto& n : nodes) {
            n.depth = 1;
            h.root.children.push_back(std::move(n));
        }
    }
    order_children(h.root.children);
    for (auto& top : h.root.children) {
        split_node(top, wg, word_index, size_threshold, seeder, warnings);
    }
    assign_ids(h.root, "", 0);
    validate(h);
    return h;
}

namespace {

void collect_leaf_members(const HierarchyNode& node, std::vector<std::string>& out) {
    if (node.children.empty()) {
        out.insert(out.end(), node.members.begin(), node.members.end());
        return;
    }
    for (const auto& c : node.children) collect_leaf_members(c, out);
}

void validate_node(const HierarchyNode& node) {
    if (node.depth > kMaxSplitDepth) {
        throw ValidationError("hierarchy node " + node.id + " exceeds maximum depth");
    }
    if (!std::is_sorted(node.members.begin(), node.members.end())) {
        throw ValidationError("hierarchy node " + node.id + " members not sorted");
    }
    if (node.children.empty()) return;
    std::vector<std::string> from_children;
    for (const auto& c : node.children) {
        std::vector<std::string> leaf;
        collect_leaf_members(c, leaf);
        from_children.insert(from_children.end(), leaf.begin(), leaf.end());
        validate_node(c);
    }
    std::sort(from_children.begin(), from_children.end());
    if (std::adjacent_find(from_children.begin(), from_children.end()) !=
        from_children.end()) {
        throw ValidationError("hierarchy node " + node.id + " has overlapping children");
    }
    if (from_children != node.members) {
        throw ValidationError("hierarchy node " + node.id +
                              " children do not partition its members");
    }
}

}  // namespace

void validate(const CategoryHierarchy& h) { validate_node(h.root); }

const HierarchyNode* CategoryHierarchy::find(const std::string& id) const {
    if (id.empty()) return &root;
    const HierarchyNode* cur = &root;
    std::size_t pos = 0;
    while (pos <= id.size()) {
        const std::size_t dot = id.find('.', pos);
        const std::string part = id.substr(pos, dot == std::string::npos ? dot : dot - pos);
        std::size_t idx = 0;
        try {
            idx = std::stoul(part);
        } catch (const std::exception&) {
            return nullptr;
        }
        if (idx >= cur->children.size()) return nullptr;
        cur = &cur->children[idx];
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

std::vector<const HierarchyNode*> CategoryHierarchy::top_level() const {
    std::vector<const HierarchyNode*> out;
    for (const auto& c : root.children) out.push_back(&c);
    return out;
}

std::map<std::string, std::string> CategoryHierarchy::word_to_category(
    bool include_unclustered) const {
    std::map<std::string, std::string> out;
    for (const auto& top : root.children) {
        if (top.unclustered && !include_unclustered) continue;
        const std::string& name = top.label.empty() ? top.id : top.label;
        for (const auto& w : top.members) out[w] = name;
    }
    return out;
}

CategoryHierarchy merge_subcommunities(const CategoryHierarchy& h,
                                       const std::vector<MergeEntry>& entries) {
    CategoryHierarchy out = h;
    if (entries.empty()) return out;

    std::set<std::string> merged_ids;
    for (const auto& entry : entries) {
        HierarchyNode* parent = nullptr;
        // find() returns const; re-walk mutably via ids.
        {
            const HierarchyNode* found = out.find(entry.parent_id);
            if (!found) {
                throw ValidationError("merge: unknown parent id '" + entry.parent_id + "'");
            }
            parent = const_cast<HierarchyNode*>(found);
        }
        if (entry.child_ids.size() < 2) {
            throw ValidationError("merge: group under '" + entry.parent_id +
                                  "' needs at least 2 children");
        }
        std::vector<std::size_t> positions;
        for (const auto& cid : entry.child_ids) {
            if (!merged_ids.insert(cid).second) {
                throw ValidationError("merge: child '" + cid + "' listed twice");
            }
            bool found = false;
            for (std::size_t i = 0; i < parent->children.size(); ++i) {
                if (parent->children[i].id == cid) {
                    positions.push_back(i);
                    found = true;
                    break;
                }
            }
            if (!found) {
                throw ValidationError("merge: '" + cid + "' is not a child of '" +
                                      entry.parent_id + "' (only siblings may merge)");
            }
        }
        std::sort(positions.begin(), positions.end());

        HierarchyNode merged;
        merged.label = entry.new_label;
        merged.depth = parent->children[positions[0]].depth;
        bool all_unclustered = true;
        for (const auto i : positions) {
            const auto& child = parent->children[i];
            merged.members.insert(merged.members.end(), child.members.begin(),
                                  child.members.end());
            merged.children.insert(merged.children.end(), child.children.begin(),
                                   child.children.end());
            all_unclustered = all_unclustered && child.unclustered;
        }
        merged.unclustered = all_unclustered;
        std::sort(merged.members.begin(), merged.members.end());
        order_children(merged.children);

        std::vector<HierarchyNode> kept;
        for (std::size_t i = 0; i < parent->children.size(); ++i) {
            if (i == positions[0]) {
                kept.push_back(std::move(merged));
            } else if (!std::binary_search(positions.begin(), positions.end(), i)) {
                kept.push_back(std::move(parent->children[i]));
            }
        }
        parent->children = std::move(kept);
    }
    assign_ids(out.root, "", 0);
    validate(out);
    return out;
}

namespace {

std::string generated_label(const HierarchyNode& node) {
    std::string base = "cat_" + (node.members.empty() ? node.id : node.members.front());
    return base;
}

}  // namespace

CategoryHierarchy assign_categories(const CategoryHierarchy& h,
                                    const std::map<std::string, std::string>& label_by_id) {
    CategoryHierarchy out = h;
    std::set<std::string> top_ids;
    for (auto& top : out.root.children) top_ids.insert(top.id);
    for (const auto& [id, label] : label_by_id) {
        if (!top_ids.count(id)) {
            throw ValidationError("labels: '" + id + "' is not a top-level community id");
        }
        if (label.empty()) throw ValidationError("labels: empty label for id '" + id + "'");
    }
    std::set<std::string> used;
    for (const auto& [id, label] : label_by_id) {
        if (!used.insert(label).second) {
            throw ValidationError("labels: duplicate label '" + label + "'");
        }
    }
    for (auto& top : out.root.children) {
        const auto it = label_by_id.find(top.id);
        if (it != label_by_id.end()) {
            top.label = it->second;
            continue;
        }
        std::string label = generated_label(top);
        if (used.count(label)) {
            std::string suffixed = label + "_" + top.id;
            for (auto& c : suffixed) {
                if (c == '.') c = '_';
            }
            label = suffixed;
        }
        used.insert(label);
        top.label = label;
    }
    validate(out);
    return out;
}

namespace {

json node_to_json(const HierarchyNode& node) {
    json j;
    j["id"] = node.id;
    j["label"] = node.label;
    j["members"] = node.members;
    if (node.unclustered) j["unclustered"] = true;
    j["children"] = json::array();
    for (const auto& c : node.children) j["children"].push_back(node_to_json(c));
    return j;
}

HierarchyNode node_from_json(const json& j, int depth) {
    HierarchyNode node;
    node.id = j.value("id", "");
    node.label = j.value("label", "");
    node.depth = depth;
    node.unclustered = j.value("unclustered", false);
    if (j.contains("members")) {
        for (const auto& m : j["members"]) node.members.push_back(m.get<std::string>());
    }
    std::sort(node.members.begin(), node.members.end());
    if (j.contains("children")) {
        for (const auto& c : j["children"]) {
            node.children.push_back(node_from_json(c, depth + 1));
        }
    }
    return node;
}

}  // namespace

void write_hierarchy(const CategoryHierarchy& h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write hierarchy: " + path);
    out << node_to_json(h.root).dump(2) << '\n';
}

CategoryHierarchy read_hierarchy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open hierarchy: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("hierarchy is not valid JSON: " + path);
    CategoryHierarchy h;
    h.root = node_from_json(j, 0);
    assign_ids(h.root, "", 0);
    validate(h);
    return h;
}

std::vector<MergeEntry> load_merge_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open merge spec: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw ValidationError("merge spec must be a JSON array: " + path);
    }
    std::vector<MergeEntry> entries;
    for (const auto& e : j) {
        MergeEntry entry;
        entry.parent_id = e.value("parent_id", "");
        entry.new_label = e.value("new_label", "");
        if (e.contains("child_ids")) {
            for (const auto& c : e["child_ids"]) {
                entry.child_ids.push_back(c.get<std::string>());
            }
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

std::map<std::string, std::string> load_label_map(const std::string& path,
                                                  const CategoryHierarchy& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open labels: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ValidationError("labels must be a JSON object: " + path);
    }

    std::map<std::string, std::string> by_id;
    const json& id_obj = j.contains("by_id") ? j["by_id"] : j;
    if (id_obj.is_object() && !j.contains("by_word")) {
        for (const auto& [k, v] : id_obj.items()) {
            if (k == "by_id" || k == "by_word") continue;
            by_id[k] = v.get<std::string>();
        }
    } else if (j.contains("by_id")) {
        for (const auto& [k, v] : j["by_id"].items()) by_id[k] = v.get<std::string>();
    }
    if (j.contains("by_word")) {
        // Map each exemplar word to the top-level community containing it.
        std::map<std::string, std::string> word_top;
        for (const auto& top : h.root.children) {
            for (const auto& w : top.members) word_top[w] = top.id;
        }
        for (const auto& [word, label] : j["by_word"].items()) {
            const auto it = word_top.find(word);
            if (it == word_top.end()) {
                throw ValidationError("labels: word '" + word + "' is not in the taxonomy");
            }
            const auto existing = by_id.find(it->second);
            if (existing != by_id.end() && existing->second != label.get<std::string>()) {
                throw ValidationError("labels: conflicting labels for community " +
                                      it->second);
            }
            by_id[it->second] = label.get<std::string>();
        }
    }
    return by_id;
}

}  // namespace smellmap::community

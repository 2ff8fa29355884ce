#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smellmap/cograph.hpp"

namespace smellmap::community {

// Working representation for the optimizers. Unlike CooccurrenceGraph it
// permits self-loops, which appear when communities are aggregated into
// super-nodes. Weighted degree counts a self-loop twice; total_weight counts
// every undirected edge (and self-loop) once.
struct WeightedGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
    std::vector<double> self_loop;
    std::vector<double> degree;
    double total_weight = 0.0;

    static WeightedGraph from_cograph(const cograph::CooccurrenceGraph& g);

    void init(std::size_t nodes);
    void add_edge(std::uint32_t u, std::uint32_t v, double w);
};

// Node -> community id; ids dense from 0 in order of first appearance.
struct Partition {
    std::vector<std::uint32_t> community;
    std::uint32_t count = 0;

    static Partition singletons(std::size_t n);
    void canonicalize();
};

// Two-level map-equation codelength in bits. Node visit rates are the
// stationary rates of an undirected walk with unrecorded teleportation,
// i.e. proportional to weighted degree; module exit rates come from the
// weight crossing each module boundary.
double map_equation(const WeightedGraph& g, const Partition& p);
double map_equation(const cograph::CooccurrenceGraph& g, const Partition& p);

// Newman-Girvan weighted modularity.
double modularity(const WeightedGraph& g, const Partition& p);
double modularity(const cograph::CooccurrenceGraph& g, const Partition& p);

// Codelength minimization by local moves plus aggregation. Deterministic
// for a fixed seed regardless of node insertion order.
Partition infomap_partition(const WeightedGraph& g, std::uint64_t seed);
Partition infomap_partition(const cograph::CooccurrenceGraph& g, std::uint64_t seed);

// Modularity maximization, same move engine. Stops when no node switch
// between communities increases modularity.
Partition louvain_partition(const WeightedGraph& g, std::uint64_t seed);

// Runs louvain on the subgraph induced by `subset` (deduplicated, sorted).
// Returned partition indices align with the sorted subset. An edgeless
// subgraph yields singletons and a warning.
Partition louvain_refine(const WeightedGraph& g, const std::vector<std::uint32_t>& subset,
                         std::uint64_t seed, std::vector<std::string>* warnings = nullptr);
Partition louvain_refine(const cograph::CooccurrenceGraph& g,
                         const std::vector<std::uint32_t>& subset, std::uint64_t seed,
                         std::vector<std::string>* warnings = nullptr);

struct HierarchyNode {
    std::string id;     // path id: top-level "0", its children "0.0", "0.1", ...
    std::string label;  // empty until assign_categories
    std::vector<std::string> members;  // sorted
    std::vector<HierarchyNode> children;
    int depth = 0;      // 1 = top-level category
    bool unclustered = false;  // isolated word kept as its own category
};

struct CategoryHierarchy {
    HierarchyNode root;  // depth 0; members = every word

    const HierarchyNode* find(const std::string& id) const;
    std::vector<const HierarchyNode*> top_level() const;
    // word -> top-level label (or id when unlabeled). Unclustered top-level
    // nodes are skipped unless include_unclustered.
    std::map<std::string, std::string> word_to_category(bool include_unclustered = false) const;
};

// Throws ValidationError if sibling member sets overlap, leaves fail to
// partition the word set, or depth exceeds 4.
void validate(const CategoryHierarchy& h);

// Top level from codelength minimization per connected component; clusters
// larger than size_threshold are split further by modularity refinement,
// at most 3 levels below the top. Isolated words become singleton
// top-level nodes flagged unclustered.
CategoryHierarchy hierarchical_classify(const cograph::CooccurrenceGraph& graph,
                                        std::size_t size_threshold, std::uint64_t seed,
                                        std::vector<std::string>* warnings = nullptr);

struct MergeEntry {
    std::string parent_id;
    std::vector<std::string> child_ids;  // >= 2 direct children of parent_id
    std::string new_label;
};

// Merges each listed sibling group into one node (members unioned, children
// concatenated). Non-sibling or unknown ids are errors. Path ids are
// renumbered afterwards.
CategoryHierarchy merge_subcommunities(const CategoryHierarchy& h,
                                       const std::vector<MergeEntry>& entries);

// Labels top-level nodes. Unknown ids and duplicate labels are errors;
// unlabeled communities get names generated from their members.
CategoryHierarchy assign_categories(const CategoryHierarchy& h,
                                    const std::map<std::string, std::string>& label_by_id);

void write_hierarchy(const CategoryHierarchy& h, const std::string& path);
CategoryHierarchy read_hierarchy(const std::string& path);

std::vector<MergeEntry> load_merge_spec(const std::string& path);

// Label file: {"by_id": {"0": "nature"}} or {"by_word": {"grass": "nature"}}
// (a bare object is treated as by_id). by_word entries name the top-level
// community containing the word.
std::map<std::string, std::string> load_label_map(const std::string& path,
                                                  const CategoryHierarchy& h);

}  // namespace smellmap::community

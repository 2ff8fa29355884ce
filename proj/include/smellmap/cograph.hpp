#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smellmap::cograph {

// Undirected word co-occurrence graph. Nodes are smell words in sorted
// order; edges carry the number of items in which both words appeared.
// No self-loops; weights >= 1.
struct CooccurrenceGraph {
    std::vector<std::string> words;                       // sorted, index = node id
    std::vector<std::uint64_t> occurrences;               // items containing the word
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> edges;  // (i<j) -> count

    std::size_t node_count() const { return words.size(); }
    std::size_t edge_count() const { return edges.size(); }
    std::uint32_t index_of(const std::string& word) const;  // throws if absent
};

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::uint64_t total_weight = 0;
    std::vector<std::uint64_t> weighted_degree;  // by node index
};

// Each item is the set of matched terms for one social-media item. Every
// unordered pair within an item's set adds 1 to that edge; items with a
// single term only bump occurrence counts.
CooccurrenceGraph build_cooccurrence(const std::vector<std::vector<std::string>>& item_terms);

GraphStats graph_stats(const CooccurrenceGraph& graph);

// Drops edges below min_weight. Nodes are kept; words whose edges all fall
// away end up isolated and get flagged "unclustered" downstream.
CooccurrenceGraph filter_edges(const CooccurrenceGraph& graph, std::uint64_t min_weight);

// CSV edge list `word_a,word_b,weight` and node list `word,count`.
void write_graph(const CooccurrenceGraph& graph, const std::string& edges_path,
                 const std::string& nodes_path);
CooccurrenceGraph read_graph(const std::string& edges_path, const std::string& nodes_path);

}  // namespace smellmap::cograph

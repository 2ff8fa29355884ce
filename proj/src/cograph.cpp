#include "smellmap/cograph.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"

namespace smellmap::cograph {

std::uint32_t CooccurrenceGraph::index_of(const std::string& word) const {
    const auto it = std::lower_bound(words.begin(), words.end(), word);
    if (it == words.end() || *it != word) {
        throw ValidationError("word not in graph: " + word);
    }
    return static_cast<std::uint32_t>(it - words.begin());
}

CooccurrenceGraph build_cooccurrence(
    const std::vector<std::vector<std::string>>& item_terms) {
    // Normalize every item to a set; collect the vocabulary.
    std::vector<std::set<std::string>> sets;
    sets.reserve(item_terms.size());
    std::set<std::string> vocab;
    for (const auto& terms : item_terms) {
        std::set<std::string> s(terms.begin(), terms.end());
        vocab.insert(s.begin(), s.end());
        sets.push_back(std::move(s));
    }

    CooccurrenceGraph g;
    g.words.assign(vocab.begin(), vocab.end());
    g.occurrences.assign(g.words.size(), 0);
    for (const auto& s : sets) {
        std::vector<std::uint32_t> idx;
        idx.reserve(s.size());
        for (const auto& w : s) idx.push_back(g.index_of(w));
        for (std::uint32_t i : idx) ++g.occurrences[i];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                ++g.edges[{idx[a], idx[b]}];  // idx is ascending, so a < b holds
            }
        }
    }
    return g;
}

GraphStats graph_stats(const CooccurrenceGraph& graph) {
    GraphStats s;
    s.nodes = graph.node_count();
    s.edges = graph.edge_count();
    s.weighted_degree.assign(s.nodes, 0);
    for (const auto& [pair, w] : graph.edges) {
        s.total_weight += w;
        s.weighted_degree[pair.first] += w;
        s.weighted_degree[pair.second] += w;
    }
    return s;
}

CooccurrenceGraph filter_edges(const CooccurrenceGraph& graph, std::uint64_t min_weight) {
    CooccurrenceGraph g;
    g.words = graph.words;
    g.occurrences = graph.occurrences;
    for (const auto& [pair, w] : graph.edges) {
        if (w >= min_weight) g.edges.emplace(pair, w);
    }
    return g;
}

void write_graph(const CooccurrenceGraph& graph, const std::string& edges_path,
                 const std::string& nodes_path) {
    std::ofstream edges(edges_path, std::ios::binary);
    if (!edges) throw ValidationError("cannot write edges: " + edges_path);
    edges << "word_a,word_b,weight\n";
    for (const auto& [pair, w] : graph.edges) {
        edges << csv::format_row({graph.words[pair.first], graph.words[pair.second],
                                  std::to_string(w)});
    }
    std::ofstream nodes(nodes_path, std::ios::binary);
    if (!nodes) throw ValidationError("cannot write nodes: " + nodes_path);
    nodes << "word,count\n";
    for (std::size_t i = 0; i < graph.words.size(); ++i) {
        nodes << csv::format_row({graph.words[i], std::to_string(graph.occurrences[i])});
    }
}

CooccurrenceGraph read_graph(const std::string& edges_path, const std::string& nodes_path) {
    const auto node_rows = csv::read_file(nodes_path);
    const auto edge_rows = csv::read_file(edges_path);

    CooccurrenceGraph g;
    std::map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < node_rows.size(); ++i) {
        const auto& row = node_rows[i];
        if (i == 0 && !row.empty() && row[0] == "word") continue;
        if (row.size() < 2) throw ValidationError("nodes csv: bad row");
        counts[row[0]] = std::stoull(row[1]);
    }
    for (const auto& [w, c] : counts) {
        g.words.push_back(w);
        g.occurrences.push_back(c);
    }
    for (std::size_t i = 0; i < edge_rows.size(); ++i) {
        const auto& row = edge_rows[i];
        if (i == 0 && !row.empty() && row[0] == "word_a") continue;
        if (row.size() < 3) throw ValidationError("edges csv: bad row");
        std::uint32_t a = g.index_of(row[0]);
        std::uint32_t b = g.index_of(row[1]);
        if (a == b) throw ValidationError("edges csv: self-loop on " + row[0]);
        if (a > b) std::swap(a, b);
        g.edges[{a, b}] += std::stoull(row[2]);
    }
    return g;
}

}  // namespace smellmap::cograph

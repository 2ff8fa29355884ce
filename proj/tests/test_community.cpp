#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "smellmap/community.hpp"
#include "smellmap/errors.hpp"
#include "smellmap/rng.hpp"
#include "support/oracles.hpp"
#include "support/tmpdir.hpp"

using namespace smellmap;
using testsupport::TmpDir;

namespace {

community::WeightedGraph make_graph(std::size_t n, const std::vector<oracles::Edge>& edges) {
    community::WeightedGraph g;
    g.init(n);
    for (const auto& e : edges) g.add_edge(e.u, e.v, e.w);
    return g;
}

community::Partition partition_of(std::vector<std::uint32_t> community) {
    community::Partition p;
    p.community = std::move(community);
    p.canonicalize();
    return p;
}

// Two K3 cliques joined by a single bridge edge, all weights 1.
const std::vector<oracles::Edge> kTwoCliques = {
    {0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {3, 4, 1}, {3, 5, 1}, {4, 5, 1}, {2, 3, 1}};

std::vector<std::uint32_t> subset_all(std::size_t n) {
    std::vector<std::uint32_t> all(n);
    std::iota(all.begin(), all.end(), 0u);
    return all;
}

// Level-k community assignment of a classified cograph, by node index.
std::vector<std::uint32_t> level_assignment(const community::CategoryHierarchy& h,
                                            const cograph::CooccurrenceGraph& g,
                                            int depth) {
    std::vector<std::uint32_t> out(g.node_count(), 0);
    std::uint32_t next = 0;
    const std::function<void(const community::HierarchyNode&)> walk =
        [&](const community::HierarchyNode& node) {
            if (node.depth == depth || (node.depth < depth && node.children.empty())) {
                const auto id = next++;
                for (const auto& w : node.members) out[g.index_of(w)] = id;
                return;
            }
            for (const auto& c : node.children) walk(c);
        };
    walk(h.root);
    return out;
}

}  // namespace

TEST_SUITE("community") {

TEST_CASE("map equation of the all-in-one partition is the visit rate entropy") {
    Rng rng(21);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t n = 3 + rng.below(5);
        const auto edges = oracles::random_graph(rng, n, 0.5, 4);
        const auto g = make_graph(n, edges);
        const auto p = partition_of(std::vector<std::uint32_t>(n, 0));

        double entropy = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            const double rate = g.degree[u] / (2.0 * g.total_weight);
            if (rate > 0) entropy -= rate * std::log2(rate);
        }
        CHECK(community::map_equation(g, p) == doctest::Approx(entropy).epsilon(1e-12));
    }
}

TEST_CASE("two cliques described separately beat one module") {
    const auto g = make_graph(6, kTwoCliques);
    const auto split = partition_of({0, 0, 0, 1, 1, 1});
    const auto together = partition_of(std::vector<std::uint32_t>(6, 0));
    CHECK(community::map_equation(g, split) < community::map_equation(g, together));
}

TEST_CASE("single node in a single module costs zero bits") {
    community::WeightedGraph g;
    g.init(1);
    const auto p = partition_of({0});
    CHECK(community::map_equation(g, p) == 0.0);
}

TEST_CASE("map equation matches the term-by-term oracle") {
    Rng rng(22);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t n = 2 + rng.below(6);
        const auto edges = oracles::random_graph(rng, n, 0.6, 5);
        const auto g = make_graph(n, edges);
        std::vector<std::uint32_t> assign(n);
        for (auto& c : assign) c = static_cast<std::uint32_t>(rng.below(n));
        const auto p = partition_of(assign);
        CHECK(community::map_equation(g, p) ==
              doctest::Approx(oracles::codelength_direct(n, edges, p.community)).epsilon(1e-12));
    }
}

TEST_CASE("degenerate graphs are rejected or trivial") {
    community::WeightedGraph empty;
    const community::Partition none;
    CHECK_THROWS_AS(community::map_equation(empty, none), ValidationError);
    CHECK_THROWS_AS(community::modularity(empty, none), ValidationError);

    community::WeightedGraph edgeless;
    edgeless.init(3);
    const auto p = partition_of({0, 1, 2});
    CHECK(community::map_equation(edgeless, p) == 0.0);
    CHECK_THROWS_AS(community::modularity(edgeless, p), ValidationError);

    const auto g = make_graph(3, {{0, 1, 1}});
    community::Partition wrong_size;
    wrong_size.community = {0, 0};
    wrong_size.count = 1;
    CHECK_THROWS_AS(community::map_equation(g, wrong_size), ValidationError);
}

TEST_CASE("infomap recovers the two cliques exactly") {
    const auto g = make_graph(6, kTwoCliques);
    const auto p = community::infomap_partition(g, 11);
    const auto best = oracles::best_codelength(6, kTwoCliques);
    CHECK(oracles::adjusted_rand_index(p.community, best.part) == doctest::Approx(1.0));
    CHECK(p.count == 2);
    std::set<std::uint32_t> left(p.community.begin(), p.community.begin() + 3);
    std::set<std::uint32_t> right(p.community.begin() + 3, p.community.end());
    CHECK(left.size() == 1);
    CHECK(right.size() == 1);
    CHECK(*left.begin() != *right.begin());
}

TEST_CASE("infomap keeps a complete graph together") {
    std::vector<oracles::Edge> k5;
    for (std::uint32_t u = 0; u < 5; ++u) {
        for (std::uint32_t v = u + 1; v < 5; ++v) k5.push_back({u, v, 1});
    }
    const auto p = community::infomap_partition(make_graph(5, k5), 3);
    CHECK(p.count == 1);
}

TEST_CASE("infomap separates disconnected components") {
    const auto g = make_graph(4, {{0, 1, 1}, {2, 3, 1}});
    const auto p = community::infomap_partition(g, 5);
    CHECK(p.count == 2);
    CHECK(p.community[0] == p.community[1]);
    CHECK(p.community[2] == p.community[3]);
    CHECK(p.community[0] != p.community[2]);
}

TEST_CASE("modularity of the two-clique split matches the closed form") {
    const auto g = make_graph(6, kTwoCliques);
    const auto split = partition_of({0, 0, 0, 1, 1, 1});
    // Two symmetric halves: in-weight 3 of total 7, degree sum 7 of 14.
    const double expected = 2.0 * (3.0 / 7.0 - 0.25);
    CHECK(community::modularity(g, split) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(community::modularity(g, split) == doctest::Approx(0.3571).epsilon(2e-4));

    const auto together = partition_of(std::vector<std::uint32_t>(6, 0));
    CHECK(community::modularity(g, together) == doctest::Approx(0.0));
}

TEST_CASE("modularity matches the direct oracle on random partitions") {
    Rng rng(23);
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t n = 2 + rng.below(6);
        const auto edges = oracles::random_graph(rng, n, 0.6, 5);
        const auto g = make_graph(n, edges);
        std::vector<std::uint32_t> assign(n);
        // Community ids must stay below n for canonicalize's dense remap.
        for (auto& c : assign) c = static_cast<std::uint32_t>(rng.below(std::min<std::size_t>(3, n)));
        const auto p = partition_of(assign);
        CHECK(community::modularity(g, p) ==
              doctest::Approx(oracles::modularity_direct(n, edges, p.community)).epsilon(1e-12));
    }
}

TEST_CASE("louvain finds the two cliques") {
    const auto g = make_graph(6, kTwoCliques);
    const auto p = community::louvain_refine(g, subset_all(6), 17);
    CHECK(p.count == 2);
    CHECK(p.community[0] == p.community[1]);
    CHECK(p.community[1] == p.community[2]);
    CHECK(p.community[3] == p.community[4]);
    CHECK(p.community[4] == p.community[5]);
}

TEST_CASE("louvain matches exhaustive search on the star graph") {
    const std::vector<oracles::Edge> star = {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}};
    const auto g = make_graph(4, star);
    const auto p = community::louvain_refine(g, subset_all(4), 29);
    const auto best = oracles::best_modularity(4, star);
    CHECK(community::modularity(g, p) == doctest::Approx(best.value).epsilon(1e-12));
    CHECK(p.count == 1);
}

TEST_CASE("a single edge is one community") {
    const auto g = make_graph(2, {{0, 1, 3}});
    const auto p = community::louvain_refine(g, subset_all(2), 1);
    CHECK(p.count == 1);
}

TEST_CASE("an edgeless subgraph returns singletons and warns") {
    const auto g = make_graph(4, {{0, 1, 2}});
    std::vector<std::string> warnings;
    const auto p = community::louvain_refine(g, {2, 3}, 1, &warnings);
    CHECK(p.count == 2);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("edgeless") != std::string::npos);
}

TEST_CASE("louvain_refine validates its subset") {
    const auto g = make_graph(3, {{0, 1, 1}});
    CHECK_THROWS_AS(community::louvain_refine(g, {}, 1), ValidationError);
    CHECK_THROWS_AS(community::louvain_refine(g, {0, 7}, 1), ValidationError);
}

TEST_CASE("heuristics stay near the exhaustive optimum on small graphs") {
    // The acceptance suite runs the full 200-graph version of this check.
    Rng rng(99);
    for (int iter = 0; iter < 60; ++iter) {
        const std::size_t n = 2 + rng.below(6);
        const double prob = 0.3 + 0.5 * rng.uniform();
        const auto edges = oracles::random_graph(rng, n, prob, 5);
        const auto g = make_graph(n, edges);

        const auto louv = community::louvain_refine(g, subset_all(n), 7 + iter);
        const double q = community::modularity(g, louv);
        const auto best_q = oracles::best_modularity(n, edges);
        if (best_q.value > 1e-12) {
            CHECK(q >= 0.95 * best_q.value - 1e-12);
        } else {
            CHECK(q >= best_q.value - 1e-9);
        }

        const auto info = community::infomap_partition(g, 7 + iter);
        const double len = community::map_equation(g, info);
        const auto best_l = oracles::best_codelength(n, edges);
        CHECK(len <= 1.05 * best_l.value + 1e-9);
    }
}

TEST_CASE("optimized partitions never lose to the singleton start") {
    Rng rng(101);
    for (int iter = 0; iter < 30; ++iter) {
        const std::size_t n = 3 + rng.below(5);
        const auto edges = oracles::random_graph(rng, n, 0.5, 4);
        const auto g = make_graph(n, edges);
        const auto singles = community::Partition::singletons(n);
        const auto louv = community::louvain_refine(g, subset_all(n), iter);
        CHECK(community::modularity(g, louv) >=
              community::modularity(g, singles) - 1e-12);
        const auto info = community::infomap_partition(g, iter);
        CHECK(community::map_equation(g, info) <=
              community::map_equation(g, singles) + 1e-12);
    }
}

TEST_CASE("fixed seed gives identical partitions run to run") {
    Rng rng(102);
    const auto edges = oracles::random_graph(rng, 30, 0.15, 5);
    const auto g = make_graph(30, edges);
    const auto a = community::infomap_partition(g, 77);
    const auto b = community::infomap_partition(g, 77);
    CHECK(a.community == b.community);
    const auto c = community::louvain_refine(g, subset_all(30), 78);
    const auto d = community::louvain_refine(g, subset_all(30), 78);
    CHECK(c.community == d.community);
}

TEST_CASE("item insertion order does not change the cograph partition") {
    Rng rng(103);
    const std::vector<std::string> vocab = {"ash", "bog", "cow", "dew", "elm",
                                            "fog", "gas", "hay", "ivy", "jam"};
    std::vector<std::vector<std::string>> items;
    for (int i = 0; i < 80; ++i) {
        std::vector<std::string> terms;
        for (const auto& w : vocab) {
            if (rng.below(4) == 0) terms.push_back(w);
        }
        if (terms.size() >= 2) items.push_back(terms);
    }
    auto shuffled = items;
    rng.shuffle(shuffled);
    const auto g1 = cograph::build_cooccurrence(items);
    const auto g2 = cograph::build_cooccurrence(shuffled);
    const auto p1 = community::infomap_partition(g1, 5);
    const auto p2 = community::infomap_partition(g2, 5);
    CHECK(p1.community == p2.community);
}

TEST_CASE("small word graphs classify into one level") {
    const auto g = cograph::build_cooccurrence(
        {{"fumes", "smoke"}, {"smoke", "petrol"}, {"grass", "hay"}, {"hay", "moss"}});
    const auto h = community::hierarchical_classify(g, 30, 9);
    community::validate(h);
    for (const auto* top : h.top_level()) {
        CHECK(top->children.empty());
        CHECK(top->depth == 1);
    }
}

TEST_CASE("cliques below the size threshold do not split") {
    // A K3's best modularity split is the whole clique, so even a threshold
    // of 2 must leave it alone.
    const auto cg = cograph::build_cooccurrence({{"a", "b"}, {"b", "c"}, {"a", "c"},
                                                 {"x", "y"}, {"y", "z"}, {"x", "z"},
                                                 {"c", "x"}});
    const auto h = community::hierarchical_classify(cg, 2, 13);
    community::validate(h);
    for (const auto* top : h.top_level()) {
        CHECK(top->children.empty());
    }
}

TEST_CASE("planted three-level structure is recovered") {
    const auto planted = oracles::planted_hierarchy(4242);
    const auto h = community::hierarchical_classify(planted.graph, 30, 4242);
    community::validate(h);

    const auto top = level_assignment(h, planted.graph, 1);
    CHECK(oracles::adjusted_rand_index(top, planted.top) > 0.9);

    const auto mid = level_assignment(h, planted.graph, 2);
    CHECK(oracles::adjusted_rand_index(mid, planted.mid) > 0.9);

    int max_depth = 0;
    const std::function<void(const community::HierarchyNode&)> walk =
        [&](const community::HierarchyNode& n) {
            max_depth = std::max(max_depth, n.depth);
            for (const auto& c : n.children) walk(c);
        };
    walk(h.root);
    CHECK(max_depth >= 2);
}

TEST_CASE("isolated words become unclustered singleton categories") {
    auto g = cograph::build_cooccurrence({{"a", "b"}, {"b", "a"}, {"lonely"}});
    const auto h = community::hierarchical_classify(g, 30, 3);
    community::validate(h);
    bool found = false;
    for (const auto* top : h.top_level()) {
        if (top->members == std::vector<std::string>{"lonely"}) {
            found = true;
            CHECK(top->unclustered);
        }
    }
    CHECK(found);
}

TEST_CASE("leaves partition the word set") {
    const auto planted = oracles::planted_hierarchy(7);
    const auto h = community::hierarchical_classify(planted.graph, 30, 7);
    std::vector<std::string> seen;
    const std::function<void(const community::HierarchyNode&)> walk =
        [&](const community::HierarchyNode& n) {
            if (n.children.empty() && n.depth > 0) {
                seen.insert(seen.end(), n.members.begin(), n.members.end());
            }
            for (const auto& c : n.children) walk(c);
        };
    walk(h.root);
    std::sort(seen.begin(), seen.end());
    auto expected = planted.graph.words;
    std::sort(expected.begin(), expected.end());
    CHECK(seen == expected);
}

TEST_CASE("merge_subcommunities unions sibling members") {
    const auto planted = oracles::planted_hierarchy(11);
    const auto h = community::hierarchical_classify(planted.graph, 30, 11);
    const auto* top0 = h.find("0");
    REQUIRE(top0 != nullptr);
    REQUIRE(top0->children.size() >= 2);
    const auto kids_before = top0->children.size();
    const auto merged_size =
        top0->children[0].members.size() + top0->children[1].members.size();

    community::MergeEntry entry;
    entry.parent_id = "0";
    entry.child_ids = {top0->children[0].id, top0->children[1].id};
    entry.new_label = "merged";
    const auto merged = community::merge_subcommunities(h, {entry});
    community::validate(merged);
    const auto* after = merged.find("0");
    REQUIRE(after != nullptr);
    CHECK(after->children.size() == kids_before - 1);
    CHECK(after->children[0].members.size() == merged_size);
    CHECK(after->children[0].label == "merged");
}

TEST_CASE("merge rejects unknown and non-sibling ids") {
    const auto planted = oracles::planted_hierarchy(12);
    const auto h = community::hierarchical_classify(planted.graph, 30, 12);

    community::MergeEntry unknown;
    unknown.parent_id = "0";
    unknown.child_ids = {"0.0", "0.999"};
    CHECK_THROWS_AS(community::merge_subcommunities(h, {unknown}), ValidationError);

    community::MergeEntry cross;
    cross.parent_id = "0";
    cross.child_ids = {"0.0", "1.0"};
    CHECK_THROWS_AS(community::merge_subcommunities(h, {cross}), ValidationError);
}

TEST_CASE("merging nothing is the identity") {
    const auto planted = oracles::planted_hierarchy(13);
    const auto h = community::hierarchical_classify(planted.graph, 30, 13);
    const auto same = community::merge_subcommunities(h, {});
    TmpDir tmp;
    community::write_hierarchy(h, tmp.file("a.json"));
    community::write_hierarchy(same, tmp.file("b.json"));
    CHECK(testsupport::slurp(tmp.file("a.json")) == testsupport::slurp(tmp.file("b.json")));
}

TEST_CASE("assign_categories labels tops and generates names for the rest") {
    const auto planted = oracles::planted_hierarchy(14);
    const auto h = community::hierarchical_classify(planted.graph, 30, 14);
    REQUIRE(h.top_level().size() == 4);

    const auto labeled =
        community::assign_categories(h, {{"0", "alpha"}, {"1", "beta"}});
    const auto tops = labeled.top_level();
    CHECK(tops[0]->label == "alpha");
    CHECK(tops[1]->label == "beta");
    std::set<std::string> labels;
    for (const auto* t : tops) {
        CHECK_FALSE(t->label.empty());
        labels.insert(t->label);
    }
    CHECK(labels.size() == tops.size());
}

TEST_CASE("assign_categories rejects duplicates and unknown ids") {
    const auto planted = oracles::planted_hierarchy(15);
    const auto h = community::hierarchical_classify(planted.graph, 30, 15);
    CHECK_THROWS_AS(community::assign_categories(h, {{"0", "x"}, {"1", "x"}}),
                    ValidationError);
    CHECK_THROWS_AS(community::assign_categories(h, {{"42", "x"}}), ValidationError);
}

TEST_CASE("hierarchy survives a file round-trip") {
    const auto planted = oracles::planted_hierarchy(16);
    auto h = community::hierarchical_classify(planted.graph, 30, 16);
    h = community::assign_categories(h, {{"0", "nature"}});
    TmpDir tmp;
    const auto path = tmp.file("hierarchy.json");
    community::write_hierarchy(h, path);
    const auto back = community::read_hierarchy(path);
    community::validate(back);
    const auto again = tmp.file("again.json");
    community::write_hierarchy(back, again);
    CHECK(testsupport::slurp(path) == testsupport::slurp(again));
}

TEST_CASE("label maps address tops by id or by member word") {
    const auto planted = oracles::planted_hierarchy(17);
    const auto h = community::hierarchical_classify(planted.graph, 30, 17);
    const auto word = h.top_level()[2]->members.front();
    TmpDir tmp;
    const auto path = tmp.write(
        "labels.json", "{\"by_word\": {\"" + word + "\": \"chosen\"}}");
    const auto map = community::load_label_map(path, h);
    REQUIRE(map.count("2") == 1);
    CHECK(map.at("2") == "chosen");

    const auto direct = tmp.write("direct.json", "{\"1\": \"alpha\"}");
    const auto map2 = community::load_label_map(direct, h);
    CHECK(map2.at("1") == "alpha");
}

TEST_CASE("word_to_category maps members to top labels") {
    const auto planted = oracles::planted_hierarchy(18);
    auto h = community::hierarchical_classify(planted.graph, 30, 18);
    h = community::assign_categories(h, {{"0", "thing"}});
    const auto map = h.word_to_category(false);
    const auto* top0 = h.find("0");
    REQUIRE(top0 != nullptr);
    for (const auto& w : top0->members) {
        CHECK(map.at(w) == "thing");
    }
}

}  // TEST_SUITE

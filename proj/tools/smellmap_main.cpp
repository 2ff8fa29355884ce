// Command line front end. Every subcommand reads its inputs from disk, so
// stages can be re-run individually against a previous run's output
// directory. Exit codes: 0 success, 1 validation error, 2 runtime failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smellmap/cograph.hpp"
#include "smellmap/community.hpp"
#include "smellmap/errors.hpp"
#include "smellmap/geo.hpp"
#include "smellmap/ingest.hpp"
#include "smellmap/lexicon.hpp"
#include "smellmap/pipeline.hpp"
#include "smellmap/profile.hpp"
#include "smellmap/spatialstats.hpp"
#include "smellmap/synth.hpp"

namespace fs = std::filesystem;
using namespace smellmap;

namespace {

// Config-backed options shared by the pipeline subcommands. Flags override
// the corresponding config keys.
struct CommonOpts {
    std::string config_path;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> buffer_width;
    std::optional<std::uint64_t> min_tags;
    std::optional<std::uint64_t> size_threshold;
    std::optional<std::uint64_t> distance_classes;
    std::optional<std::uint64_t> min_edge_weight;
    std::optional<std::string> language;
    std::optional<double> station_max_distance;
    bool nearest_only = false;
    bool count_uncategorized = false;
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("-c,--config", o.config_path, "pipeline config, TOML or JSON")
        ->required();
    sub->add_option("--output-dir", o.output_dir, "override the output directory");
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--buffer-width", o.buffer_width, "segment buffer width, meters");
    sub->add_option("--min-tags", o.min_tags, "minimum tags for a segment profile");
    sub->add_option("--size-threshold", o.size_threshold,
                    "community size that triggers hierarchical splitting");
    sub->add_option("--distance-classes", o.distance_classes,
                    "correlogram distance classes");
    sub->add_option("--min-edge-weight", o.min_edge_weight,
                    "drop co-occurrence edges below this weight");
    sub->add_option("--language", o.language, "lexicon language code");
    sub->add_option("--station-max-distance", o.station_max_distance,
                    "maximum segment-to-station distance, meters");
    sub->add_flag("--nearest-only", o.nearest_only,
                  "assign each item to its nearest segment only");
    sub->add_flag("--count-uncategorized", o.count_uncategorized,
                  "count uncategorized tags toward fraction denominators");
}

pipeline::PipelineConfig load_config(const CommonOpts& o) {
    auto cfg = pipeline::PipelineConfig::load(o.config_path);
    if (o.output_dir) cfg.output_dir = *o.output_dir;
    if (o.seed) cfg.seed = *o.seed;
    if (o.buffer_width) cfg.buffer_width = *o.buffer_width;
    if (o.min_tags) cfg.min_tags = *o.min_tags;
    if (o.size_threshold) cfg.size_threshold = *o.size_threshold;
    if (o.distance_classes) cfg.distance_classes = *o.distance_classes;
    if (o.min_edge_weight) cfg.min_edge_weight = *o.min_edge_weight;
    if (o.language) cfg.language = *o.language;
    if (o.station_max_distance) cfg.station_max_distance = *o.station_max_distance;
    if (o.nearest_only) cfg.nearest_only = true;
    if (o.count_uncategorized) cfg.count_uncategorized = true;
    return cfg;
}

std::string in_out_dir(const pipeline::PipelineConfig& cfg, const std::string& name,
                       const std::string& override_path) {
    if (!override_path.empty()) return override_path;
    return (fs::path(cfg.output_dir) / name).string();
}

std::string out_file(const pipeline::PipelineConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// Shared by `profile` and `run`: vectors for every source plus base notes.
void write_profile_outputs(const pipeline::ProfileBundle& bundle,
                           const std::vector<pipeline::MatchedItem>& matched,
                           const profile::Taxonomy& taxonomy,
                           const pipeline::PipelineConfig& cfg) {
    profile::write_smell_vectors(bundle.all, taxonomy, out_file(cfg, "smell_vectors.csv"));
    for (const auto& [source, vectors] : bundle.by_source) {
        profile::write_smell_vectors(vectors, taxonomy,
                                     out_file(cfg, "smell_vectors_" + source + ".csv"));
    }
    std::vector<std::string> all_tags;
    for (const auto& m : matched) {
        all_tags.insert(all_tags.end(), m.terms.begin(), m.terms.end());
    }
    const auto dist = profile::city_distribution(all_tags, taxonomy);
    const auto notes = pipeline::report_base_notes(dist, taxonomy.categories);
    pipeline::write_base_notes(notes, out_file(cfg, "base_notes.csv"),
                               out_file(cfg, "base_notes.txt"));
}

struct SegmentGeometry {
    std::vector<ingest::StreetSegment> segments;
    geo::LocalProjection proj;
    std::vector<geo::ProjectedSegment> projected;
    std::map<std::string, std::pair<double, double>> midpoints;
};

SegmentGeometry load_segments(const pipeline::PipelineConfig& cfg) {
    if (cfg.segments_path.empty()) {
        throw ValidationError("config has no segments path");
    }
    SegmentGeometry g;
    g.segments = ingest::read_segments(cfg.segments_path).segments;
    if (g.segments.empty()) {
        throw ValidationError("no usable street segments in " + cfg.segments_path);
    }
    g.proj = geo::LocalProjection::for_segments(g.segments);
    g.projected = geo::project_segments(g.segments, g.proj);
    for (const auto& s : g.projected) g.midpoints[s.id] = s.midpoint();
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smellmap: map urban smellscapes from geo-referenced social media text"};
    app.require_subcommand(1);

    // lexicon
    auto* sub_lexicon = app.add_subcommand("lexicon", "validate and normalize a lexicon CSV");
    std::string lex_input, lex_blocklist, lex_write;
    sub_lexicon->add_option("-i,--input", lex_input, "lexicon CSV")->required();
    sub_lexicon->add_option("--blocklist", lex_blocklist, "blocklist, one surface per line");
    sub_lexicon->add_option("--write", lex_write, "write the normalized lexicon here");
    sub_lexicon->callback([&] {
        std::vector<std::string> blocked;
        if (!lex_blocklist.empty()) blocked = lex::load_blocklist(lex_blocklist);
        const auto report = lex::load_lexicon(lex_input, blocked);
        std::cout << report.lexicon.terms.size() << " terms across "
                  << report.lexicon.languages().size() << " languages, "
                  << report.blocked_removed << " removed by the blocklist\n";
        if (!lex_write.empty()) {
            lex::write_lexicon(report.lexicon, lex_write);
            std::cout << "wrote " << lex_write << '\n';
        }
    });

    // match
    auto* sub_match = app.add_subcommand("match", "match items against the lexicon");
    CommonOpts match_opts;
    add_common(sub_match, match_opts);
    sub_match->callback([&] {
        const auto cfg = load_config(match_opts);
        const auto out = pipeline::match_items(cfg);
        print_warnings(out.warnings);
        pipeline::write_matches(out.items, out_file(cfg, "matches.ndjson"));
        std::cout << out.items.size() << " of " << out.items_read
                  << " items matched at least one term (" << out.term_occurrences
                  << " term occurrences)\n";
    });

    // graph
    auto* sub_graph = app.add_subcommand("graph", "build the term co-occurrence graph");
    CommonOpts graph_opts;
    std::string graph_matches;
    add_common(sub_graph, graph_opts);
    sub_graph->add_option("--matches", graph_matches, "matches NDJSON (default from output dir)");
    sub_graph->callback([&] {
        const auto cfg = load_config(graph_opts);
        const auto matched =
            pipeline::read_matches(in_out_dir(cfg, "matches.ndjson", graph_matches));
        std::vector<std::vector<std::string>> item_terms;
        item_terms.reserve(matched.size());
        for (const auto& m : matched) item_terms.push_back(m.terms);
        auto graph = cograph::build_cooccurrence(item_terms);
        if (cfg.min_edge_weight > 1) {
            graph = cograph::filter_edges(graph, cfg.min_edge_weight);
        }
        cograph::write_graph(graph, out_file(cfg, "graph_edges.csv"),
                             out_file(cfg, "graph_nodes.csv"));
        const auto gs = cograph::graph_stats(graph);
        std::cout << gs.nodes << " nodes, " << gs.edges << " edges, total weight "
                  << gs.total_weight << '\n';
    });

    // classify
    auto* sub_classify = app.add_subcommand("classify", "cluster the graph into a taxonomy");
    CommonOpts classify_opts;
    std::string classify_edges, classify_nodes;
    add_common(sub_classify, classify_opts);
    sub_classify->add_option("--edges", classify_edges, "edge CSV (default from output dir)");
    sub_classify->add_option("--nodes", classify_nodes, "node CSV (default from output dir)");
    sub_classify->callback([&] {
        const auto cfg = load_config(classify_opts);
        const auto graph =
            cograph::read_graph(in_out_dir(cfg, "graph_edges.csv", classify_edges),
                                in_out_dir(cfg, "graph_nodes.csv", classify_nodes));
        std::vector<std::string> warnings;
        auto h = community::hierarchical_classify(graph, cfg.size_threshold, cfg.seed,
                                                  &warnings);
        print_warnings(warnings);
        if (!cfg.merge_path.empty()) {
            h = community::merge_subcommunities(h,
                                                community::load_merge_spec(cfg.merge_path));
        }
        std::map<std::string, std::string> labels;
        if (!cfg.labels_path.empty()) {
            labels = community::load_label_map(cfg.labels_path, h);
        }
        h = community::assign_categories(h, labels);
        community::write_hierarchy(h, out_file(cfg, "hierarchy.json"));
        for (const auto* top : h.top_level()) {
            std::cout << top->label << ": " << top->members.size() << " words"
                      << (top->unclustered ? " (unclustered)" : "") << '\n';
        }
    });

    // assign
    auto* sub_assign = app.add_subcommand("assign", "assign items to street segment buffers");
    CommonOpts assign_opts;
    std::string assign_matches;
    add_common(sub_assign, assign_opts);
    sub_assign->add_option("--matches", assign_matches, "matches NDJSON (default from output dir)");
    sub_assign->callback([&] {
        const auto cfg = load_config(assign_opts);
        const auto matched =
            pipeline::read_matches(in_out_dir(cfg, "matches.ndjson", assign_matches));
        const auto geom = load_segments(cfg);
        const auto index = geo::build_index(geom.projected, cfg.buffer_width);
        std::vector<ingest::GeoItem> items;
        items.reserve(matched.size());
        for (const auto& m : matched) {
            ingest::GeoItem g;
            g.id = m.id;
            g.source = m.source;
            g.lat = m.lat;
            g.lon = m.lon;
            items.push_back(std::move(g));
        }
        const auto assignment =
            geo::assign_items(items, index, geom.proj, cfg.nearest_only);
        geo::write_assignment(assignment, out_file(cfg, "assignment.csv"));
        std::cout << assignment.assigned << " items assigned, " << assignment.unassigned
                  << " unassigned, " << assignment.items_by_segment.size()
                  << " segments with items\n";
    });

    // profile
    auto* sub_profile = app.add_subcommand("profile", "compute per-segment smell vectors");
    CommonOpts profile_opts;
    std::string profile_matches, profile_assignment, profile_hierarchy;
    add_common(sub_profile, profile_opts);
    sub_profile->add_option("--matches", profile_matches, "matches NDJSON (default from output dir)");
    sub_profile->add_option("--assignment", profile_assignment,
                            "assignment CSV (default from output dir)");
    sub_profile->add_option("--hierarchy", profile_hierarchy,
                            "hierarchy JSON (default from output dir)");
    sub_profile->callback([&] {
        const auto cfg = load_config(profile_opts);
        const auto matched =
            pipeline::read_matches(in_out_dir(cfg, "matches.ndjson", profile_matches));
        const auto assignment =
            geo::read_assignment(in_out_dir(cfg, "assignment.csv", profile_assignment));
        const auto h =
            community::read_hierarchy(in_out_dir(cfg, "hierarchy.json", profile_hierarchy));
        const auto word_cat = h.word_to_category(false);
        if (word_cat.empty()) {
            throw ValidationError("hierarchy has no categorized words");
        }
        const auto taxonomy = profile::Taxonomy::from_word_map(word_cat);
        const auto bundle = pipeline::profile_assignment(
            matched, assignment, taxonomy, cfg.min_tags, cfg.count_uncategorized);
        write_profile_outputs(bundle, matched, taxonomy, cfg);
        std::cout << bundle.all.size() << " segments profiled ("
                  << taxonomy.categories.size() << " categories)\n";
    });

    // correlate
    auto* sub_correlate =
        app.add_subcommand("correlate", "correlate smell fractions with air quality");
    CommonOpts correlate_opts;
    std::string correlate_vectors;
    add_common(sub_correlate, correlate_opts);
    sub_correlate->add_option("--vectors", correlate_vectors,
                              "smell vector CSV (default from output dir)");
    sub_correlate->callback([&] {
        const auto cfg = load_config(correlate_opts);
        if (cfg.air_path.empty()) {
            throw ValidationError("correlate requires an air quality input");
        }
        const auto vf = profile::read_smell_vectors(
            in_out_dir(cfg, "smell_vectors.csv", correlate_vectors));
        const auto geom = load_segments(cfg);
        const auto air = pipeline::load_air_fields(cfg, geom.projected, geom.proj);
        pipeline::write_segment_aqi(air.report, air.bands, geom.midpoints,
                                    out_file(cfg, "segment_aqi.csv"));
        const auto rows = stats::category_pollutant_report(
            vf.vectors, vf.categories, geom.midpoints, air.fields, "all",
            cfg.distance_classes);
        stats::write_report(rows, out_file(cfg, "report.csv"));
        for (const auto& row : rows) {
            if (row.skipped) {
                std::cout << row.category << " vs " << row.pollutant << ": skipped ("
                          << row.skip_reason << ")\n";
            } else {
                std::cout << row.category << " vs " << row.pollutant
                          << ": r=" << row.result.r << " n_eff=" << row.result.n_eff
                          << " p=" << row.result.p << '\n';
            }
        }
        try {
            const auto matrix = stats::category_cross_correlation(
                vf.vectors, vf.categories, geom.midpoints, cfg.distance_classes);
            stats::write_matrix(matrix, out_file(cfg, "cross_correlation.csv"));
        } catch (const ValidationError& e) {
            std::cerr << "warning: cross correlation skipped: " << e.what() << '\n';
        }
    });

    // sweep
    auto* sub_sweep = app.add_subcommand("sweep", "correlations across buffer widths");
    CommonOpts sweep_opts;
    std::vector<double> sweep_sizes;
    std::vector<std::string> sweep_pairs;
    add_common(sub_sweep, sweep_opts);
    sub_sweep->add_option("--sizes", sweep_sizes, "buffer widths, strictly increasing");
    sub_sweep->add_option("--pair", sweep_pairs,
                          "category:pollutant to sweep (repeatable; default all)");
    sub_sweep->callback([&] {
        const auto cfg = load_config(sweep_opts);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& p : sweep_pairs) {
            const auto colon = p.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == p.size()) {
                throw ValidationError("--pair wants category:pollutant, got '" + p + "'");
            }
            pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
        }
        const auto sizes = sweep_sizes.empty() ? cfg.sweep_sizes : sweep_sizes;
        const auto rows = pipeline::run_sweep(cfg, sizes, pairs);
        std::cout << rows.size() << " sweep rows -> "
                  << (fs::path(cfg.output_dir) / "sweep.csv").string() << '\n';
    });

    // heatmap
    auto* sub_heatmap = app.add_subcommand("heatmap", "emit z-scored GeoJSON layers");
    CommonOpts heatmap_opts;
    std::string heatmap_vectors;
    add_common(sub_heatmap, heatmap_opts);
    sub_heatmap->add_option("--vectors", heatmap_vectors,
                            "smell vector CSV (default from output dir)");
    sub_heatmap->callback([&] {
        const auto cfg = load_config(heatmap_opts);
        const auto vf = profile::read_smell_vectors(
            in_out_dir(cfg, "smell_vectors.csv", heatmap_vectors));
        const auto geom = load_segments(cfg);
        std::map<std::string, std::map<std::string, double>> fields;
        if (!cfg.air_path.empty()) {
            fields = pipeline::load_air_fields(cfg, geom.projected, geom.proj).fields;
        }
        fs::create_directories(cfg.output_dir);
        std::vector<std::string> warnings;
        const auto result = pipeline::emit_heatmaps(vf.vectors, vf.categories, fields,
                                                    geom.segments, cfg.output_dir,
                                                    &warnings);
        print_warnings(warnings);
        std::cout << result["layers"].size() << " layers written, "
                  << result["skipped_layers"].size() << " skipped\n";
    });

    // synth
    auto* sub_synth = app.add_subcommand("synth", "generate a synthetic city");
    std::string synth_out;
    std::uint64_t synth_seed = 7;
    synth::SynthSpec synth_spec = synth::default_spec();
    sub_synth->add_option("-o,--output-dir", synth_out, "city directory")->required();
    sub_synth->add_option("--seed", synth_seed, "generator seed");
    sub_synth->add_option("--grid", synth_spec.grid, "intersections per side");
    sub_synth->add_option("--spacing", synth_spec.spacing, "street spacing, meters");
    sub_synth->add_option("--items-per-segment", synth_spec.items_per_segment,
                          "mean items per segment");
    sub_synth->add_option("--jitter", synth_spec.jitter,
                          "max perpendicular item offset, meters");
    sub_synth->add_option("--cross-category-rate", synth_spec.cross_category_rate,
                          "chance a word ignores its zone mixture");
    sub_synth->add_option("--no2-noise", synth_spec.no2_noise, "NO2 sd around zone mean");
    sub_synth->callback([&] {
        const auto files = synth::generate_synthetic_city(synth_spec, synth_seed, synth_out);
        std::cout << "items:        " << files.items_path << '\n'
                  << "segments:     " << files.segments_path << '\n'
                  << "air quality:  " << files.air_path << '\n'
                  << "lexicon:      " << files.lexicon_path << '\n'
                  << "labels:       " << files.labels_path << '\n'
                  << "ground truth: " << files.ground_truth_path << '\n'
                  << "config:       " << files.config_path << '\n';
    });

    // run
    auto* sub_run = app.add_subcommand("run", "run the full pipeline");
    CommonOpts run_opts;
    add_common(sub_run, run_opts);
    sub_run->callback([&] {
        const auto cfg = load_config(run_opts);
        const auto manifest = pipeline::run_pipeline(cfg);
        for (const auto& w : manifest["warnings"]) {
            std::cerr << "warning: " << w.get<std::string>() << '\n';
        }
        std::cout << manifest["stages"]["match"]["matched_items"].get<std::size_t>()
                  << " items matched, "
                  << manifest["stages"]["profile"]["segments_retained"].get<std::size_t>()
                  << " segments profiled\n"
                  << "manifest: " << (fs::path(cfg.output_dir) / "manifest.json").string()
                  << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

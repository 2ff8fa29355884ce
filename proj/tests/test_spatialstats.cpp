#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "smellmap/errors.hpp"
#include "smellmap/geo.hpp"
#include "smellmap/profile.hpp"
#include "smellmap/rng.hpp"
#include "smellmap/spatialstats.hpp"
#include "support/tmpdir.hpp"

using namespace smellmap;

namespace {

// Non-centered product-moment formula, a different evaluation path than the
// implementation's centered sums.
double pearson_noncentered(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double num = sxy - sx * sy / n;
    return num / std::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
}

std::vector<std::pair<double, double>> random_locations(Rng& rng, std::size_t n,
                                                        double extent) {
    std::vector<std::pair<double, double>> loc(n);
    for (auto& p : loc) p = {rng.uniform(0.0, extent), rng.uniform(0.0, extent)};
    return loc;
}

// Two tight clusters far apart: ids 0..half-1 on the left, the rest on the
// right, one meter apart within a cluster.
std::vector<std::pair<double, double>> two_clusters(std::size_t half, double gap) {
    std::vector<std::pair<double, double>> loc;
    for (std::size_t i = 0; i < half; ++i) loc.push_back({static_cast<double>(i), 0.0});
    for (std::size_t i = 0; i < half; ++i) loc.push_back({gap + static_cast<double>(i), 0.0});
    return loc;
}

}  // namespace

TEST_SUITE("spatialstats") {

TEST_CASE("pearson handles the textbook cases") {
    CHECK(stats::pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(stats::pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(stats::pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));

    CHECK_THROWS_AS(stats::pearson({1, 2}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(stats::pearson({1, 2, 3}, {1, 2}), ValidationError);
    CHECK_THROWS_AS(stats::pearson({5, 5, 5}, {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(stats::pearson({1, 2, 3}, {7, 7, 7}), ValidationError);
}

TEST_CASE("pearson matches the non-centered formula and stays in range") {
    Rng rng(91);
    for (int iter = 0; iter < 40; ++iter) {
        std::vector<double> x(50), y(50);
        for (std::size_t i = 0; i < 50; ++i) {
            x[i] = rng.uniform(-1.0, 1.0);
            y[i] = 0.3 * x[i] + rng.uniform(-1.0, 1.0);
        }
        const double r = stats::pearson(x, y);
        CHECK(r == doctest::Approx(pearson_noncentered(x, y)).epsilon(1e-12));
        CHECK(std::abs(r) <= 1.0);
    }
    // Exact collinearity lands on the clamp boundary, never past it.
    std::vector<double> x(20), y(20);
    for (std::size_t i = 0; i < 20; ++i) {
        x[i] = rng.uniform(-5.0, 5.0);
        y[i] = 2.0 * x[i] + 3.0;
    }
    const double r = stats::pearson(x, y);
    CHECK(r == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r <= 1.0);
}

TEST_CASE("correlogram separates near from far on a split field") {
    const auto loc = two_clusters(4, 100.0);
    // +1 on the left cluster, -1 on the right: near pairs agree, far disagree.
    const std::vector<double> values = {1, 1, 1, 1, -1, -1, -1, -1};
    const auto cg = stats::spatial_autocorr(values, loc, {20.0, 200.0});
    REQUIRE(cg.rho.size() == 2);
    CHECK(cg.rho[0] == doctest::Approx(1.0));
    CHECK(cg.rho[1] == doctest::Approx(-1.0));
    CHECK(cg.pairs[0] == 12);
    CHECK(cg.pairs[1] == 16);
    CHECK(cg.rho[0] > 0.0);
    CHECK(cg.rho[1] < 0.0);
}

TEST_CASE("correlogram of white noise is near zero in every class") {
    // Pairs sharing a point are not independent, so the 3/sqrt(pairs) band is
    // approximate; allow a small violation fraction across many seeds.
    std::size_t checks = 0, violations = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(7000 + seed);
        const auto loc = random_locations(rng, 60, 1000.0);
        std::vector<double> values(60);
        for (auto& v : values) v = rng.normal();
        const auto bounds = stats::equal_width_bounds(loc, 8);
        const auto cg = stats::spatial_autocorr(values, loc, bounds);
        for (std::size_t k = 0; k < cg.rho.size(); ++k) {
            if (cg.pairs[k] < 30) continue;
            ++checks;
            if (std::abs(cg.rho[k]) >= 3.0 / std::sqrt(static_cast<double>(cg.pairs[k]))) {
                ++violations;
            }
        }
    }
    REQUIRE(checks > 400);
    CHECK(static_cast<double>(violations) < 0.02 * static_cast<double>(checks));
}

TEST_CASE("a single-pair class reports that pair's standardized product") {
    const std::vector<std::pair<double, double>> loc = {{0, 0}, {1, 0}, {100, 0}};
    const std::vector<double> values = {0.0, 3.0, 0.0};
    // Oracle: standardize by hand, then the lone class-0 pair is z0 * z1.
    const double mean = 1.0;
    const double sigma = std::sqrt((1.0 + 4.0 + 1.0) / 3.0);
    const double expected =
        std::clamp((values[0] - mean) / sigma * ((values[1] - mean) / sigma), -1.0, 1.0);

    const auto cg = stats::spatial_autocorr(values, loc, {2.0, 60.0, 101.0});
    REQUIRE(cg.pairs[0] == 1);
    CHECK(cg.rho[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(cg.pairs[1] == 0);
    CHECK(std::isnan(cg.rho[1]));  // empty class is flagged, not zero
    CHECK(cg.pairs[2] == 2);
}

TEST_CASE("correlogram input validation") {
    const auto loc = two_clusters(3, 50.0);
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 1, 1, 1, 1, 1}, loc, {100.0}),
                    ValidationError);
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 2, 3}, loc, {100.0}), ValidationError);
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 2}, {{0, 0}, {0, 0}}, {1.0}),
                    ValidationError);
    // Bounds that stop short of the largest observed distance.
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 2, 3, 4, 5, 6}, loc, {10.0}),
                    ValidationError);
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 2, 3, 4, 5, 6}, loc, {10.0, 5.0, 100.0}),
                    ValidationError);
    CHECK_THROWS_AS(stats::spatial_autocorr({1, 2, 3, 4, 5, 6}, loc, {}), ValidationError);
}

TEST_CASE("equal-width bounds span the largest pairwise distance") {
    const std::vector<std::pair<double, double>> loc = {{0, 0}, {30, 40}, {3, 4}};
    const auto bounds = stats::equal_width_bounds(loc, 5);
    REQUIRE(bounds.size() == 5);
    CHECK(bounds.back() == doctest::Approx(50.0));
    CHECK(bounds[0] == doctest::Approx(10.0));
    CHECK(std::is_sorted(bounds.begin(), bounds.end()));
    CHECK_THROWS_AS(stats::equal_width_bounds(loc, 0), ValidationError);
}

TEST_CASE("student t p-values match closed forms at one and two dof") {
    // df = 1 is the Cauchy distribution: P(|T| > t) = 1 - (2/pi) atan(t).
    for (const double t : {0.5, 1.0, 2.0, 7.3}) {
        const double expected = 1.0 - 2.0 / M_PI * std::atan(t);
        CHECK(stats::student_t_pvalue(t, 1.0) == doctest::Approx(expected).epsilon(1e-10));
    }
    // df = 2 also has an elementary form: P(|T| > t) = 1 - t/sqrt(2 + t^2).
    for (const double t : {0.5, 1.0, std::sqrt(2.0), 4.0}) {
        const double expected = 1.0 - t / std::sqrt(2.0 + t * t);
        CHECK(stats::student_t_pvalue(t, 2.0) == doctest::Approx(expected).epsilon(1e-10));
    }

    CHECK(stats::student_t_pvalue(0.0, 8.0) == doctest::Approx(1.0));
    CHECK(stats::student_t_pvalue(-2.0, 5.0) ==
          doctest::Approx(stats::student_t_pvalue(2.0, 5.0)));
    CHECK(stats::student_t_pvalue(std::numeric_limits<double>::infinity(), 5.0) == 0.0);
    // Large df approaches the normal tail: z = 1.96 is the familiar 5%.
    CHECK(stats::student_t_pvalue(1.959964, 1e6) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK_THROWS_AS(stats::student_t_pvalue(1.0, 0.0), ValidationError);

    // Monotone in |t| for fixed df.
    double prev = 1.1;
    for (double t = 0.0; t < 6.0; t += 0.5) {
        const double p = stats::student_t_pvalue(t, 6.5);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("corrected correlation keeps pearson's r and detects exact dependence") {
    Rng rng(92);
    const auto loc = random_locations(rng, 30, 500.0);
    std::vector<double> x(30), y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        x[i] = rng.uniform(-1.0, 1.0);
        y[i] = rng.uniform(-1.0, 1.0);
    }
    const auto res = stats::corrected_correlation(x, y, loc);
    CHECK(res.r == stats::pearson(x, y));
    CHECK(res.n == 30);
    CHECK(res.n_eff >= 3.0);
    CHECK(res.n_eff <= 30.0);
    CHECK(res.p >= 0.0);
    CHECK(res.p <= 1.0);
    // The t statistic and p-value are wired to n_eff, not n.
    CHECK(res.t ==
          doctest::Approx(res.r * std::sqrt((res.n_eff - 2.0) / (1.0 - res.r * res.r))));
    CHECK(res.p == doctest::Approx(stats::student_t_pvalue(res.t, res.n_eff - 2.0)));

    const auto self = stats::corrected_correlation(x, x, loc);
    CHECK(self.r == 1.0);
    CHECK(self.p == 0.0);
    CHECK(std::isinf(self.t));

    CHECK_THROWS_AS(stats::corrected_correlation({1, 2, 3}, {1, 2, 3},
                                                 {{0, 0}, {1, 0}, {2, 0}}),
                    ValidationError);
}

TEST_CASE("perfectly smooth twin fields collapse n_eff to the lower clamp") {
    const auto loc = two_clusters(6, 1000.0);
    std::vector<double> field(12, 1.0);
    for (std::size_t i = 6; i < 12; ++i) field[i] = -1.0;
    // Identical two-level fields: every correlogram product is +1, so the
    // variance estimate hits 1 and n_eff = 2 clips up to 3.
    const auto res = stats::corrected_correlation(field, field, loc, {10.0, 2000.0});
    CHECK(res.r == 1.0);
    CHECK(res.n_eff == 3.0);
    CHECK_FALSE(res.fallback);
    CHECK(res.p == 0.0);
}

TEST_CASE("non-positive variance estimates fall back to the raw sample size") {
    // Six two-point clusters. x flips sign inside each pair (intra rho -1),
    // y is constant inside each pair (intra rho +1), and each x cluster sums
    // to zero so every between-cluster class has rho exactly 0. The variance
    // estimate is then (n - n)/n^2 = 0.
    std::vector<std::pair<double, double>> loc;
    std::vector<double> x, y;
    for (int j = 0; j < 6; ++j) {
        loc.push_back({200.0 * j, 0.0});
        loc.push_back({200.0 * j + 1.0, 0.0});
        x.push_back(1.0);
        x.push_back(-1.0);
        const double v = (j % 2 == 0) ? 1.0 : -1.0;
        y.push_back(v);
        y.push_back(v);
    }
    const auto res = stats::corrected_correlation(x, y, loc, {2.0, 2000.0});
    CHECK(res.fallback);
    CHECK(res.n_eff == 12.0);
    CHECK(res.r == doctest::Approx(0.0));
    CHECK(res.p == doctest::Approx(1.0));
}

TEST_CASE("white noise keeps most of the sample and a calibrated error rate") {
    std::size_t rejections = 0;
    std::size_t retained = 0;  // runs with n_eff/n >= 0.8
    double ratio_sum = 0.0;
    const int runs = 200;
    for (int run = 0; run < runs; ++run) {
        Rng rng(9100 + run);
        const auto loc = random_locations(rng, 40, 800.0);
        std::vector<double> x(40), y(40);
        for (std::size_t i = 0; i < 40; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        const auto res = stats::corrected_correlation(x, y, loc, {});
        if (res.p < 0.05) ++rejections;
        const double ratio = res.n_eff / static_cast<double>(res.n);
        ratio_sum += ratio;
        if (ratio >= 0.8) ++retained;
    }
    // Independent fields: the correction should barely shrink the sample and
    // the test should reject at roughly the nominal 5%.
    CHECK(ratio_sum / runs >= 0.85);
    CHECK(retained >= runs * 3 / 4);
    CHECK(rejections >= runs * 2 / 100);
    CHECK(rejections <= runs * 9 / 100);
}

TEST_CASE("strong spatial smoothing shrinks n_eff and tames false positives") {
    // Independently generated fields pushed through the same wide kernel on a
    // compact grid: naive Pearson sees phantom correlations, the corrected
    // test mostly does not.
    const int runs = 60;
    int naive_rejections = 0, corrected_rejections = 0;
    double worst_ratio = 1.0;
    for (int run = 0; run < runs; ++run) {
        Rng rng(9300 + run);
        std::vector<std::pair<double, double>> loc;
        for (int gx = 0; gx < 7; ++gx) {
            for (int gy = 0; gy < 7; ++gy) loc.push_back({gx * 30.0, gy * 30.0});
        }
        const std::size_t n = loc.size();
        const double h = 60.0;
        auto smooth_noise = [&]() {
            std::vector<double> noise(n);
            for (auto& v : noise) v = rng.normal();
            std::vector<double> out(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double d = std::hypot(loc[i].first - loc[j].first,
                                                loc[i].second - loc[j].second);
                    out[i] += std::exp(-d * d / (2.0 * h * h)) * noise[j];
                }
            }
            return out;
        };
        const auto x = smooth_noise();
        const auto y = smooth_noise();
        const auto res = stats::corrected_correlation(x, y, loc, {});
        worst_ratio = std::min(worst_ratio, res.n_eff / static_cast<double>(res.n));
        if (res.p < 0.05) ++corrected_rejections;

        const double r = stats::pearson(x, y);
        const double df = static_cast<double>(n) - 2.0;
        const double t = r * std::sqrt(df / (1.0 - r * r));
        if (stats::student_t_pvalue(t, df) < 0.05) ++naive_rejections;
    }
    CHECK(worst_ratio < 0.5);  // far fewer effective samples than raw ones
    CHECK(naive_rejections > corrected_rejections);
    CHECK(corrected_rejections <= runs / 5);
}

TEST_CASE("r and p are invariant under positive affine rescaling") {
    Rng rng(93);
    const auto loc = random_locations(rng, 25, 400.0);
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < 25; ++i) {
        x[i] = rng.uniform(0.0, 1.0);
        y[i] = 0.5 * x[i] + rng.uniform(0.0, 1.0);
    }
    const auto base = stats::corrected_correlation(x, y, loc, {});
    std::vector<double> y2(25);
    for (std::size_t i = 0; i < 25; ++i) y2[i] = 37.0 * y[i] - 1000.0;
    const auto scaled = stats::corrected_correlation(x, y2, loc, {});
    CHECK(scaled.r == doctest::Approx(base.r).epsilon(1e-12));
    CHECK(scaled.n_eff == doctest::Approx(base.n_eff).epsilon(1e-9));
    CHECK(scaled.p == doctest::Approx(base.p).epsilon(1e-9));
}

TEST_CASE("field overload aligns on shared segment ids") {
    Rng rng(94);
    stats::SpatialField x, y;
    for (int i = 0; i < 20; ++i) {
        const auto id = "s" + std::to_string(i);
        const std::pair<double, double> at{rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)};
        if (i < 15) {
            x.ids.push_back(id);
            x.values.push_back(rng.uniform(0.0, 1.0));
            x.locations.push_back(at);
        }
        if (i >= 5) {
            y.ids.push_back(id);
            y.values.push_back(rng.uniform(0.0, 1.0));
            y.locations.push_back(at);
        }
    }
    const auto joined = stats::corrected_correlation(x, y, {});

    // The ten shared ids are s5..s14; restrict both fields by hand.
    std::vector<double> xs(x.values.begin() + 5, x.values.end());
    std::vector<double> ys(y.values.begin(), y.values.begin() + 10);
    std::vector<std::pair<double, double>> loc(x.locations.begin() + 5, x.locations.end());
    const auto manual = stats::corrected_correlation(xs, ys, loc, {});
    CHECK(joined.r == manual.r);
    CHECK(joined.n == 10);
    CHECK(joined.n_eff == manual.n_eff);
}

TEST_CASE("report emits one row per category and pollutant with skip reasons") {
    Rng rng(95);
    std::vector<profile::SmellVector> vectors;
    std::map<std::string, std::pair<double, double>> midpoints;
    std::map<std::string, double> no2, pm10;
    for (int i = 0; i < 14; ++i) {
        profile::SmellVector v;
        v.segment_id = "s" + std::to_string(i);
        const double f = rng.uniform(0.1, 0.9);
        v.fractions = {f, 1.0 - f, 0.25};  // third category is constant
        v.tag_count = 30;
        vectors.push_back(v);
        midpoints[v.segment_id] = {rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0)};
        no2[v.segment_id] = 10.0 + 40.0 * f + rng.uniform(-2.0, 2.0);
        pm10[v.segment_id] = rng.uniform(10.0, 30.0);
    }
    const std::vector<std::string> cats = {"emissions", "nature", "waste"};
    const auto rows = stats::category_pollutant_report(
        vectors, cats, midpoints, {{"NO2", no2}, {"PM10", pm10}}, "all", 6);
    REQUIRE(rows.size() == 6);

    std::map<std::pair<std::string, std::string>, const stats::ReportRow*> by_key;
    for (const auto& row : rows) {
        CHECK(row.source == "all");
        by_key[{row.category, row.pollutant}] = &row;
    }
    const auto& emissions_no2 = *by_key.at({"emissions", "NO2"});
    CHECK_FALSE(emissions_no2.skipped);
    CHECK(emissions_no2.result.r > 0.5);  // planted linear dependence
    CHECK(emissions_no2.result.n == 14);

    // nature = 1 - emissions, so its NO2 correlation is the mirror image.
    const auto& nature_no2 = *by_key.at({"nature", "NO2"});
    CHECK(nature_no2.result.r == doctest::Approx(-emissions_no2.result.r).epsilon(1e-12));

    // The constant category cannot be correlated with anything.
    CHECK(by_key.at({"waste", "NO2"})->skipped);
    CHECK(by_key.at({"waste", "NO2"})->skip_reason.find("variance") != std::string::npos);

    // Starve the report below ten usable segments: every row skips, none throw.
    vectors.resize(7);
    const auto starved = stats::category_pollutant_report(vectors, cats, midpoints,
                                                          {{"NO2", no2}}, "flickr", 6);
    REQUIRE(starved.size() == 3);
    for (const auto& row : starved) {
        CHECK(row.skipped);
        CHECK(row.skip_reason == "fewer than 10 segments with data");
        CHECK(row.source == "flickr");
    }
}

TEST_CASE("cross-correlation matrix is symmetric with a unit diagonal") {
    Rng rng(96);
    std::vector<profile::SmellVector> vectors;
    std::map<std::string, std::pair<double, double>> midpoints;
    for (int i = 0; i < 16; ++i) {
        profile::SmellVector v;
        v.segment_id = "s" + std::to_string(i);
        const double f = rng.uniform(0.05, 0.95);
        // a and b exactly partition the tags; c is constant; d is independent.
        v.fractions = {f, 1.0 - f, 0.5, rng.uniform(0.0, 0.3)};
        v.tag_count = 40;
        vectors.push_back(v);
        midpoints[v.segment_id] = {rng.uniform(0.0, 600.0), rng.uniform(0.0, 600.0)};
    }
    const std::vector<std::string> cats = {"a", "b", "c", "d"};
    const auto m = stats::category_cross_correlation(vectors, cats, midpoints, 6);
    REQUIRE(m.r.size() == 4);

    CHECK(m.r[0][0] == 1.0);
    CHECK(m.r[1][1] == 1.0);
    CHECK(m.r[3][3] == 1.0);
    CHECK(m.r[0][1] == doctest::Approx(-1.0).epsilon(1e-12));  // f and 1-f
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            if (std::isnan(m.r[a][b])) {
                CHECK(std::isnan(m.r[b][a]));
            } else {
                CHECK(m.r[a][b] == m.r[b][a]);
                CHECK(std::abs(m.r[a][b]) <= 1.0);
            }
        }
    }
    // The degenerate constant category is flagged undefined everywhere.
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(std::isnan(m.r[2][k]));
        CHECK(std::isnan(m.r[k][2]));
    }
    // The independently planted category barely correlates with the others.
    CHECK(std::abs(m.r[0][3]) < 0.5);

    vectors.resize(9);
    CHECK_THROWS_AS(stats::category_cross_correlation(vectors, cats, midpoints, 6),
                    ValidationError);
}

TEST_CASE("buffer sweep re-profiles per size and flags starved rows") {
    // Twelve parallel street segments, one tagged item hovering 15 m from
    // each midpoint: a 10 m buffer catches nothing, a 25 m buffer everything.
    std::vector<geo::ProjectedSegment> segments;
    std::vector<stats::TaggedPoint> items;
    std::map<std::string, double> no2;
    const auto taxonomy = profile::Taxonomy::from_word_map(
        {{"grass", "nature"}, {"petrol", "emissions"}});
    Rng rng(97);
    for (int i = 0; i < 12; ++i) {
        geo::ProjectedSegment s;
        s.id = "seg" + std::to_string(i);
        s.points = {{0.0, i * 200.0}, {50.0, i * 200.0}};
        s.recompute_bbox();
        segments.push_back(s);

        stats::TaggedPoint item;
        item.id = "i" + std::to_string(i);
        item.x = 25.0;
        item.y = i * 200.0 + 15.0;
        const int petrol = 1 + static_cast<int>(rng.below(5));
        for (int k = 0; k < petrol; ++k) item.tags.push_back("petrol");
        for (int k = petrol; k < 6; ++k) item.tags.push_back("grass");
        items.push_back(item);
        no2[s.id] = 5.0 + 8.0 * petrol + rng.uniform(-1.0, 1.0);
    }

    const std::vector<std::pair<std::string, std::string>> pair = {{"emissions", "NO2"}};
    const auto rows = stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}},
                                          pair, {10.0, 25.0}, 5, 4);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].size == 10.0);
    CHECK(rows[0].flagged);
    CHECK(rows[0].segments_retained == 0);
    CHECK(std::isnan(rows[0].r));
    CHECK(rows[1].size == 25.0);
    CHECK_FALSE(rows[1].flagged);
    CHECK(rows[1].segments_retained == 12);
    CHECK(rows[1].r > 0.5);
    CHECK(rows[1].n_eff > 2.0);

    // A single size gives exactly one row per requested pair.
    const auto single = stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}},
                                            pair, {25.0}, 5, 4);
    CHECK(single.size() == 1);

    // Empty pair list expands to every category x pollutant combination.
    const auto all = stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}}, {},
                                         {25.0}, 5, 4);
    CHECK(all.size() == 2);

    CHECK_THROWS_AS(stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}}, pair,
                                        {25.0, 10.0}, 5, 4),
                    ValidationError);
    CHECK_THROWS_AS(stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}}, pair,
                                        {}, 5, 4),
                    ValidationError);
    CHECK_THROWS_AS(stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}},
                                        {{"plastic", "NO2"}}, {25.0}, 5, 4),
                    ValidationError);
    CHECK_THROWS_AS(stats::buffer_sweep(segments, items, taxonomy, {{"NO2", no2}},
                                        {{"nature", "SO2"}}, {25.0}, 5, 4),
                    ValidationError);
}

TEST_CASE("report, matrix, and sweep files survive round-trips") {
    testsupport::TmpDir dir;

    std::vector<stats::ReportRow> report(3);
    report[0] = {"nature", "NO2", "all", {-0.42, 120, 96.5, -4.1, 0.0001, false}, false, ""};
    report[1] = {"emissions", "NO2", "flickr", {0.47, 80, 61.25, 4.9, 1e-5, false}, false, ""};
    report[2] = {"waste", "PM10", "all", {}, true, "zero variance"};
    const auto report_path = dir.file("report.csv");
    stats::write_report(report, report_path);
    const auto report_back = stats::read_report(report_path);
    REQUIRE(report_back.size() == 2);  // skipped rows are not persisted
    CHECK(report_back[0].category == "nature");
    CHECK(report_back[0].result.r == -0.42);
    CHECK(report_back[0].result.n == 120);
    CHECK(report_back[1].result.n_eff == 61.25);
    stats::write_report(report_back, dir.file("report2.csv"));
    CHECK(testsupport::slurp(report_path) == testsupport::slurp(dir.file("report2.csv")));

    stats::CrossMatrix m;
    m.categories = {"a", "b"};
    m.r = {{1.0, -0.25}, {-0.25, 1.0}};
    const auto matrix_path = dir.file("matrix.csv");
    stats::write_matrix(m, matrix_path);
    const auto m2 = stats::read_matrix(matrix_path);
    CHECK(m2.categories == m.categories);
    CHECK(m2.r == m.r);
    stats::write_matrix(m2, dir.file("matrix2.csv"));
    CHECK(testsupport::slurp(matrix_path) == testsupport::slurp(dir.file("matrix2.csv")));
    CHECK_THROWS_AS(stats::read_matrix(dir.write("bad.csv", "category,a\nb,1.0\n")),
                    ValidationError);

    std::vector<stats::SweepRow> sweep(2);
    sweep[0] = {10.0, "nature", "NO2", std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(), 3, true, "fewer than 10"};
    sweep[1] = {25.0, "nature", "NO2", -0.31, 40.5, 55, false, ""};
    const auto sweep_path = dir.file("sweep.csv");
    stats::write_sweep(sweep, sweep_path);
    const auto sweep_back = stats::read_sweep(sweep_path);
    REQUIRE(sweep_back.size() == 2);
    CHECK(sweep_back[0].flagged);  // NaN r marks the starved row
    CHECK(std::isnan(sweep_back[0].r));
    CHECK(sweep_back[0].segments_retained == 3);
    CHECK_FALSE(sweep_back[1].flagged);
    CHECK(sweep_back[1].r == -0.31);
    CHECK(sweep_back[1].n_eff == 40.5);
    stats::write_sweep(sweep_back, dir.file("sweep2.csv"));
    CHECK(testsupport::slurp(sweep_path) == testsupport::slurp(dir.file("sweep2.csv")));
}

}  // TEST_SUITE

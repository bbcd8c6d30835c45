#include <doctest.h>

#include <slicecast/errors.hpp>
#include <slicecast/preprocess.hpp>
#include <slicecast/rng.hpp>

#include <cmath>
#include <vector>

using namespace slicecast;

namespace {

DemandSeries make_series(std::string src, std::string dst, std::vector<std::int64_t> ts,
                         std::vector<double> vals, std::vector<std::uint8_t> gaps = {}) {
    DemandSeries s;
    s.source = std::move(src);
    s.target = std::move(dst);
    s.timestamps = std::move(ts);
    s.values = std::move(vals);
    s.gaps = gaps.empty() ? std::vector<std::uint8_t>(s.values.size(), 0) : std::move(gaps);
    if (s.timestamps.size() >= 2) s.cadence = s.timestamps[1] - s.timestamps[0];
    return s;
}

SeriesFrame single_column(std::vector<std::int64_t> ts, std::vector<double> vals,
                          std::vector<std::uint8_t> mask = {}) {
    SeriesFrame f = SeriesFrame::empty({"x"}, std::move(ts));
    for (std::size_t r = 0; r < f.rows(); ++r) {
        f.values.at(r, 0) = vals[r];
        f.set_observed(r, 0, mask.empty() ? true : mask[r] != 0);
    }
    return f;
}

}  // namespace

TEST_CASE("align: identical axes produce zero masked cells") {
    auto a = make_series("A", "B", {0, 300, 600}, {1, 2, 3});
    auto b = make_series("B", "C", {0, 300, 600}, {4, 5, 6});
    SeriesFrame f = align({a, b});
    CHECK(f.rows() == 3);
    CHECK(f.cols() == 2);
    CHECK(f.columns == std::vector<std::string>{"A->B", "B->C"});
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 2; ++c) CHECK(f.observed(r, c));
    CHECK(f.values.at(2, 1) == 6);
}

TEST_CASE("align: disjoint instants become the union axis with masked holes") {
    auto a = make_series("A", "B", {0, 300}, {1, 2});
    auto b = make_series("B", "C", {300, 600}, {5, 6});
    SeriesFrame f = align({a, b});
    CHECK(f.timestamps == std::vector<std::int64_t>{0, 300, 600});
    int masked = 0;
    for (std::size_t r = 0; r < f.rows(); ++r)
        for (std::size_t c = 0; c < f.cols(); ++c)
            if (!f.observed(r, c)) ++masked;
    CHECK(masked == 2);
    CHECK_FALSE(f.observed(2, 0));
    CHECK_FALSE(f.observed(0, 1));
    CHECK(f.observed(1, 0));
    CHECK(f.observed(1, 1));
}

TEST_CASE("align: ingest gap flags stay masked") {
    auto a = make_series("A", "B", {0, 300, 600}, {1, 0, 3}, {0, 1, 0});
    SeriesFrame f = align({a});
    CHECK_FALSE(f.observed(1, 0));
    CHECK(f.observed(0, 0));
    CHECK(f.observed(2, 0));
}

TEST_CASE("clean: linear interpolation bridges interior gaps") {
    // [1, gap, 3] -> [1, 2, 3]
    auto f = clean(single_column({0, 300, 600}, {1, 0, 3}, {1, 0, 1}), FillPolicy::Linear);
    CHECK(f.values.at(1, 0) == doctest::Approx(2.0));
    CHECK(f.observed(1, 0));

    // A two-row hole fills with evenly spaced steps between the endpoints.
    auto g = clean(single_column({0, 300, 600, 900}, {10, 0, 0, 40}, {1, 0, 0, 1}),
                   FillPolicy::Linear);
    CHECK(g.values.at(1, 0) == doctest::Approx(20.0));
    CHECK(g.values.at(2, 0) == doctest::Approx(30.0));
}

TEST_CASE("clean: masking 5% of a known series stays within local variation") {
    // Oracle: compare to the pre-masking values; a linear fill can deviate at
    // most by the spread of the original series across the surrounding gap.
    const std::size_t n = 200;
    std::vector<std::int64_t> ts;
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i) {
        ts.push_back(static_cast<std::int64_t>(i) * 300);
        vals.push_back(50.0 + 20.0 * std::sin(2.0 * 3.14159265358979 * i / 50.0));
    }
    Rng rng(31);
    std::vector<std::uint8_t> mask(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        if (rng.uniform() < 0.05) mask[i] = 0;
    mask[0] = mask[n - 1] = 1;

    auto masked = single_column(ts, vals, mask);
    auto cleaned = clean(masked, FillPolicy::Linear);
    for (std::size_t r = 0; r < n; ++r) {
        if (mask[r]) continue;
        std::size_t prev = r, next = r;
        while (prev > 0 && !mask[prev]) --prev;
        while (next < n - 1 && !mask[next]) ++next;
        double lo = vals[prev], hi = vals[prev];
        for (std::size_t i = prev; i <= next; ++i) {
            lo = std::min(lo, vals[i]);
            hi = std::max(hi, vals[i]);
        }
        CHECK(std::fabs(cleaned.values.at(r, 0) - vals[r]) <= (hi - lo) + 1e-12);
    }
}

TEST_CASE("clean: leading and trailing gaps take the nearest observed value") {
    // [gap, 5, 5] -> [5, 5, 5]
    auto f = clean(single_column({0, 300, 600}, {0, 5, 5}, {0, 1, 1}), FillPolicy::Linear);
    CHECK(f.values.at(0, 0) == 5.0);

    auto g = clean(single_column({0, 300, 600}, {7, 7, 0}, {1, 1, 0}), FillPolicy::Linear);
    CHECK(g.values.at(2, 0) == 7.0);
}

TEST_CASE("clean: previous and zero policies") {
    auto prev = clean(single_column({0, 300, 600, 900}, {1, 0, 0, 4}, {1, 0, 0, 1}),
                      FillPolicy::Previous);
    CHECK(prev.values.at(1, 0) == 1.0);
    CHECK(prev.values.at(2, 0) == 1.0);
    // Leading gap has no previous value; nearest (next) applies.
    auto lead = clean(single_column({0, 300}, {0, 9}, {0, 1}), FillPolicy::Previous);
    CHECK(lead.values.at(0, 0) == 9.0);

    auto zero = clean(single_column({0, 300, 600}, {1, 0, 3}, {1, 0, 1}), FillPolicy::Zero);
    CHECK(zero.values.at(1, 0) == 0.0);
}

TEST_CASE("clean: never alters observed cells and is idempotent") {
    Rng rng(17);
    SeriesFrame f = SeriesFrame::empty({"a", "b"}, {});
    std::vector<std::int64_t> ts;
    for (int i = 0; i < 50; ++i) ts.push_back(i * 300);
    f = SeriesFrame::empty({"a", "b"}, ts);
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            f.values.at(r, c) = rng.uniform(0, 100);
            f.set_observed(r, c, rng.uniform() > 0.05);
            if (!f.observed(r, c)) f.values.at(r, c) = 0;
        }
    // Guarantee each column has at least one observation.
    f.set_observed(0, 0, true);
    f.set_observed(0, 1, true);

    SeriesFrame cleaned = clean(f, FillPolicy::Linear);
    for (std::size_t r = 0; r < 50; ++r)
        for (std::size_t c = 0; c < 2; ++c) {
            CHECK(cleaned.observed(r, c));
            if (f.observed(r, c)) CHECK(cleaned.values.at(r, c) == f.values.at(r, c));
        }
    SeriesFrame twice = clean(cleaned, FillPolicy::Linear);
    for (std::size_t i = 0; i < twice.values.a.size(); ++i)
        CHECK(twice.values.a[i] == cleaned.values.a[i]);
}

TEST_CASE("clean: a column with no observations is an error under every policy") {
    for (auto policy : {FillPolicy::Linear, FillPolicy::Previous, FillPolicy::Zero}) {
        CHECK_THROWS_AS(clean(single_column({0, 300}, {0, 0}, {0, 0}), policy), ValidationError);
    }
}

TEST_CASE("fill policy names") {
    CHECK(fill_policy_from_string("linear") == FillPolicy::Linear);
    CHECK(fill_policy_from_string("previous") == FillPolicy::Previous);
    CHECK(fill_policy_from_string("zero") == FillPolicy::Zero);
    CHECK(to_string(FillPolicy::Linear) == "linear");
    CHECK_THROWS_AS(fill_policy_from_string("cubic"), ValidationError);
}

TEST_CASE("daily_max: one row per UTC day holding the maximum") {
    // Two days at 6 h cadence; day two's peak sits at 18:00.
    std::vector<std::int64_t> ts;
    std::vector<double> vals;
    for (int d = 0; d < 2; ++d)
        for (int h : {0, 6, 12, 18}) {
            ts.push_back(d * 86400 + h * 3600);
            vals.push_back(d == 1 && h == 18 ? 99 : 10 + h);
        }
    DailyMaxStats stats;
    auto f = daily_max(single_column(ts, vals), &stats);
    CHECK(f.rows() == 2);
    CHECK(f.timestamps == std::vector<std::int64_t>{0, 86400});
    CHECK(f.values.at(0, 0) == 28.0);
    CHECK(f.values.at(1, 0) == 99.0);
    CHECK(stats.days == 2);
    CHECK(stats.rows_per_full_day == 4);
    CHECK_FALSE(stats.partial_first_day);
    CHECK_FALSE(stats.partial_last_day);

    // Output row count equals the number of distinct UTC dates (oracle).
    std::vector<std::int64_t> days;
    for (auto t : ts) {
        std::int64_t d = (t / 86400) * 86400;
        if (days.empty() || days.back() != d) days.push_back(d);
    }
    CHECK(f.rows() == days.size());
}

TEST_CASE("daily_max: partial edge days are aggregated and flagged") {
    // Starts at 12:00 on day 0, ends at 06:00 on day 2.
    std::vector<std::int64_t> ts = {43200, 64800, 86400, 108000, 129600, 151200, 172800, 194400};
    std::vector<double> vals = {1, 2, 3, 4, 5, 6, 7, 8};
    DailyMaxStats stats;
    auto f = daily_max(single_column(ts, vals), &stats);
    CHECK(f.rows() == 3);
    CHECK(f.values.at(0, 0) == 2.0);
    CHECK(f.values.at(1, 0) == 6.0);
    CHECK(f.values.at(2, 0) == 8.0);
    CHECK(stats.partial_first_day);
    CHECK(stats.partial_last_day);
}

TEST_CASE("daily_max: already-daily input is a fixed point") {
    auto f = single_column({0, 86400, 172800}, {5, 6, 7});
    auto once = daily_max(f);
    CHECK(once.timestamps == f.timestamps);
    for (std::size_t i = 0; i < once.values.a.size(); ++i)
        CHECK(once.values.a[i] == f.values.a[i]);
    auto twice = daily_max(once);
    CHECK(twice.timestamps == once.timestamps);
}

TEST_CASE("daily_max: cadence must divide a day") {
    CHECK_THROWS_AS(daily_max(single_column({0, 7000}, {1, 2})), ValidationError);
}

TEST_CASE("scaler: textbook example") {
    // Column [1,2,3]: mean 2, population stddev sqrt(2/3) = 0.8165.
    auto f = single_column({0, 86400, 172800}, {1, 2, 3});
    auto params = fit_scaler(f, 0, 3);
    CHECK(params.mean[0] == doctest::Approx(2.0));
    CHECK(params.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    auto scaled = transform(f, params);
    CHECK(scaled.values.at(0, 0) == doctest::Approx(-1.224744871).epsilon(1e-8));
    CHECK(scaled.values.at(1, 0) == doctest::Approx(0.0));
    CHECK(scaled.values.at(2, 0) == doctest::Approx(1.224744871).epsilon(1e-8));
}

TEST_CASE("scaler: constant column hits the epsilon guard with a warning") {
    auto f = single_column({0, 86400}, {4, 4});
    std::vector<std::string> warnings;
    auto params = fit_scaler(f, 0, 2, &warnings);
    CHECK(params.stddev[0] == doctest::Approx(0.0));
    CHECK(warnings.size() == 1);
    auto scaled = transform(f, params);
    CHECK(scaled.values.at(0, 0) == 0.0);
    CHECK(scaled.values.at(1, 0) == 0.0);
    // Inversion still recovers the original values.
    auto back = invert(scaled, params);
    CHECK(back.values.at(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("scaler: invert(transform(x)) is the identity to 1e-9") {
    Rng rng(23);
    std::vector<std::int64_t> ts;
    SeriesFrame f = SeriesFrame::empty({"a", "b", "c"}, {});
    for (int i = 0; i < 40; ++i) ts.push_back(i * 86400);
    f = SeriesFrame::empty({"a", "b", "c"}, ts);
    for (std::size_t r = 0; r < 40; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            f.values.at(r, c) = rng.uniform(-5, 500);
            f.set_observed(r, c, true);
        }
    auto params = fit_scaler(f, 0, 24);
    auto round = invert(transform(f, params), params);
    for (std::size_t i = 0; i < f.values.a.size(); ++i)
        CHECK(std::fabs(round.values.a[i] - f.values.a[i]) < 1e-9);
}

TEST_CASE("scaler: fit range excludes later rows, so shifted tails change nothing") {
    // A level shift in the test region must not affect parameters fitted on
    // the training range.
    auto f = single_column({0, 86400, 172800, 259200}, {1, 2, 100, 200});
    auto g = single_column({0, 86400, 172800, 259200}, {1, 2, -7, 3});
    auto pf = fit_scaler(f, 0, 2);
    auto pg = fit_scaler(g, 0, 2);
    CHECK(pf.mean[0] == pg.mean[0]);
    CHECK(pf.stddev[0] == pg.stddev[0]);

    // Fitting over everything does move them (sanity check of the oracle).
    auto pf_all = fit_scaler(f, 0, 4);
    CHECK(pf_all.mean[0] != pf.mean[0]);
}

TEST_CASE("scaler: masked cells are excluded from the fit") {
    auto f = single_column({0, 86400, 172800}, {1, 1000, 3}, {1, 0, 1});
    auto params = fit_scaler(f, 0, 3);
    CHECK(params.mean[0] == doctest::Approx(2.0));  // 1000 ignored
    CHECK(params.stddev[0] == doctest::Approx(1.0));
}

TEST_CASE("scaler: column mismatch is rejected") {
    auto f = single_column({0, 86400}, {1, 2});
    auto params = fit_scaler(f, 0, 2);
    SeriesFrame other = SeriesFrame::empty({"y"}, {0, 86400});
    CHECK_THROWS_AS(transform(other, params), ValidationError);
}

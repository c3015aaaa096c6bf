#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stockcast/data.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

using namespace stockcast;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream file(std::string(FIXTURE_DIR) + "/" + name);
    REQUIRE(file.good());
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

// Build a synthetic Yahoo CSV with n rows, inserting "null" rows at the
// given zero-based positions.
std::string synthetic_csv(std::size_t n, const std::vector<std::size_t>& null_rows) {
    std::string text = "Date,Open,High,Low,Close,Adj Close,Volume\n";
    int year = 2004, month = 1, day = 1;
    for (std::size_t i = 0; i < n; ++i) {
        char date[40];
        std::snprintf(date, sizeof(date), "%04d-%02d-%02d", year, month, day);
        ++day;
        if (day > 28) {
            day = 1;
            ++month;
            if (month > 12) {
                month = 1;
                ++year;
            }
        }
        const bool is_null =
            std::find(null_rows.begin(), null_rows.end(), i) != null_rows.end();
        if (is_null) {
            text += std::string(date) + ",null,null,null,null,null,null\n";
        } else {
            const double px = 100.0 + static_cast<double>(i % 50);
            char row[160];
            std::snprintf(row, sizeof(row), "%s,%.2f,%.2f,%.2f,%.2f,%.2f,%d\n", date, px,
                          px + 1.0, px - 1.0, px + 0.5, px + 0.4, 1000 + static_cast<int>(i));
            text += row;
        }
    }
    return text;
}

} // namespace

TEST_CASE("parse_yahoo_csv reads a minimal well-formed document") {
    const auto bars = parse_yahoo_csv(
        "Date,Open,High,Low,Close,Adj Close,Volume\n"
        "2019-01-02,100.5,101.0,99.5,100.75,100.6,123456\n");
    REQUIRE(bars.size() == 1);
    CHECK(bars[0].date == Date{2019, 1, 2});
    CHECK(*bars[0].open == doctest::Approx(100.5));
    CHECK(*bars[0].volume == doctest::Approx(123456));
    CHECK_FALSE(bars[0].has_null());
}

TEST_CASE("parse_yahoo_csv accepts reordered and case-shifted headers") {
    const auto bars = parse_yahoo_csv(
        "volume,ADJ CLOSE,close,LOW,high,open,date\n"
        "10,9.5,9.7,9.0,10.0,9.2,2019-01-02\n");
    REQUIRE(bars.size() == 1);
    CHECK(*bars[0].close == doctest::Approx(9.7));
    CHECK(*bars[0].adj_close == doctest::Approx(9.5));
}

TEST_CASE("parse_yahoo_csv flags null markers without rejecting rows") {
    // Mirrors the real cleaning arithmetic: 3964 rows, 15 of them null.
    const std::vector<std::size_t> nulls = {3,    97,   310,  542,  889,  1024, 1500, 1808,
                                            2042, 2371, 2690, 2933, 3204, 3605, 3899};
    const auto bars = parse_yahoo_csv(synthetic_csv(3964, nulls));
    REQUIRE(bars.size() == 3964);
    std::size_t null_count = 0;
    for (const auto& b : bars) {
        if (b.has_null()) ++null_count;
    }
    CHECK(null_count == 15);

    const CleanResult clean = drop_nulls(bars, "SYN");
    CHECK(clean.series.size() == 3949);
    CHECK(clean.dropped == 15);
}

TEST_CASE("parse_yahoo_csv errors") {
    CHECK_THROWS_AS(parse_yahoo_csv("Date,Open,High,Low,Close,Volume\n"
                                    "2019-01-02,1,1,1,1,1\n"),
                    InputError); // missing Adj Close
    CHECK_THROWS_AS(parse_yahoo_csv("Date,Open,High,Low,Close,Adj Close,Volume\n"),
                    InputError); // header only
    // Unparseable number on a non-null field carries the line number.
    try {
        parse_yahoo_csv("Date,Open,High,Low,Close,Adj Close,Volume\n"
                        "2019-01-02,1,1,1,abc,1,1\n");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("drop_nulls identity, idempotence and ordering checks") {
    const auto bars = parse_yahoo_csv(synthetic_csv(50, {}));
    const CleanResult clean = drop_nulls(bars, "SYN");
    CHECK(clean.series.size() == 50);
    CHECK(clean.dropped == 0);

    // Idempotence: re-cleaning the cleaned series changes nothing.
    std::vector<RawBar> again;
    for (const auto& b : clean.series.bars) {
        RawBar raw;
        raw.date = b.date;
        raw.open = b.open;
        raw.high = b.high;
        raw.low = b.low;
        raw.close = b.close;
        raw.adj_close = b.adj_close;
        raw.volume = static_cast<double>(b.volume);
        again.push_back(raw);
    }
    const CleanResult twice = drop_nulls(again, "SYN");
    CHECK(twice.series.size() == clean.series.size());
    CHECK(twice.dropped == 0);

    // Non-increasing dates are an error.
    std::swap(again[5], again[6]);
    CHECK_THROWS_AS(drop_nulls(again, "SYN"), InputError);
    std::swap(again[5], again[6]);
    again[6].date = again[5].date; // duplicate day
    CHECK_THROWS_AS(drop_nulls(again, "SYN"), InputError);

    // Everything null leaves an empty series.
    const auto all_null = parse_yahoo_csv(synthetic_csv(3, {0, 1, 2}));
    CHECK_THROWS_AS(drop_nulls(all_null, "SYN"), InputError);
}

TEST_CASE("a row with one null field is dropped whole") {
    const auto bars = parse_yahoo_csv(
        "Date,Open,High,Low,Close,Adj Close,Volume\n"
        "2019-01-02,10,11,9,10.5,10.4,1000\n"
        "2019-01-03,10,11,9,10.5,10.4,null\n" // only volume missing
        "2019-01-04,10,11,9,10.5,,1000\n");   // empty adj close
    CHECK(bars[1].has_null());
    CHECK(bars[2].has_null());
    const CleanResult clean = drop_nulls(bars, "SYN");
    CHECK(clean.series.size() == 1);
    CHECK(clean.dropped == 2);
}

TEST_CASE("drop_nulls warns on OHLC ordering violations instead of failing") {
    const auto bars = parse_yahoo_csv(
        "Date,Open,High,Low,Close,Adj Close,Volume\n"
        "2019-01-02,100,99,98,100.5,100,10\n"); // high below close
    const CleanResult clean = drop_nulls(bars, "SYN");
    CHECK(clean.series.size() == 1);
    REQUIRE(clean.warnings.size() == 1);
    CHECK(clean.warnings[0].find("OHLC") != std::string::npos);
}

TEST_CASE("split_chronological partitions around the boundary") {
    const auto clean = drop_nulls(parse_yahoo_csv(read_fixture("TEST500.csv")), "TEST");
    REQUIRE(clean.series.size() == 500);

    const DataSplit split = split_chronological(clean.series, Date{2019, 1, 1});
    CHECK(split.train.size() == 371);
    CHECK(split.test.size() == 129);
    CHECK(split.train.size() + split.test.size() == clean.series.size());
    CHECK(split.train.bars.back().date < Date{2019, 1, 1});
    CHECK(split.test.bars.front().date >= Date{2019, 1, 1});

    // Partition property for several interior boundaries.
    for (std::size_t i : {std::size_t{1}, std::size_t{100}, std::size_t{499}}) {
        const DataSplit s = split_chronological(clean.series, clean.series.bars[i].date);
        CHECK(s.train.size() + s.test.size() == clean.series.size());
        CHECK(s.train.size() == i);
    }

    // Boundary equal to the second date gives a train of exactly one bar.
    const DataSplit tiny = split_chronological(clean.series, clean.series.bars[1].date);
    CHECK(tiny.train.size() == 1);

    // Degenerate boundaries.
    CHECK_THROWS_AS(split_chronological(clean.series, Date{2000, 1, 1}), InputError);
    CHECK_THROWS_AS(split_chronological(clean.series, Date{2030, 1, 1}), InputError);
}

TEST_CASE("fit_minmax per-feature extrema and degenerate flag") {
    const ScalerParams p = fit_minmax(Matrix{{10, 5}, {20, 5}, {30, 5}});
    REQUIRE(p.n_features() == 2);
    CHECK(p.min[0] == 10);
    CHECK(p.max[0] == 30);
    CHECK_FALSE(p.degenerate(0));
    CHECK(p.degenerate(1)); // constant column

    CHECK_THROWS_AS(fit_minmax(Matrix{}), InputError);
}

TEST_CASE("apply/invert minmax midpoint and degenerate behavior") {
    const ScalerParams p = fit_minmax(Matrix{{10}, {30}});
    const Matrix scaled = apply_minmax(p, Matrix{{20}});
    CHECK(scaled[0][0] == doctest::Approx(0.5));
    CHECK(invert_minmax(p, scaled)[0][0] == doctest::Approx(20));

    const ScalerParams deg = fit_minmax(Matrix{{5}, {5}});
    CHECK(apply_minmax(deg, Matrix{{123}})[0][0] == 0.0);

    CHECK_THROWS_AS(apply_minmax(p, Matrix{{1, 2}}), std::invalid_argument);
}

TEST_CASE("minmax round trip within 1e-9 on random data") {
    Rng rng(915);
    Matrix train, probe;
    for (int i = 0; i < 200; ++i) {
        train.push_back({rng.uniform(-1000, 1000), rng.uniform(0, 1e6)});
    }
    for (int i = 0; i < 500; ++i) {
        // Probe values may fall outside the train range (test-segment case).
        probe.push_back({rng.uniform(-2000, 2000), rng.uniform(-10, 2e6)});
    }
    const ScalerParams p = fit_minmax(train);
    const Matrix back = invert_minmax(p, apply_minmax(p, probe));
    for (std::size_t i = 0; i < probe.size(); ++i) {
        for (std::size_t f = 0; f < 2; ++f) {
            CHECK(std::abs(back[i][f] - probe[i][f]) <= 1e-9);
        }
    }
}

TEST_CASE("scaler fitted on the train segment never reads test rows") {
    const auto clean = drop_nulls(parse_yahoo_csv(read_fixture("TEST500.csv")), "TEST");
    const DataSplit split = split_chronological(clean.series, Date{2019, 1, 1});
    const ScalerParams from_split = fit_minmax(feature_matrix(split.train));
    const ScalerParams from_train_alone = fit_minmax(feature_matrix(split.train));
    CHECK(from_split.min == from_train_alone.min);
    CHECK(from_split.max == from_train_alone.max);
    // And it differs from a scaler that saw everything (test range extends it).
    const ScalerParams from_all = fit_minmax(feature_matrix(clean.series));
    bool any_difference = false;
    for (std::size_t f = 0; f < from_all.n_features(); ++f) {
        if (from_all.min[f] != from_split.min[f] || from_all.max[f] != from_split.max[f]) {
            any_difference = true;
        }
    }
    CHECK(any_difference);
}

TEST_CASE("build_windows sample arithmetic") {
    std::vector<double> values(10);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i) * 0.1;

    const WindowedDataset ds = build_windows(values, 7);
    REQUIRE(ds.size() == 3);
    CHECK(ds.inputs[0].size() == 7);
    CHECK(ds.targets[0] == values[7]);
    CHECK(ds.inputs[2][0] == values[2]);
    CHECK(ds.targets[2] == values[9]);

    // The window builder yields N - 7 samples; the commonly quoted
    // 3700-of-3708 figure undercounts by one.
    CHECK(build_windows(std::vector<double>(3708, 1.0), 7).size() == 3701);
    CHECK(build_windows(std::vector<double>(241, 1.0), 7).size() == 234);

    CHECK_THROWS_AS(build_windows(std::vector<double>(7, 1.0), 7), InputError);
}

TEST_CASE("window arithmetic property over random lengths") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = 8 + rng.uniform_index(400);
        std::vector<double> values(len);
        for (auto& v : values) v = rng.uniform();
        const WindowedDataset ds = build_windows(values, 7);
        REQUIRE(ds.size() == len - 7);
        const std::size_t i = rng.uniform_index(ds.size());
        CHECK(ds.targets[i] == values[i + 7]);
        CHECK(ds.inputs[i][6] == values[i + 6]);
    }
}

TEST_CASE("feature_matrix excludes close unless asked") {
    const auto clean = drop_nulls(parse_yahoo_csv(synthetic_csv(20, {})), "SYN");
    const Matrix base = feature_matrix(clean.series);
    const Matrix with_close = feature_matrix(clean.series, true);
    REQUIRE(base[0].size() == 5);
    REQUIRE(with_close[0].size() == 6);
    CHECK(with_close[0][3] == clean.series.bars[0].close);
}

TEST_CASE("canonical CSV round-trips through the parser") {
    const auto clean = drop_nulls(parse_yahoo_csv(read_fixture("TEST500.csv")), "TEST");
    const std::string canon = to_canonical_csv(clean.series);
    const auto reparsed = drop_nulls(parse_yahoo_csv(canon), "TEST");
    REQUIRE(reparsed.series.size() == clean.series.size());
    for (std::size_t i = 0; i < clean.series.size(); ++i) {
        CHECK(reparsed.series.bars[i].date == clean.series.bars[i].date);
        CHECK(reparsed.series.bars[i].close == clean.series.bars[i].close);
        CHECK(reparsed.series.bars[i].volume == clean.series.bars[i].volume);
    }
    // A second serialization is byte-identical.
    CHECK(to_canonical_csv(reparsed.series) == canon);
}

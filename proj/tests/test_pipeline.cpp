#include <catch2/catch.hpp>

#include <algorithm>
#include <sstream>

#include "gwcast/dataset.hpp"
#include "gwcast/timeseries.hpp"

using namespace gwcast;

namespace {

TimeSeriesFrame ingest_string(const std::string& text, const std::string& well = "w1") {
    std::istringstream in(text);
    return ingest_csv(in, well);
}

TimeSeriesFrame make_frame(std::size_t n, std::int64_t start_hour = 350640) {
    TimeSeriesFrame f;
    f.well_id = "w";
    f.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.rows[i].hour = start_hour + static_cast<std::int64_t>(i);
        f.rows[i].rainfall_mm = static_cast<double>(i % 5);
        f.rows[i].tide_m = std::sin(0.5 * static_cast<double>(i));
        f.rows[i].gwl_m = 1.0 + 0.01 * static_cast<double>(i);
    }
    return f;
}

}  // namespace

TEST_CASE("iso hour formatting and strict parsing round trip") {
    const std::int64_t h2010 = days_from_civil(2010, 1, 1) * 24;
    REQUIRE(iso_from_hour(h2010) == "2010-01-01T00:00:00Z");

    std::int64_t parsed = 0;
    REQUIRE(hour_from_iso("2010-01-01T00:00:00Z", parsed));
    REQUIRE(parsed == h2010);

    Prng prng(5);
    for (int i = 0; i < 200; ++i) {
        const std::int64_t h = static_cast<std::int64_t>(prng.next_u64() % 1000000);
        std::int64_t back = 0;
        REQUIRE(hour_from_iso(iso_from_hour(h), back));
        REQUIRE(back == h);
    }

    std::int64_t dummy;
    REQUIRE_FALSE(hour_from_iso("2010-01-01T00:30:00Z", dummy));
    REQUIRE_FALSE(hour_from_iso("2010-13-01T00:00:00Z", dummy));
    REQUIRE_FALSE(hour_from_iso("2010-02-29T00:00:00Z", dummy));  // not a leap year
    REQUIRE(hour_from_iso("2012-02-29T00:00:00Z", dummy));
    REQUIRE_FALSE(hour_from_iso("2010-01-01 00:00:00Z", dummy));
    REQUIRE_FALSE(hour_from_iso("2010-01-01T24:00:00Z", dummy));
}

TEST_CASE("ingest_csv parses a small valid file") {
    const auto f = ingest_string(
        "timestamp,rainfall_mm,tide_m,gwl_m\n"
        "2010-01-01T00:00:00Z,0.0,0.5,1.25\n"
        "2010-01-01T01:00:00Z,1.5,0.4,1.26\n"
        "2010-01-01T02:00:00Z,0.0,0.3,1.24\n");
    REQUIRE(f.size() == 3);
    REQUIRE(f.well_id == "w1");
    REQUIRE(f.rows[1].rainfall_mm == 1.5);
    REQUIRE(f.rows[2].hour == f.rows[0].hour + 2);
}

TEST_CASE("ingest_csv rejects negative rainfall naming the line") {
    try {
        ingest_string(
            "timestamp,rainfall_mm,tide_m,gwl_m\n"
            "2010-01-01T00:00:00Z,0.0,0.5,1.25\n"
            "2010-01-01T01:00:00Z,-1.0,0.4,1.26\n");
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("line 3") != std::string::npos);
        REQUIRE(msg.find("negative rainfall") != std::string::npos);
    }
}

TEST_CASE("ingest_csv reports malformed rows with their line number") {
    try {
        ingest_string(
            "timestamp,rainfall_mm,tide_m,gwl_m\n"
            "2010-01-01T00:00:00Z,0.0,abc,1.25\n");
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        REQUIRE(std::string(e.what()).find("line 2") != std::string::npos);
    }

    REQUIRE_THROWS_AS(ingest_string("timestamp,rainfall_mm,tide_m,gwl_m\n"
                                    "2010-01-01T00:00:00Z,0.0,0.5\n"),
                      std::runtime_error);
    REQUIRE_THROWS_AS(ingest_string("time,rain,tide,gwl\n"), std::runtime_error);
}

TEST_CASE("ingest_csv sorts unsorted rows and keeps the record multiset") {
    const std::string header = "timestamp,rainfall_mm,tide_m,gwl_m\n";
    const std::string shuffled =
        header +
        "2010-01-01T03:00:00Z,3.0,0.3,1.3\n"
        "2010-01-01T00:00:00Z,0.0,0.0,1.0\n"
        "2010-01-01T02:00:00Z,2.0,0.2,1.2\n"
        "2010-01-01T01:00:00Z,1.0,0.1,1.1\n";
    const auto got = ingest_string(shuffled);

    // Oracle: parse rows independently and sort.
    std::vector<double> rain = {3.0, 0.0, 2.0, 1.0};
    std::sort(rain.begin(), rain.end());
    REQUIRE(got.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(got.rows[i].rainfall_mm == rain[i]);
        if (i) REQUIRE(got.rows[i].hour == got.rows[i - 1].hour + 1);
    }
}

TEST_CASE("ingest_csv rejects duplicate timestamps") {
    REQUIRE_THROWS_WITH(ingest_string("timestamp,rainfall_mm,tide_m,gwl_m\n"
                                      "2010-01-01T00:00:00Z,0.0,0.5,1.25\n"
                                      "2010-01-01T00:00:00Z,1.0,0.4,1.26\n"),
                        Catch::Contains("duplicate timestamp"));
}

TEST_CASE("csv write/ingest round trip is lossless") {
    TimeSeriesFrame f = make_frame(30);
    f.rows[7].gwl_m = 1.2345678901234567;
    f.rows[9].tide_m = -0.000123456789;
    std::ostringstream out;
    write_csv(f, out);
    std::istringstream in(out.str());
    const TimeSeriesFrame back = ingest_csv(in, f.well_id);
    REQUIRE(back.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        REQUIRE(back.rows[i].hour == f.rows[i].hour);
        REQUIRE(back.rows[i].rainfall_mm == f.rows[i].rainfall_mm);
        REQUIRE(back.rows[i].tide_m == f.rows[i].tide_m);
        REQUIRE(back.rows[i].gwl_m == f.rows[i].gwl_m);
    }
}

TEST_CASE("segment_gaps passes a gap-free frame through") {
    const TimeSeriesFrame f = make_frame(20);
    const auto segs = segment_gaps(f, 3);
    REQUIRE(segs.size() == 1);
    REQUIRE(segs[0].size() == 20);
    for (std::size_t i = 0; i < 20; ++i) REQUIRE(segs[0].rows[i].hour == f.rows[i].hour);
}

TEST_CASE("segment_gaps interpolates short gaps linearly") {
    TimeSeriesFrame f = make_frame(6);
    // remove rows 2 and 3 -> a 2-hour gap between rows 1 and 4
    f.rows.erase(f.rows.begin() + 2, f.rows.begin() + 4);
    const auto segs = segment_gaps(f, 3);
    REQUIRE(segs.size() == 1);
    REQUIRE(segs[0].size() == 6);
    const auto& r = segs[0].rows;
    for (std::size_t i = 1; i < 6; ++i) REQUIRE(r[i].hour == r[i - 1].hour + 1);
    // hand interpolation between the surviving neighbours
    const auto& a = f.rows[1];
    const auto& b = f.rows[2];
    REQUIRE(r[2].gwl_m == Approx(a.gwl_m + (b.gwl_m - a.gwl_m) / 3.0).margin(1e-15));
    REQUIRE(r[3].gwl_m == Approx(a.gwl_m + 2.0 * (b.gwl_m - a.gwl_m) / 3.0).margin(1e-15));
    REQUIRE(r[2].tide_m == Approx(a.tide_m + (b.tide_m - a.tide_m) / 3.0).margin(1e-15));
}

TEST_CASE("segment_gaps splits on long gaps") {
    TimeSeriesFrame f = make_frame(30);
    // remove rows 10..19 -> a 10-hour gap
    f.rows.erase(f.rows.begin() + 10, f.rows.begin() + 20);
    const auto segs = segment_gaps(f, 3);
    REQUIRE(segs.size() == 2);
    REQUIRE(segs[0].size() == 10);
    REQUIRE(segs[1].size() == 10);
    for (const auto& seg : segs)
        for (std::size_t i = 1; i < seg.size(); ++i)
            REQUIRE(seg.rows[i].hour == seg.rows[i - 1].hour + 1);
}

TEST_CASE("fit_normalizer maps the training range onto [0,1]") {
    TimeSeriesFrame f = make_frame(10);
    f.rows[0].gwl_m = -2.0;
    f.rows[9].gwl_m = 3.0;
    const Normalizer norm = fit_normalizer({f});
    REQUIRE(norm.apply(Channel::kGwl, -2.0) == 0.0);
    REQUIRE(norm.apply(Channel::kGwl, 3.0) == 1.0);

    // values outside the fitted range leave [0,1]; invert stays exact
    REQUIRE(norm.apply(Channel::kGwl, 4.0) > 1.0);
    REQUIRE(norm.apply(Channel::kGwl, -3.0) < 0.0);
    REQUIRE(norm.invert(Channel::kGwl, norm.apply(Channel::kGwl, 4.0)) ==
            Approx(4.0).margin(1e-12));
}

TEST_CASE("normalizer invert/apply identity on random values") {
    const Normalizer norm = fit_normalizer({make_frame(50)});
    Prng prng(33);
    for (int i = 0; i < 1000; ++i) {
        const double x = prng.uniform(-100.0, 100.0);
        for (const Channel c : {Channel::kRainfall, Channel::kTide, Channel::kGwl})
            REQUIRE(norm.invert(c, norm.apply(c, x)) == Approx(x).margin(1e-12));
    }
}

TEST_CASE("fit_normalizer rejects constant channels and empty input") {
    TimeSeriesFrame f = make_frame(10);
    for (auto& r : f.rows) r.tide_m = 0.75;
    REQUIRE_THROWS_WITH(fit_normalizer({f}), Catch::Contains("tide_m"));
    REQUIRE_THROWS_AS(fit_normalizer({}), std::invalid_argument);
}

TEST_CASE("normalizer is a function of training rows only") {
    const TimeSeriesFrame train = make_frame(40);
    TimeSeriesFrame test = make_frame(40, 350640 + 40);
    const Normalizer a = fit_normalizer({train});
    for (auto& r : test.rows) r.gwl_m += 1000.0;  // test perturbation
    const Normalizer b = fit_normalizer({train});
    REQUIRE(a == b);
}

TEST_CASE("build_windows counting formula") {
    const Normalizer norm = fit_normalizer({make_frame(20)});
    REQUIRE(build_windows({make_frame(10)}, 3, 2, norm).size() == 6);
    REQUIRE(build_windows({make_frame(4)}, 3, 2, norm).size() == 0);

    Prng prng(44);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t L = 2 + prng.next_u64() % 60;
        const std::size_t lb = 1 + prng.next_u64() % 10;
        const std::size_t hz = 1 + prng.next_u64() % 10;
        const auto ds = build_windows({make_frame(L)}, lb, hz, norm);
        const std::size_t expected = L >= lb + hz ? L - lb - hz + 1 : 0;
        REQUIRE(ds.size() == expected);
    }
}

TEST_CASE("build_windows first window equals hand-sliced blocks") {
    TimeSeriesFrame f = make_frame(6);
    const Normalizer norm = fit_normalizer({f});
    const auto ds = build_windows({f}, 3, 2, norm);
    REQUIRE(ds.size() == 2);
    const auto& s = ds.samples[0];
    REQUIRE(s.offset == 0);
    REQUIRE(s.origin_hour == f.rows[2].hour);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(s.window.past(i, 0) == norm.apply(Channel::kRainfall, f.rows[i].rainfall_mm));
        REQUIRE(s.window.past(i, 1) == norm.apply(Channel::kTide, f.rows[i].tide_m));
        REQUIRE(s.window.past(i, 2) == norm.apply(Channel::kGwl, f.rows[i].gwl_m));
    }
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(s.window.future(i, 0) ==
                norm.apply(Channel::kRainfall, f.rows[3 + i].rainfall_mm));
        REQUIRE(s.window.future(i, 1) == norm.apply(Channel::kTide, f.rows[3 + i].tide_m));
        REQUIRE(s.target[i] == norm.apply(Channel::kGwl, f.rows[3 + i].gwl_m));
    }
}

TEST_CASE("windows never cross a segment boundary") {
    TimeSeriesFrame f = make_frame(40);
    f.rows.erase(f.rows.begin() + 15, f.rows.begin() + 25);  // long gap
    const auto segs = segment_gaps(f, 3);
    REQUIRE(segs.size() == 2);
    const Normalizer norm = fit_normalizer(segs);
    const auto ds = build_windows(segs, 4, 2, norm);
    REQUIRE(ds.size() > 0);
    for (const auto& s : ds.samples) {
        const auto& rows = segs[s.segment_index].rows;
        for (std::size_t i = 1; i < 6; ++i)
            REQUIRE(rows[s.offset + i].hour == rows[s.offset + i - 1].hour + 1);
    }
}

TEST_CASE("build_windows validates lookback and horizon") {
    const Normalizer norm = fit_normalizer({make_frame(10)});
    REQUIRE_THROWS_AS(build_windows({make_frame(10)}, 0, 2, norm), std::invalid_argument);
    REQUIRE_THROWS_AS(build_windows({make_frame(10)}, 3, 0, norm), std::invalid_argument);
}

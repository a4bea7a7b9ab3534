#include <spotsched/adversary.hpp>
#include <spotsched/ingest.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>
#include <sstream>

using namespace spotsched;

namespace {

std::vector<std::uint8_t> bits(const SpotTrace& t) {
    return t.availability();
}

}  // namespace

TEST(Canonical, RoundTripIsExact) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SpotTrace t = generate_synthetic_trace(MarkovTrace{0.2, 0.1}, 257, 600.0 / 7.0, seed);
        t.meta()["source"] = "unit test";
        std::stringstream ss;
        write_trace(t, ss);
        EXPECT_EQ(read_trace(ss), t);
    }
}

TEST(Canonical, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "spotsched_roundtrip.csv";
    const SpotTrace t(600.0, {1, 0, 0, 1}, {{"region", "us-east-1"}});
    save_trace(t, path);
    EXPECT_EQ(load_trace(path), t);
    std::filesystem::remove(path);
    EXPECT_THROW((void)load_trace(path), Error);
}

TEST(Canonical, RejectsMalformedInput) {
    auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_trace(in);
    };
    EXPECT_THROW((void)parse("index,available\n0,1\n"), ParseError);
    EXPECT_THROW((void)parse("# spotsched-trace v1\n# step_seconds=60\nindex,available\n0,1\n2,1\n"), ParseError);
    EXPECT_THROW((void)parse("# spotsched-trace v1\n# step_seconds=60\nindex,available\n0,2\n"), ParseError);
    EXPECT_THROW((void)parse("# spotsched-trace v1\n# step_seconds=60\nindex,available\n"), Error);
    EXPECT_EQ(bits(parse("# spotsched-trace v1\n# step_seconds=60\nindex,available\n0,1\n1,0\n")),
              (std::vector<std::uint8_t>{1, 0}));
    std::ostringstream out;
    EXPECT_THROW(write_trace(SpotTrace(60.0, {1}, {{"a=b", "c"}}), out), InvalidArgument);
}

TEST(Timestamps, EpochAndIso) {
    EXPECT_DOUBLE_EQ(parse_timestamp("1700000000"), 1700000000.0);
    EXPECT_DOUBLE_EQ(parse_timestamp("1970-01-01T00:10:00Z"), 600.0);
    EXPECT_DOUBLE_EQ(parse_timestamp("2023-05-01 10:20:00"), parse_timestamp("2023-05-01T10:20:00Z"));
    EXPECT_THROW((void)parse_timestamp("yesterday"), ParseError);
}

TEST(SpotLake, LabelsAndSelection) {
    std::istringstream in(
        "time,provider,region,zone,instance_type,availability\n"
        "1970-01-01T00:00:00Z,aws,us-east-1,a,m5.large,high\n"
        "1970-01-01T00:00:00Z,aws,us-west-2,a,m5.large,low\n"
        "1970-01-01T00:10:00Z,aws,us-east-1,a,m5.large,medium\n"
        "1970-01-01T00:20:00Z,aws,us-east-1,a,m5.large,low\n"
        "1970-01-01T00:30:00Z,aws,us-east-1,a,m5.large,high\n");
    const auto t = parse_spotlake(in, {"aws", "us-east-1", "", "m5.large"});
    EXPECT_EQ(bits(t), (std::vector<std::uint8_t>{1, 0, 0, 1}));
    EXPECT_DOUBLE_EQ(t.step_seconds(), 600.0);
}

TEST(SpotLake, ForwardFillsGaps) {
    std::istringstream in(
        "time,provider,region,zone,instance_type,availability\n"
        "0,aws,r,z,i,high\n"
        "1800,aws,r,z,i,low\n");
    const auto t = parse_spotlake(in, {});
    EXPECT_EQ(bits(t), (std::vector<std::uint8_t>{1, 1, 1, 0}));
    EXPECT_EQ(t.meta().at("filled_steps"), "2");
}

TEST(SpotLake, Errors) {
    const std::string header = "time,provider,region,zone,instance_type,availability\n";
    auto parse = [&](const std::string& rows, SpotLakeSelector sel = {}) {
        std::istringstream in(header + rows);
        return parse_spotlake(in, sel);
    };
    EXPECT_THROW((void)parse("0,aws,r,z,i,great\n"), ParseError);
    EXPECT_THROW((void)parse("0,aws,r,z,i,high\n", {"gcp", "", "", ""}), Error);
    EXPECT_THROW((void)parse("600,aws,r,z,i,high\n0,aws,r,z,i,high\n"), ParseError);
    EXPECT_THROW((void)parse("0,aws,r,z,i,high\n0,aws,r,z,i,low\n"), ParseError);
}

TEST(SpotLake, ColumnMapping) {
    std::istringstream mapping("timestamp = ts\nlabel = score\nstep_seconds = 300\n");
    const ColumnMapping cols = parse_column_mapping(mapping);
    EXPECT_EQ(cols.timestamp, "ts");
    EXPECT_DOUBLE_EQ(cols.step_seconds, 300.0);
    std::istringstream in("ts,score,provider,region,zone,instance_type\n0,high,a,b,c,d\n300,low,a,b,c,d\n");
    EXPECT_EQ(bits(parse_spotlake(in, {}, cols)), (std::vector<std::uint8_t>{1, 0}));
    std::istringstream bad("colour = red\n");
    EXPECT_THROW((void)parse_column_mapping(bad), Error);
}

TEST(SkyPilotAvailability, Pings) {
    std::istringstream in("timestamp,available\n0,1\n600,0\n1200,1\n");
    const auto t = parse_skypilot_availability(in);
    EXPECT_EQ(bits(t), (std::vector<std::uint8_t>{1, 0, 1}));
    EXPECT_DOUBLE_EQ(t.step_seconds(), 600.0);
    std::istringstream up("timestamp,available\n0,true\n600,up\n1200,1\n");
    EXPECT_DOUBLE_EQ(trace_stats(parse_skypilot_availability(up)).fraction, 1.0);
    std::istringstream dup("timestamp,available\n0,1\n0,0\n");
    EXPECT_THROW((void)parse_skypilot_availability(dup), ParseError);
    std::istringstream junk("timestamp,available\n0,maybe\n");
    EXPECT_THROW((void)parse_skypilot_availability(junk), ParseError);
}

TEST(SkyPilotPreemption, Rasterization) {
    std::istringstream in("start,lifetime\n0,3600\n7200,3600\n");
    const auto t = parse_skypilot_preemption(in, 600.0);
    std::vector<std::uint8_t> want(18, 0);
    std::fill(want.begin(), want.begin() + 6, 1);
    std::fill(want.begin() + 12, want.end(), 1);
    EXPECT_EQ(bits(t), want);
}

TEST(SkyPilotPreemption, SingleLifetimeAndWarnings) {
    std::istringstream one("start,lifetime\n100,6000\n");
    EXPECT_DOUBLE_EQ(trace_stats(parse_skypilot_preemption(one, 600.0)).fraction, 1.0);
    std::istringstream zero("start,lifetime\n0,1200\n1200,0\n2400,1200\n");
    std::vector<std::string> warnings;
    const auto t = parse_skypilot_preemption(zero, 600.0, &warnings);
    EXPECT_EQ(warnings.size(), 1u);
    EXPECT_EQ(bits(t), (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1}));
    std::istringstream overlap("start,lifetime\n0,1200\n600,1200\n");
    EXPECT_THROW((void)parse_skypilot_preemption(overlap, 600.0), ParseError);
    std::istringstream negative("start,lifetime\n0,-5\n");
    EXPECT_THROW((void)parse_skypilot_preemption(negative, 600.0), ParseError);
}

TEST(SkyPilotPreemption, ConservationWithinOneStepPerBoundary) {
    std::ostringstream csv;
    csv << "start,lifetime\n";
    double recorded = 0.0;
    double start = 37.0;
    std::size_t intervals = 0;
    for (int i = 0; i < 25; ++i) {
        const double life = 500.0 + 311.0 * (i % 7);
        csv << start << ',' << life << '\n';
        recorded += life;
        start += life + 250.0 + 97.0 * (i % 5);
        ++intervals;
    }
    std::istringstream in(csv.str());
    const auto t = parse_skypilot_preemption(in, 600.0);
    const double rasterized = 600.0 * static_cast<double>(t.available_steps(t.size()));
    EXPECT_LE(rasterized, recorded);
    EXPECT_GE(rasterized, recorded - 2.0 * 600.0 * static_cast<double>(intervals));
}

TEST(TraceStats, Examples) {
    const auto st = trace_stats(SpotTrace(1.0, {1, 1, 0, 0, 1}));
    EXPECT_DOUBLE_EQ(st.fraction, 0.6);
    EXPECT_EQ(st.segment_lengths, (std::vector<std::size_t>{2, 1}));
    EXPECT_EQ(st.gap_lengths, (std::vector<std::size_t>{2}));
    EXPECT_EQ(st.max_segment, 2u);
    EXPECT_DOUBLE_EQ(trace_stats(SpotTrace(1.0, {0, 0, 0})).fraction, 0.0);
}

TEST(TraceStats, SegmentsAndGapsCoverHorizon) {
    const auto t = generate_synthetic_trace(BernoulliTrace{0.4}, 5000, 60.0, 3);
    const auto st = trace_stats(t);
    const auto seg = std::accumulate(st.segment_lengths.begin(), st.segment_lengths.end(), std::size_t{0});
    const auto gap = std::accumulate(st.gap_lengths.begin(), st.gap_lengths.end(), std::size_t{0});
    EXPECT_EQ(seg + gap, st.horizon);
    EXPECT_GE(st.fraction, 0.0);
    EXPECT_LE(st.fraction, 1.0);
}

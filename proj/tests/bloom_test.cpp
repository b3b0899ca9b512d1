#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "gtest/gtest.h"

#include "curate/bloom.hpp"

#include "testutil.hpp"

using namespace curate;

TEST(BloomMath, OptimalKBoundary) {
    // -ln(0.5)/ln(2) = 1 exactly
    EXPECT_EQ(bloom_optimal_k(0.5), 1u);
}

TEST(BloomMath, OptimalKDerivedValues) {
    // -ln(0.01)/ln 2 = 6.6439 -> 7 ; -ln(0.001)/ln 2 = 9.966 -> 10
    EXPECT_EQ(bloom_optimal_k(0.01), 7u);
    EXPECT_EQ(bloom_optimal_k(0.001), 10u);
}

TEST(BloomMath, OptimalKRejectsBadEps) {
    EXPECT_THROW(bloom_optimal_k(0.0), std::invalid_argument);
    EXPECT_THROW(bloom_optimal_k(1.0), std::invalid_argument);
    EXPECT_THROW(bloom_optimal_k(-0.5), std::invalid_argument);
}

TEST(BloomMath, OptimalMBoundaryIdentity) {
    // n=1, k=1, eps = 1 - e^{-1}: m = 1 sits exactly on the boundary
    const double eps = 1.0 - std::exp(-1.0);
    EXPECT_EQ(bloom_optimal_m(1, 1, eps + 1e-12), 1u);
    EXPECT_LE(bloom_fpr(1, 1, 1), eps + 1e-12);
}

TEST(BloomMath, OptimalMBackSubstitution) {
    // smallest m satisfying the design inequality, within one bit
    const std::uint64_t m = bloom_optimal_m(1'000'000, 7, 0.01);
    EXPECT_LE(bloom_fpr(1'000'000, 7, m), 0.01);
    EXPECT_GT(bloom_fpr(1'000'000, 7, m - 1), 0.01);
    // closed form -n ln(eps) / (ln 2)^2 within 1%
    const double closed = -1e6 * std::log(0.01) / (std::log(2.0) * std::log(2.0));
    EXPECT_NEAR(static_cast<double>(m), closed, 0.01 * closed);
}

TEST(BloomMath, OptimalMMonotoneInEps) {
    EXPECT_GT(bloom_optimal_m(1000, 7, 0.001), bloom_optimal_m(1000, 7, 0.01));
}

TEST(BloomFilterTest, NoFalseNegatives) {
    // false positives may occur at the design rate; false negatives never
    BloomFilter f = BloomFilter::sized_for(5000, 0.01, 1);
    int spurious = 0;
    for (int i = 0; i < 5000; ++i) {
        const std::string item = "item-" + std::to_string(i);
        if (f.check_and_insert(item)) ++spurious;
        EXPECT_TRUE(f.query(item));
        EXPECT_TRUE(f.check_and_insert(item));
    }
    for (int i = 0; i < 5000; ++i) EXPECT_TRUE(f.query("item-" + std::to_string(i)));
    EXPECT_LE(spurious, 150);  // ~eps of the inserts, generously bounded
}

TEST(BloomFilterTest, FirstInsertReportsAbsentOnFreshFilter) {
    BloomFilter f(1 << 20, 7, 0, 0.0, 2);  // huge and nearly empty
    EXPECT_FALSE(f.check_and_insert("only-item"));
    EXPECT_TRUE(f.check_and_insert("only-item"));
}

TEST(BloomFilterTest, EmpiricalFprWithinDesign) {
    // sized for n=1e6 at eps=0.01; fresh probes measure <= 0.02
    BloomFilter f = BloomFilter::sized_for(1'000'000, 0.01, 7);
    for (int i = 0; i < 1'000'000; ++i) f.insert("gram-" + std::to_string(i));
    int fp = 0;
    const int probes = 100'000;
    for (int i = 0; i < probes; ++i)
        if (f.query("fresh-" + std::to_string(i))) ++fp;
    const double rate = static_cast<double>(fp) / probes;
    EXPECT_LE(rate, 0.02);
    EXPECT_GT(rate, 0.0);  // with 1e5 probes at ~1% some false positives occur
}

TEST(BloomFilterTest, ConcurrentInsertsMatchSerial) {
    // two threads inserting the same items produce the same final bits as
    // one thread (set bits are idempotent)
    const int n = 100'000;
    BloomFilter serial(1 << 21, 7, 0, 0.0, 3);
    for (int i = 0; i < n; ++i) serial.check_and_insert("x" + std::to_string(i));

    BloomFilter parallel(1 << 21, 7, 0, 0.0, 3);
    auto worker = [&] {
        for (int i = 0; i < n; ++i) parallel.check_and_insert("x" + std::to_string(i));
    };
    std::thread t1(worker), t2(worker);
    t1.join();
    t2.join();
    EXPECT_TRUE(serial.same_bits(parallel));
}

TEST(BloomFilterTest, SnapshotRoundTrip) {
    testutil::TempDir tmp("bloom_snap");
    BloomFilter f(4096, 5, 1234, 0.02, 99);
    for (int i = 0; i < 200; ++i) f.insert("k" + std::to_string(i));
    const std::string path = tmp.path("filter.bff");
    f.save(path);

    BloomFilter g = BloomFilter::load(path);
    EXPECT_EQ(g.bit_count(), 4096u);
    EXPECT_EQ(g.hasher_count(), 5u);
    EXPECT_EQ(g.n_target(), 1234u);
    EXPECT_DOUBLE_EQ(g.eps(), 0.02);
    EXPECT_EQ(g.seed(), 99u);
    EXPECT_TRUE(f.same_bits(g));
    for (int i = 0; i < 200; ++i) EXPECT_TRUE(g.query("k" + std::to_string(i)));
}

TEST(BloomFilterTest, SnapshotHeaderBytes) {
    testutil::TempDir tmp("bloom_hdr");
    BloomFilter f(64, 2, 7, 0.25, 1);
    f.save(tmp.path("h.bff"));
    const std::string bytes = testutil::read_file_bytes(tmp.path("h.bff"));
    ASSERT_EQ(bytes.size(), 44u + 8u);  // header + ceil(64/8)
    EXPECT_EQ(bytes.substr(0, 4), "BFF1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 64);  // m, little-endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2);  // k
    EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 7);  // n_target
}

TEST(BloomFilterTest, LoadRejectsGarbage) {
    testutil::TempDir tmp("bloom_bad");
    {
        std::ofstream f(tmp.path("bad.bff"), std::ios::binary);
        f << "NOPE and some trailing bytes";
    }
    EXPECT_THROW(BloomFilter::load(tmp.path("bad.bff")), std::runtime_error);
}

TEST(FalseMarkBound, PaperWorkedExample) {
    // 100 n-grams, 60 pre-contained, threshold 0.8, eps 0.01:
    // exp(-2 * 19.6^2 / 40) = exp(-19.208) ~= 4.55e-9 < 1e-8
    const double bound = false_mark_bound(100, 60, 0.8, 0.01);
    EXPECT_LT(bound, 1e-8);
    EXPECT_NEAR(bound, 4.5506306918e-9, 1e-14);
}

TEST(FalseMarkBound, ZeroExponentBoundary) {
    // T*N = S + eps*(N-S) -> exponent 0 -> bound 1
    const double eps = 0.1;
    const double t = (60.0 + eps * 40.0) / 100.0;
    EXPECT_DOUBLE_EQ(false_mark_bound(100, 60, t, eps), 1.0);
}

TEST(FalseMarkBound, DecreasesInThreshold) {
    EXPECT_GT(false_mark_bound(100, 60, 0.8, 0.01), false_mark_bound(100, 60, 0.9, 0.01));
}

TEST(FalseMarkBound, DegenerateAllContained) {
    EXPECT_DOUBLE_EQ(false_mark_bound(50, 50, 0.8, 0.01), 1.0);
}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include <homdip/tags.hpp>

using namespace homdip;
using namespace homdip::tags;

namespace {

TimeTagStream make_stream(std::vector<std::uint64_t> times, std::uint8_t ch, double res = kDefaultResolution) {
  std::sort(times.begin(), times.end());
  TimeTagStream s;
  s.resolution = res;
  for (auto t : times) s.tags.push_back({t, ch});
  return s;
}

// O(n^2) reference for the pairing policy: tags of s1 in time order each take
// the nearest unused tag of s2 within w, the earlier one on a tie.
std::uint64_t brute_force_pairs(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b,
                                std::int64_t w) {
  std::vector<bool> used(b.size(), false);
  std::uint64_t n = 0;
  for (auto t : a) {
    std::int64_t best = -1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || std::llabs(b[j] - t) > w) continue;
      if (best < 0) {
        best = static_cast<std::int64_t>(j);
        continue;
      }
      const auto dj = std::llabs(b[j] - t), db = std::llabs(b[static_cast<std::size_t>(best)] - t);
      if (dj < db || (dj == db && b[j] < b[static_cast<std::size_t>(best)])) best = static_cast<std::int64_t>(j);
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::int64_t> times_of(const TimeTagStream& s) {
  std::vector<std::int64_t> v;
  for (const auto& t : s.tags) v.push_back(static_cast<std::int64_t>(t.time));
  return v;
}

} // namespace

TEST(Coincidences, EmptyStreams) {
  const auto r = count_coincidences(TimeTagStream{}, TimeTagStream{}, 580e-12);
  EXPECT_EQ(r.count, 0u);
  EXPECT_EQ(r.singles[0], 0u);
}

TEST(Coincidences, SingleExactPair) {
  const auto s1 = make_stream({1000}, 0, 1e-12);
  const auto s2 = make_stream({1000}, 1, 1e-12);
  EXPECT_EQ(count_coincidences(s1, s2, 500e-12).count, 1u);
}

TEST(Coincidences, WindowEdgeInclusive) {
  const auto s1 = make_stream({1000}, 0, 1e-12);
  EXPECT_EQ(count_coincidences(s1, make_stream({1500}, 1, 1e-12), 500e-12).count, 1u);
  EXPECT_EQ(count_coincidences(s1, make_stream({1501}, 1, 1e-12), 500e-12).count, 0u);
  EXPECT_EQ(count_coincidences(s1, make_stream({500}, 1, 1e-12), 500e-12).count, 1u);
}

TEST(Coincidences, ConsumptionAndTies) {
  // one s2 tag between two s1 tags: only the first s1 tag gets it
  EXPECT_EQ(count_coincidences(make_stream({100, 300}, 0, 1e-12), make_stream({200}, 1, 1e-12), 150e-12).count, 1u);
  // equidistant partners: the earlier one is taken, leaving the later for the next tag
  EXPECT_EQ(count_coincidences(make_stream({200, 310}, 0, 1e-12), make_stream({100, 300}, 1, 1e-12), 100e-12).count,
            2u);
}

TEST(Coincidences, RejectsMismatchedResolutionAndUnsorted) {
  EXPECT_THROW(count_coincidences(make_stream({1}, 0, 32e-12), make_stream({1}, 1, 1e-12), 1e-9), ConfigError);
  TimeTagStream bad = make_stream({5, 1}, 0);
  std::swap(bad.tags[0], bad.tags[1]);
  EXPECT_THROW(count_coincidences(bad, make_stream({1}, 1), 1e-9), FormatError);
}

TEST(Coincidences, MatchesBruteForceOracle) {
  std::mt19937_64 rng(99);
  for (int inst = 0; inst < 1000; ++inst) {
    const auto n1 = std::uniform_int_distribution<int>(0, 1000)(rng);
    const auto n2 = std::uniform_int_distribution<int>(0, 1000)(rng);
    // dense instances exercise contested partners; times in 32 ps units
    const auto span = std::uniform_int_distribution<std::uint64_t>(50, 40000)(rng);
    std::uniform_int_distribution<std::uint64_t> t(0, span);
    std::vector<std::uint64_t> a(static_cast<std::size_t>(n1)), b(static_cast<std::size_t>(n2));
    for (auto& x : a) x = t(rng);
    for (auto& x : b) x = t(rng);
    const auto s1 = make_stream(a, 0), s2 = make_stream(b, 1);
    const auto r = count_coincidences(s1, s2, 580e-12);
    ASSERT_EQ(r.count, brute_force_pairs(times_of(s1), times_of(s2), 18)) << "instance " << inst;
    ASSERT_LE(r.count, std::min(r.singles[0], r.singles[1]));
    ASSERT_GE(r.histogram.total(), r.count);
  }
}

TEST(Coincidences, AccidentalEstimate) {
  auto s1 = make_stream({1, 2, 3, 4}, 0);
  auto s2 = make_stream({10, 20}, 1);
  CoincidenceOptions opt;
  opt.duration = 2.0;
  const auto r = count_coincidences(s1, s2, opt);
  EXPECT_DOUBLE_EQ(r.accidental_estimate, (4.0 / 2.0) * (2.0 / 2.0) * 2.0 * 580e-12 * 2.0);
}

TEST(Coincidences, OffsetShiftsSecondStream) {
  const auto s1 = make_stream({1000}, 0, 1e-12);
  const auto s2 = make_stream({3320}, 1, 1e-12);
  CoincidenceOptions opt;
  opt.window = 100e-12;
  EXPECT_EQ(count_coincidences(s1, s2, opt).count, 0u);
  opt.offset = 2320e-12;
  EXPECT_EQ(count_coincidences(s1, s2, opt).count, 1u);
}

TEST(Histogram, IdenticalStreamsPeakAtZero) {
  const auto s = make_stream({100, 5000, 90000}, 0);
  const auto h = correlation_histogram(s, s, 32e-12, 320e-12);
  ASSERT_EQ(h.counts.size(), 21u);
  EXPECT_EQ(h.counts[10], 3u);
  EXPECT_EQ(h.total(), 3u);
  EXPECT_DOUBLE_EQ(h.center(10), 0.0);
}

TEST(Histogram, ConservesPairsAndIsSymmetric) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> t(0, 5000);
  std::vector<std::uint64_t> a(300), b(300);
  for (auto& x : a) x = t(rng);
  for (auto& x : b) x = t(rng);
  const auto s1 = make_stream(a, 0), s2 = make_stream(b, 1);
  const auto h12 = correlation_histogram(s1, s2, 96e-12, 1600e-12);
  const auto h21 = correlation_histogram(s2, s1, 96e-12, 1600e-12);
  std::uint64_t pairs = 0;
  for (auto x : times_of(s1)) {
    for (auto y : times_of(s2)) pairs += std::llabs(y - x) * 32 <= 1600;
  }
  EXPECT_EQ(h12.total(), pairs);
  ASSERT_EQ(h12.counts.size(), h21.counts.size());
  for (std::size_t i = 0; i < h12.counts.size(); ++i) EXPECT_EQ(h12.counts[i], h21.counts[h21.counts.size() - 1 - i]);
}

TEST(Histogram, RejectsBadBins) {
  const auto s = make_stream({1}, 0);
  EXPECT_THROW(correlation_histogram(s, s, 0.0, 1e-9), ConfigError);
  EXPECT_THROW(correlation_histogram(s, s, 2e-9, 1e-9), ConfigError);
}

TEST(PostSelect, NearlyFullWidthKeepsEverything) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::uint64_t> t(0, 1'000'000);
  std::vector<std::uint64_t> v(5000);
  for (auto& x : v) x = t(rng);
  const auto s = make_stream(v, 0);
  // 32 ps tags fold onto a 16 ps lattice of a 2320 ps slot; the phase
  // opposite 1168 ps is off that lattice, so nothing sits on the cut.
  const auto out = post_select(s, 2320e-12, 1168e-12, 2320e-12 - 1e-15);
  EXPECT_EQ(out.tags, s.tags);
  EXPECT_TRUE(out.metadata.contains("post_select"));
}

TEST(PostSelect, SubsequenceAndIdempotent) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::uint64_t> t(0, 10'000'000);
  std::vector<std::uint64_t> v(20000);
  for (auto& x : v) x = t(rng);
  const auto s = make_stream(v, 1);
  const auto once = post_select(s, 2320e-12, 1160e-12, 175e-12);
  const auto twice = post_select(once, 2320e-12, 1160e-12, 175e-12);
  EXPECT_EQ(once.tags, twice.tags);
  EXPECT_TRUE(std::includes(s.tags.begin(), s.tags.end(), once.tags.begin(), once.tags.end()));
  // uniform tags: 11 of 145 phase lattice points lie within +-87.5 ps of 1160 ps
  const double frac = static_cast<double>(once.size()) / static_cast<double>(s.size());
  EXPECT_NEAR(frac, 11.0 / 145.0, 0.01);
  for (const auto& tag : once.tags) {
    const auto phase = static_cast<std::int64_t>((tag.time * 32) % 2320);
    EXPECT_LE(std::llabs(phase - 1160), 87);
  }
}

TEST(PostSelect, WrapsAroundSlotBoundary) {
  const auto s = make_stream({0, 1, 72, 73, 36}, 0);  // phases 0, 32, 2304, 16, 1152 ps
  const auto out = post_select(s, 2320e-12, 0.0, 100e-12);
  EXPECT_EQ(out.size(), 4u);
  EXPECT_THROW(post_select(s, 2320e-12, 0.0, 2320e-12), ConfigError);
  EXPECT_THROW(post_select(s, 2320e-12, 0.0, 0.0), ConfigError);
}

TEST(PhaseHistogram, UniformStreamIsFlat) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::uint64_t> t(0, 50'000'000);
  std::vector<std::uint64_t> v(290'000);
  for (auto& x : v) x = t(rng);
  const auto h = slot_phase_histogram(make_stream(v, 0), 2320e-12, 16e-12);
  ASSERT_EQ(h.counts.size(), 145u);
  // 2320 ps is not a multiple of 32 ps: the folded phases form a 16 ps lattice
  std::uint64_t total = 0;
  std::size_t occupied = 0;
  for (auto c : h.counts) {
    total += c;
    occupied += c > 0;
  }
  EXPECT_EQ(total, v.size());
  EXPECT_EQ(occupied, 145u);
  const double mean = static_cast<double>(total) / 145.0;
  for (auto c : h.counts) EXPECT_NEAR(static_cast<double>(c), mean, 5.0 * std::sqrt(mean));
}

TEST(PhaseHistogram, RejectsNonDividingBin) {
  EXPECT_THROW(slot_phase_histogram(make_stream({1}, 0), 2320e-12, 33e-12), ConfigError);
}

TEST(PhaseHistogram, GaussianPulseShape) {
  // Gaussian pulse of known FWHM at 1160 ps on a flat background, 1 ps tags.
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(1160.0, 175.0 / 2.3548200450309493);
  std::uniform_real_distribution<double> u(0.0, 2320.0);
  std::vector<std::uint64_t> v;
  for (int slot = 0; slot < 400000; ++slot) {
    v.push_back(static_cast<std::uint64_t>(slot * 2320.0 + std::llround(g(rng))));
    if (slot % 4 == 0) v.push_back(static_cast<std::uint64_t>(slot * 2320.0 + std::floor(u(rng))));
  }
  const auto h = slot_phase_histogram(make_stream(v, 0, 1e-12), 2320e-12, 8e-12);
  const auto shape = estimate_pulse_shape(h);
  EXPECT_NEAR(shape.fwhm, 175e-12, 175e-12 * 0.02);
  EXPECT_NEAR(shape.center, 1160e-12, 8e-12);
}

TEST(Merge, OrdersByTimeThenChannel) {
  const auto m = merge(make_stream({5, 10}, 1), make_stream({5, 7}, 0));
  ASSERT_EQ(m.size(), 4u);
  EXPECT_EQ(m.tags[0], (TimeTag{5, 0}));
  EXPECT_EQ(m.tags[1], (TimeTag{5, 1}));
  EXPECT_TRUE(m.is_sorted());
  EXPECT_EQ(m.count(0), 2u);
}

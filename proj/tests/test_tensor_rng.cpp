#include <doctest.h>

#include <algorithm>
#include <set>

#include "fsnn/rng.hpp"
#include "fsnn/tensor.hpp"

using namespace fsnn;

TEST_CASE("tensor shape/data contracts") {
  Tensor t({2, 3});
  CHECK(t.numel() == 6);
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0f}), Error);
  CHECK_THROWS_AS(t.reshaped({4}), Error);
  Tensor r = t.reshaped({3, 2});
  CHECK(r.numel() == 6);
  CHECK(t.bitwise_equal(t));
  Tensor u = t;
  u.data[3] = 1.0f;
  CHECK(!t.bitwise_equal(u));
  CHECK(t.bits_hash() != u.bits_hash());
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.images = Tensor({2, 1, 2, 2});
  ds.labels = {0, 9};
  ds.class_count = 10;
  CHECK_NOTHROW(ds.validate());
  ds.labels = {0, 10};
  CHECK_THROWS_AS(ds.validate(), Error);
  ds.labels = {0};
  CHECK_THROWS_AS(ds.validate(), Error);
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) differs |= a2.next() != c.next();
  CHECK(differs);

  Rng s0 = Rng::stream(7, 0), s1 = Rng::stream(7, 1), s0b = Rng::stream(7, 0);
  CHECK(s0.next() == s0b.next());
  CHECK(Rng::stream(7, 0).next() != s1.next());
}

TEST_CASE("sample_distinct draws k distinct sorted values below n") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const uint64_t n = 10 + rng.below(5000);
    const uint64_t k = 1 + rng.below(n < 500 ? n : 500);
    auto v = rng.sample_distinct(n, k);
    CHECK(v.size() == k);
    std::set<uint64_t> s(v.begin(), v.end());
    CHECK(s.size() == k);
    CHECK(*s.rbegin() < n);
    CHECK(std::is_sorted(v.begin(), v.end()));
  }
  auto all = rng.sample_distinct(17, 17);
  CHECK(all.size() == 17);
  CHECK(all.front() == 0);
  CHECK(all.back() == 16);
}

TEST_CASE("uniform stays in range") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

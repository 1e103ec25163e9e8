#include <doctest.h>

#include <cmath>

#include "fsnn/evaluate.hpp"
#include "fsnn/rng.hpp"

using namespace fsnn;
using namespace fsnn::eval;

namespace {

Tensor conf(std::initializer_list<float> vals, uint32_t n, uint32_t c) {
  return Tensor({n, c}, std::vector<float>(vals));
}

}  // namespace

TEST_CASE("classification rules") {
  const Tensor g = conf({0.7f, 0.2f, 0.1f, 0.1f, 0.8f, 0.1f}, 2, 3);

  SUBCASE("identical vectors on all samples -> Masked") {
    CHECK(classify(g, g, Termination::Completed) == Label::Masked);
  }
  SUBCASE("same top-1, different confidences -> Safe-SDC") {
    Tensor f = g;
    f.data[1] = 0.21f;
    f.data[2] = 0.09f;
    CHECK(classify(g, f, Termination::Completed) == Label::SafeSDC);
  }
  SUBCASE("top-1 flip on one sample -> Critical-SDC (worst sample wins)") {
    Tensor f = g;
    f.data[3] = 0.9f;  // sample 1 now predicts class 0 instead of 1
    f.data[4] = 0.05f;
    CHECK(classify(g, f, Termination::Completed) == Label::CriticalSDC);
  }
  SUBCASE("abnormal termination -> DUE regardless of confidences") {
    CHECK(classify(g, g, Termination::Trap) == Label::DUE);
    CHECK(classify(g, g, Termination::Timeout) == Label::DUE);
  }
  SUBCASE("shape mismatch is a contract error") {
    Tensor f({2, 4});
    CHECK_THROWS_AS(classify(g, f, Termination::Completed), Error);
  }
  SUBCASE("bitwise-Masked soundness: epsilon-free comparison") {
    Tensor f = g;
    f.data[0] = std::nextafter(f.data[0], 1.0f);  // one ulp
    CHECK(classify(g, f, Termination::Completed) == Label::SafeSDC);
  }
}

TEST_CASE("relative accuracy degradation") {
  // golden 98.00%, faulty 86.20%: (0.98 - 0.862) / 0.98 = 0.12041 to 5 s.f.
  CHECK(rad(0.98, 0.862) == doctest::Approx(0.12041).epsilon(1e-4));
  CHECK(rad(0.75, 0.75) == 0.0);
  CHECK(rad(0.8, 0.0) == 1.0);
  CHECK(rad(0.5, 0.6) < 0.0);  // improvement recorded, not clamped
  CHECK_THROWS_AS(rad(0.0, 0.5), Error);
}

TEST_CASE("BER bridge construction") {
  auto mk = [](double ber, uint64_t uses) {
    RunOutcome o;
    o.induced_ber = ber;
    o.uses = uses;
    o.excitations = static_cast<uint64_t>(ber * uses);
    return o;
  };

  SUBCASE("range over outcomes, samples inside") {
    std::vector<RunOutcome> v = {mk(0.001, 100), mk(0.004, 100), mk(0.01, 100)};
    BerBridge b = build_ber_bridge(v, 7);
    CHECK(b.ber_min == 0.001);
    CHECK(b.ber_max == 0.01);
    for (double s : b.samples) {
      CHECK(s >= b.ber_min);
      CHECK(s <= b.ber_max);
    }
  }
  SUBCASE("degenerate range") {
    std::vector<RunOutcome> v = {mk(0.002, 50)};
    BerBridge b = build_ber_bridge(v, 7);
    for (double s : b.samples) CHECK(s == 0.002);
  }
  SUBCASE("zero lower end floors at the smallest positive BER") {
    std::vector<RunOutcome> v = {mk(0.0, 10), mk(1e-6, 10), mk(1e-5, 10)};
    BerBridge b = build_ber_bridge(v, 7);
    CHECK(b.ber_min == 0.0);
    for (double s : b.samples) {
      CHECK(s >= 1e-6);
      CHECK(s <= 1e-5);
    }
  }
  SUBCASE("seeded determinism") {
    std::vector<RunOutcome> v = {mk(1e-6, 10), mk(2e-4, 10)};
    BerBridge a = build_ber_bridge(v, 9);
    BerBridge b = build_ber_bridge(v, 9);
    BerBridge c = build_ber_bridge(v, 10);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
  }
  SUBCASE("latent sites are excluded; all-latent errors") {
    std::vector<RunOutcome> v = {mk(0.5, 0)};
    v[0].uses = 0;
    CHECK_THROWS_AS(build_ber_bridge(v, 1), Error);
    v.push_back(mk(0.003, 10));
    BerBridge b = build_ber_bridge(v, 1);
    CHECK(b.ber_min == 0.003);
  }
}

TEST_CASE("aggregate distributions") {
  using L = Label;
  SUBCASE("one of each -> 25/25/25/25") {
    Distribution d = aggregate({L::Masked, L::SafeSDC, L::CriticalSDC, L::DUE});
    CHECK(d.masked_pct == 25.0);
    CHECK(d.safe_sdc_pct == 25.0);
    CHECK(d.critical_sdc_pct == 25.0);
    CHECK(d.due_pct == 25.0);
  }
  SUBCASE("all masked -> 100/0/0/0") {
    Distribution d = aggregate({L::Masked, L::Masked, L::Masked});
    CHECK(d.masked_pct == 100.0);
    CHECK(d.due_pct == 0.0);
  }
  SUBCASE("percentages always sum to 100") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Label> labels;
      const size_t n = 1 + rng.below(500);
      for (size_t i = 0; i < n; ++i)
        labels.push_back(static_cast<Label>(rng.below(4)));
      Distribution d = aggregate(labels);
      CHECK(d.masked_pct + d.safe_sdc_pct + d.critical_sdc_pct + d.due_pct ==
            doctest::Approx(100.0).epsilon(1e-9));
    }
  }
  SUBCASE("merge of partitions equals aggregate of the union") {
    Rng rng(5);
    std::vector<Label> all;
    for (int i = 0; i < 300; ++i) all.push_back(static_cast<Label>(rng.below(4)));
    Distribution whole = aggregate(all);
    // recombine counts from two partitions
    std::vector<Label> a(all.begin(), all.begin() + 120), b(all.begin() + 120, all.end());
    Distribution da = aggregate(a), db = aggregate(b);
    const double merged_critical =
        (da.critical_sdc_pct * da.runs + db.critical_sdc_pct * db.runs) / (da.runs + db.runs);
    CHECK(merged_critical == doctest::Approx(whole.critical_sdc_pct).epsilon(1e-9));
  }
  SUBCASE("empty errors") {
    CHECK_THROWS_AS(aggregate({}), Error);
  }
}

TEST_CASE("CSV rows and BER bins") {
  CHECK(ber_bin_of(0.0) == "[0,1e-6)");
  CHECK(ber_bin_of(9.9e-7) == "[0,1e-6)");
  CHECK(ber_bin_of(1e-6) == "[1e-6,1e-5]");
  CHECK(ber_bin_of(1e-5) == "[1e-6,1e-5]");
  CHECK(ber_bin_of(2e-5) == "(1e-5,inf)");

  std::vector<DistributionRow> rows = {
      {"isa", "regs", "lenet", "baseline", {50, 25, 20, 5, 40}}};
  const std::string csv = distribution_csv(rows);
  CHECK(csv.find("injector,target,model,hardening") != std::string::npos);
  CHECK(csv.find("isa,regs,lenet,baseline,50,25,20,5,40") != std::string::npos);

  std::vector<AccuracyRow> acc = {{"lenet", "ranger", "fus", "[0,1e-6)", 0.9542, 12}};
  const std::string acsv = accuracy_csv(acc);
  CHECK(acsv.find("lenet,ranger,fus,[0,1e-6),0.9542,12") != std::string::npos);
}

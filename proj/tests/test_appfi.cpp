#include <doctest.h>

#include <bit>
#include <cmath>
#include <set>

#include "fsnn/appfi.hpp"
#include "fsnn/rng.hpp"

using namespace fsnn;
using fsnn::app::AppFaultSpec;

namespace {

uint64_t hamming_params(const Model& a, const Model& b) {
  uint64_t d = 0;
  for (size_t li = 0; li < a.layers.size(); ++li) {
    auto count = [&](const Tensor& x, const Tensor& y) {
      for (size_t i = 0; i < x.numel(); ++i) {
        d += static_cast<uint64_t>(__builtin_popcount(std::bit_cast<uint32_t>(x[i]) ^
                                                      std::bit_cast<uint32_t>(y[i])));
      }
    };
    count(a.layers[li].weight, b.layers[li].weight);
    count(a.layers[li].bias, b.layers[li].bias);
  }
  return d;
}

Dataset eval_ds(uint32_t n, uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.images = Tensor({n, 1, 28, 28});
  for (auto& v : ds.images.data) v = static_cast<float>(rng.uniform(0, 1));
  ds.labels.resize(n);
  for (auto& l : ds.labels) l = static_cast<uint32_t>(rng.below(10));
  ds.class_count = 10;
  return ds;
}

}  // namespace

TEST_CASE("stat_sample_size matches the closed form") {
  CHECK(app::stat_sample_size(1000000, 0.95, 0.01, 0.5) == 9513);
  CHECK(app::stat_sample_size(100, 0.95, 0.05, 0.5) == 80);
  // huge margin -> a single run suffices
  CHECK(app::stat_sample_size(1000000, 0.95, 0.99, 0.5) == 1);
  // monotone nonincreasing in the margin
  uint64_t prev = UINT64_MAX;
  for (double e : {0.001, 0.005, 0.01, 0.05, 0.1, 0.5}) {
    const uint64_t n = app::stat_sample_size(100000, 0.95, e, 0.5);
    CHECK(n <= prev);
    prev = n;
  }
  // sanity on the quantile itself
  CHECK(app::normal_quantile_two_sided(0.95) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(app::normal_quantile_two_sided(0.99) == doctest::Approx(2.575829).epsilon(1e-5));
}

TEST_CASE("single bit flip: sign bit of 1.0 gives -1.0; the golden model is untouched") {
  Model m;
  m.meta.input_shape = {2};
  m.meta.class_count = 2;
  m.layers.push_back(make_linear("fc", 2, 2));
  m.layers[0].weight.data = {1.0f, 0.0f, 0.0f, 1.0f};
  m.validate();
  const uint64_t golden_hash = m.weights_hash();

  Model faulty = app::flip_sites(m, {{0, 0, 0, 31}});
  CHECK(faulty.layers[0].weight.data[0] == -1.0f);
  CHECK(m.weights_hash() == golden_hash);
  // flipping again restores the original bits
  Model restored = app::flip_sites(faulty, {{0, 0, 0, 31}});
  CHECK(restored.weights_hash() == golden_hash);
}

TEST_CASE("MBF flip count is exact and distinct") {
  Model m;
  m.meta.input_shape = {1, 10, 10};
  m.meta.class_count = 10;
  m.layers.push_back(make_flatten("f"));
  m.layers.push_back(make_linear("fc", 100, 10));  // 1000 + 10 params = 32320 bits
  m.validate();
  const uint64_t population = app::weight_bit_population(m);
  CHECK(population == (100 * 10 + 10) * 32);

  AppFaultSpec spec;
  spec.target = app::Target::Weight;
  spec.mode = app::Mode::MBF;
  spec.seed = 9;

  SUBCASE("BER 0 rejected as below resolution") {
    spec.ber = 0.0;
    CHECK_THROWS_AS(app::flip_weight_bits(m, spec), Error);
    try {
      app::flip_weight_bits(m, spec);
    } catch (const Error& e) {
      CHECK(e.code() == Err::BerBelowResolution);
    }
  }
  SUBCASE("32000-bit population at BER 1e-3 flips exactly 32 distinct bits") {
    // trim to exactly 32000 bits: 1000 weights, drop the bias from the count
    // by using the real population and the matching BER
    spec.ber = 32.0 / static_cast<double>(population);
    auto [faulty, sites] = app::flip_weight_bits(m, spec);
    CHECK(sites.size() == 32);
    std::set<std::tuple<uint32_t, uint32_t, uint64_t, uint32_t>> uniq;
    for (const auto& s : sites) uniq.insert({s.layer, s.param, s.flat_index, s.bit});
    CHECK(uniq.size() == 32);
    CHECK(hamming_params(m, faulty) == 32);
  }
  SUBCASE("hamming distance equals round(BER * bits) over random specs") {
    Rng rng(15);
    for (int trial = 0; trial < 25; ++trial) {
      spec.ber = rng.uniform(0.5 / static_cast<double>(population), 2e-3);
      spec.seed = rng.next();
      const uint64_t k = static_cast<uint64_t>(
          std::llround(spec.ber * static_cast<double>(population)));
      if (k == 0) continue;
      auto [faulty, sites] = app::flip_weight_bits(m, spec);
      CHECK(hamming_params(m, faulty) == k);
      CHECK(sites.size() == k);
    }
  }
  SUBCASE("same seed, same sites") {
    spec.ber = 1e-3;
    auto a = app::flip_weight_bits(m, spec);
    auto b = app::flip_weight_bits(m, spec);
    REQUIRE(a.second.size() == b.second.size());
    for (size_t i = 0; i < a.second.size(); ++i) {
      CHECK(a.second[i].flat_index == b.second[i].flat_index);
      CHECK(a.second[i].bit == b.second[i].bit);
    }
  }
}

TEST_CASE("feature-map corruption: counts, involution, errors") {
  SUBCASE("BlER=1 NER=1 bit31 negates everything") {
    Tensor fm({3, 2, 2});
    for (auto& v : fm.data) v = 1.0f;
    Tensor out = app::corrupt_feature_map(fm, 1.0, 1.0, 31, 5);
    for (float v : out.data) CHECK(v == -1.0f);
  }
  SUBCASE("4x2x2 map, BlER 0.5, NER 0.25: two blocks, one neuron each") {
    Tensor fm({4, 2, 2});
    for (auto& v : fm.data) v = 1.0f;
    Tensor out = app::corrupt_feature_map(fm, 0.5, 0.25, 31, 7);
    size_t touched_blocks = 0, touched_total = 0;
    for (uint32_t b = 0; b < 4; ++b) {
      size_t t = 0;
      for (uint32_t i = 0; i < 4; ++i)
        if (out.data[b * 4 + i] != 1.0f) ++t;
      if (t) ++touched_blocks;
      touched_total += t;
    }
    CHECK(touched_blocks == 2);             // ceil(0.5 * 4)
    CHECK(touched_total == 2);              // ceil(0.25 * 4) = 1 neuron per block
  }
  SUBCASE("flipping twice restores the map bitwise") {
    Rng rng(21);
    Tensor fm({5, 3, 4});
    for (auto& v : fm.data) v = static_cast<float>(rng.uniform(-2, 2));
    Tensor once = app::corrupt_feature_map(fm, 0.6, 0.5, 12, 99);
    CHECK(!once.bitwise_equal(fm));
    Tensor twice = app::corrupt_feature_map(once, 0.6, 0.5, 12, 99);
    CHECK(twice.bitwise_equal(fm));
  }
  SUBCASE("bad arguments") {
    Tensor fm({2, 2, 2});
    CHECK_THROWS_AS(app::corrupt_feature_map(fm, 0.5, 0.5, 32, 1), Error);
    CHECK_THROWS_AS(app::corrupt_feature_map(fm, 0.0, 0.5, 3, 1), Error);
    CHECK_THROWS_AS(app::corrupt_feature_map(Tensor({4}), 0.5, 0.5, 3, 1), Error);
  }
}

TEST_CASE("run_app_campaign: sizing, distinct sites, no DUEs, determinism") {
  Model m = build_model("micro-conv", 41);
  Dataset ds = eval_ds(40, 3);

  AppFaultSpec spec;
  spec.target = app::Target::Weight;
  spec.mode = app::Mode::SBF;

  app::StatSizing sizing;
  sizing.margin = 0.2;  // tiny n for the unit test
  app::CampaignParams params;
  params.seed = 5;
  params.eval_subset = 20;

  auto outcomes = app::run_app_campaign(m, ds, spec, sizing, params);
  const uint64_t n_expected = app::stat_sample_size(app::weight_bit_population(m), 0.95,
                                                    0.2, 0.5);
  CHECK(outcomes.size() == n_expected);
  std::set<std::string> sites;
  for (const auto& o : outcomes) {
    CHECK(o.error.empty());
    CHECK(o.label != eval::Label::DUE);  // APP runs cannot DUE
    CHECK(o.termination == eval::Termination::Completed);
    sites.insert(o.sites);
  }
  CHECK(sites.size() == outcomes.size());  // distinct fault sites

  auto outcomes2 = app::run_app_campaign(m, ds, spec, sizing, params);
  REQUIRE(outcomes2.size() == outcomes.size());
  for (size_t i = 0; i < outcomes.size(); ++i) {
    CHECK(outcomes[i].sites == outcomes2[i].sites);
    CHECK(outcomes[i].label == outcomes2[i].label);
    CHECK(outcomes[i].acc_faulty == outcomes2[i].acc_faulty);
  }
}

TEST_CASE("MBF campaign: one record per BER with accuracies") {
  Model m = build_model("micro-conv", 41);
  Dataset ds = eval_ds(30, 4);
  AppFaultSpec spec;
  spec.target = app::Target::Weight;
  spec.mode = app::Mode::MBF;
  app::StatSizing sizing;
  app::CampaignParams params;
  params.seed = 6;
  params.eval_subset = 16;
  params.mbf_bers = {1e-4, 1e-3, 1e-2};
  auto outcomes = app::run_app_campaign(m, ds, spec, sizing, params);
  CHECK(outcomes.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(outcomes[i].app_ber == params.mbf_bers[i]);
    CHECK(outcomes[i].acc_faulty >= 0.0);
    CHECK(outcomes[i].acc_faulty <= 1.0);
  }
}

TEST_CASE("saturated classifier masks every mantissa-LSB weight flip") {
  // first layer drives a ReLU6 deep into saturation; one-ulp weight wiggles
  // vanish at the clamp, so confidences are bit-identical: 100% Masked.
  Model m;
  m.meta.input_shape = {1, 1, 4};
  m.meta.class_count = 2;
  m.layers.push_back(make_flatten("f"));
  m.layers.push_back(make_linear("sat", 4, 2));
  for (auto& w : m.layers[1].weight.data) w = 10.0f;
  m.layers[1].bias.data = {1.0f, 2.0f};
  m.layers.push_back(make_act("r6", LayerKind::ReLU6));
  m.layers.push_back(make_linear("head", 2, 2));
  m.layers[3].weight.data = {3.0f, 1.0f, 1.0f, 2.0f};
  m.validate();

  Dataset ds;
  ds.images = Tensor({8, 1, 1, 4});
  Rng rng(77);
  for (auto& v : ds.images.data) v = static_cast<float>(rng.uniform(0.5, 1.0));
  ds.labels.assign(8, 0);
  ds.class_count = 2;

  const ForwardResult golden = forward(m, ds.images);
  // brute force: every (first-layer weight, bit 0) flip stays Masked
  for (uint64_t i = 0; i < m.layers[1].weight.numel(); ++i) {
    Model faulty = app::flip_sites(m, {{1, 0, i, 0}});
    const ForwardResult f = forward(faulty, ds.images);
    CHECK(eval::classify(golden.confidences, f.confidences,
                         eval::Termination::Completed) == eval::Label::Masked);
  }
}

TEST_CASE("neuron targets all carry a channel dimension; free sampling never errors") {
  Model m = build_model("lenet-desk", 3);  // has rank-1 fc/relu outputs to exclude
  const auto shapes = m.layer_shapes();
  const auto eligible = app::neuron_target_layers(m);
  CHECK(!eligible.empty());
  for (uint32_t li : eligible) CHECK(shapes[li].size() >= 3);

  Dataset ds = eval_ds(10, 77);
  app::AppFaultSpec spec;
  spec.target = app::Target::Neuron;
  spec.bler = 0.3;
  spec.ner = 0.3;
  spec.bit = 12;
  app::CampaignParams params;
  params.seed = 31;
  params.eval_subset = 5;
  params.neuron_runs = 20;
  for (const auto& o : app::run_app_campaign(m, ds, spec, {}, params))
    CHECK(o.error.empty());
}

TEST_CASE("neuron campaign honors the layer filter and stays DUE-free") {
  Model m = build_model("micro-conv", 43);
  Dataset ds = eval_ds(24, 8);
  AppFaultSpec spec;
  spec.target = app::Target::Neuron;
  spec.bler = 0.5;
  spec.ner = 0.5;
  spec.bit = 30;
  spec.layer_filter = 1;  // conv output
  app::StatSizing sizing;
  app::CampaignParams params;
  params.seed = 12;
  params.eval_subset = 12;
  params.neuron_runs = 10;
  auto outcomes = app::run_app_campaign(m, ds, spec, sizing, params);
  CHECK(outcomes.size() == 10);
  size_t not_masked = 0;
  for (const auto& o : outcomes) {
    CHECK(o.error.empty());
    CHECK(o.label != eval::Label::DUE);
    CHECK(o.fault.find("layer=1") != std::string::npos);
    not_masked += o.label != eval::Label::Masked;
  }
  CHECK(not_masked > 0);  // bit 30 on a conv FM is loud
}

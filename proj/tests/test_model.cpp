#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;
using sktest::make_instance;

TEST(Units, RoundTripsLargeIntegers) {
  Units big = ipow(Units{1000}, 12);
  EXPECT_EQ(parse_units(to_string(big)), big);
  EXPECT_EQ(to_string(Units{-42}), "-42");
  EXPECT_THROW(parse_units("12x"), std::invalid_argument);
  EXPECT_THROW(parse_units("999999999999999999999999999999999999999999"), std::out_of_range);
}

TEST(DiscreteDist, MergesSortsAndDropsZeroAtoms) {
  DiscreteDist d({{5, 0.25}, {1, 0.5}, {5, 0.25}, {3, 0.0}});
  ASSERT_EQ(d.support(), 2u);
  EXPECT_EQ(d.atoms()[0].size, 1);
  EXPECT_DOUBLE_EQ(d.atoms()[1].prob, 0.5);
  EXPECT_DOUBLE_EQ(d.prob_at_most(4), 0.5);
}

TEST(DiscreteDist, RejectsBadInput) {
  EXPECT_THROW(DiscreteDist(std::vector<Atom>{}), std::invalid_argument);
  EXPECT_THROW(DiscreteDist({{1, 0.5}}), std::invalid_argument);
  EXPECT_THROW(DiscreteDist({{-1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(DiscreteDist({{1, -0.5}, {2, 1.5}}), std::invalid_argument);
}

TEST(Instance, FoldsOversizedAtoms) {
  auto inst = make_instance({{1.0, {{3, 0.5}, {11, 0.25}, {40, 0.25}}}}, 10, Variant::Risky);
  auto atoms = inst.item(0).dist.atoms();
  ASSERT_EQ(atoms.size(), 2u);
  EXPECT_EQ(atoms[1].size, 20);
  EXPECT_DOUBLE_EQ(atoms[1].prob, 0.5);
}

TEST(ItemStats, EffectiveValueAndTruncatedMean) {
  // Size 0.2 w.p. 1/2, 0.6 w.p. 1/4, 1.5 w.p. 1/4.
  auto inst = make_instance({{2.0, {{2, 0.5}, {6, 0.25}, {15, 0.25}}}}, 10, Variant::Risky);
  auto s = derive_stats(inst)[0];
  EXPECT_DOUBLE_EQ(s.effective_value, 1.5);
  EXPECT_NEAR(s.mean_truncated_size, 0.1 + 0.15 + 0.25, 1e-15);
  EXPECT_NEAR(s.density, 3.0, 1e-12);
}

TEST(ItemStats, ZeroSizeItemHasInfiniteDensity) {
  auto inst = make_instance({{1.0, {{0, 1.0}}}, {0.0, {{0, 1.0}}}}, 10, Variant::Risky);
  auto st = derive_stats(inst);
  EXPECT_TRUE(std::isinf(st[0].density));
  EXPECT_EQ(st[1].density, 0.0);
}

TEST(GreedyOrder, DensityThenIndex) {
  auto inst = make_instance({{1.0, {{5, 1.0}}},   // density 2
                             {0.0, {{1, 1.0}}},   // worthless
                             {3.0, {{5, 1.0}}},   // density 6
                             {1.0, {{0, 1.0}}},   // free
                             {2.0, {{10, 1.0}}}}, // density 2
                            10, Variant::Risky);
  std::vector<ItemId> want{3, 2, 0, 4, 1};
  EXPECT_EQ(greedy_order(inst), want);
}

TEST(SmallLarge, PartitionAtThreshold) {
  auto inst = make_instance({{1.0, {{1, 1.0}}}, {1.0, {{2, 1.0}}}, {1.0, {{3, 1.0}}}}, 10, Variant::Risky);
  auto p = classify_small_large(inst, 0.2);
  EXPECT_EQ(p.small, (std::vector<ItemId>{0, 1}));
  EXPECT_EQ(p.large, (std::vector<ItemId>{2}));
  EXPECT_THROW(classify_small_large(inst, 1.0), std::invalid_argument);
}

TEST(Io, InstanceJsonRoundTrip) {
  auto inst = sktest::random_instance(7, 5, Variant::NonRisky);
  auto back = instance_from_json(instance_to_json(inst));
  ASSERT_EQ(back.size(), inst.size());
  EXPECT_EQ(back.scale(), inst.scale());
  EXPECT_EQ(back.variant(), Variant::NonRisky);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    EXPECT_DOUBLE_EQ(back.item(i).value, inst.item(i).value);
    EXPECT_EQ(back.item(i).dist.support(), inst.item(i).dist.support());
  }
  EXPECT_EQ(fingerprint(back), fingerprint(inst));
}

TEST(Io, FingerprintSeesVariant) {
  auto inst = sktest::random_instance(7, 4);
  EXPECT_NE(fingerprint(inst), fingerprint(inst.with_variant(Variant::NonRisky)));
}

TEST(Io, RejectsMalformedInstances) {
  using json = nlohmann::json;
  EXPECT_THROW(instance_from_json(json::object()), std::exception);
  json j = instance_to_json(sktest::random_instance(1, 2));
  j["items"][0]["atoms"] = json::array({json::array({1})});
  EXPECT_THROW(instance_from_json(j), std::invalid_argument);
}

TEST(Io, RoundSigKeepsTwelveDigits) {
  nlohmann::json j = {{"a", 1.0 / 3.0}, {"b", {0.1 + 0.2}}, {"c", 7}};
  auto r = round_sig(j);
  EXPECT_EQ(r["a"].get<double>(), 0.333333333333);
  EXPECT_EQ(r["b"][0].get<double>(), 0.3);
  EXPECT_EQ(r["c"].get<int>(), 7);
}

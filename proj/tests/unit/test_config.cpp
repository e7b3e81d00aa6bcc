#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "uzmm/config.hpp"
#include "uzmm/csv.hpp"

using namespace uzmm;

namespace {

const char* kBaseline = R"(
[market]
horizon = 3600
volatility = 0.005
tick = 0.01
zone_ratio = 0.2   ; relative zone size

[preferences]
risk_aversion = 1
inventory_cap = 50
volume_steps = 100
ask_cap = 100
bid_cap = 100

[intensity.ask]
type = affine
a = 10
b = 0.1

[intensity.bid]
type = affine
a = 10
b = 0.1

[measure.ask]
type = power_law
decay = 0.9

[measure.bid]
type = power_law
decay = 0.9

[penalty]
type = quadratic
coefficient = 0.001
)";

std::string message_of(const ConfigDocument& doc) {
  try {
    build_model(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, BuildsBaselineModel) {
  const auto model = build_model(ConfigDocument::from_string(kBaseline));
  EXPECT_DOUBLE_EQ(model.params.zone_ratio, 0.2);
  EXPECT_NEAR(model.params.ybar(), 0.007, 1e-15);
  EXPECT_DOUBLE_EQ(model.params.volume_step(), 0.5);
  EXPECT_EQ(model.ask_measure.atoms().size(), 101u);
  EXPECT_NEAR(model.ask_intensity(0, 0.005), 0.15, 1e-15);
  EXPECT_DOUBLE_EQ(model.penalty(50), 2.5);
}

TEST(Config, MissingSectionIsNamed) {
  std::string text = kBaseline;
  text = text.substr(0, text.find("[penalty]"));
  const auto msg = message_of(ConfigDocument::from_string(text));
  EXPECT_NE(msg.find("[penalty]"), std::string::npos) << msg;
}

TEST(Config, MissingKeyAndBadNumberAreNamed) {
  auto doc = ConfigDocument::from_string(kBaseline);
  doc.set("market", "tick", "one cent");
  EXPECT_NE(message_of(doc).find("tick"), std::string::npos);
  doc.set("market", "tick", "0.01");
  doc.set("preferences", "volume_steps", "2.5");
  EXPECT_NE(message_of(doc).find("integer"), std::string::npos);
  auto missing = ConfigDocument::from_string("[market]\nhorizon = 1\n");
  EXPECT_NE(message_of(missing).find("volatility"), std::string::npos);
}

TEST(Config, RejectsOutOfRangeEta) {
  auto doc = ConfigDocument::from_string(kBaseline);
  doc.set("market", "zone_ratio", "0.5");
  EXPECT_NE(message_of(doc).find("eta out of range"), std::string::npos);
}

TEST(Config, DegenerateAndAtomMeasures) {
  auto doc = ConfigDocument::from_string(kBaseline);
  doc.set("measure.ask", "type", "degenerate");
  doc.set("measure.bid", "type", "atoms");
  doc.set("measure.bid", "volumes", "0, 50, 100");
  doc.set("measure.bid", "masses", "0.5, 0.25, 0.25");
  const auto model = build_model(doc);
  EXPECT_TRUE(model.ask_measure.degenerate());
  EXPECT_EQ(model.bid_measure.atoms().size(), 3u);
  doc.set("measure.bid", "masses", "0.5, 0.25");
  EXPECT_THROW(build_model(doc), ValidationError);
}

TEST(Config, CanonicalTextRoundTrips) {
  const auto doc = ConfigDocument::from_string(kBaseline);
  const auto again = ConfigDocument::from_string(doc.to_string());
  EXPECT_EQ(doc.sections(), again.sections());
  EXPECT_EQ(again.get_string("market", "zone_ratio"), "0.2");
}

TEST(Config, NumbersRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) * std::pow(10.0, k % 20 - 10);
    EXPECT_EQ(parse_number(format_number(x)), x);
  }
  EXPECT_THROW(parse_number("1.5x"), ValidationError);
  EXPECT_THROW(parse_number(""), ValidationError);
  EXPECT_DOUBLE_EQ(parse_number(" +2e-3 "), 0.002);
}

TEST(Csv, RoundTripWithMissingValues) {
  const auto path = std::filesystem::temp_directory_path() / "uzmm_csv_roundtrip.csv";
  {
    CsvWriter out(path, {"y", "Q", "I"});
    out.row({0.1, -3.0, 1.0 / 3});
    out.row(std::vector<std::optional<double>>{0.2, 4.0, std::nullopt});
    EXPECT_THROW(out.row({1.0}), std::logic_error);
  }
  const auto table = read_csv(path);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.column("I"), 2u);
  EXPECT_EQ(*table.rows[0][2], 1.0 / 3);
  EXPECT_FALSE(table.rows[1][2].has_value());
  EXPECT_THROW(table.column("W"), std::out_of_range);
  std::filesystem::remove(path);
}

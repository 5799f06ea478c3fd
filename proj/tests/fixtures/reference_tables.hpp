#pragma once

// Reference confusion matrices from the published evaluation that this
// implementation reproduces, used as regression fixtures for the metric
// arithmetic. `printed` values carry the rounding of the original report
// (three decimals), so comparisons must allow for that quantization.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fixtures {

struct PrintedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Nine-class axis shared by all hold-one-out tables. In table k the class at
// index `unknown_slot` was excluded from training and its slot relabeled
// "unknown" for the open-set decision.
inline constexpr std::array<std::string_view, 9> kHoldOneOutAxis = {
    "Amazon Echo",
    "Samsung SmartCam",
    "Belkin Wemo switch",
    "Netatmo Welcome",
    "Insteon camera",
    "Withings Aura smart sleep sensor",
    "Netatmo weather station",
    "PIX-STAR photoframe",
    "Belkin Wemo motion sensor",
};

struct HoldOneOutTable {
  std::size_t unknown_slot = 0;
  std::array<std::array<std::uint64_t, 9>, 9> counts{};  // rows actual, cols predicted
  std::array<PrintedMetrics, 9> printed{};
  PrintedMetrics printed_weighted{};
};

inline constexpr std::array<HoldOneOutTable, 9> kHoldOneOutTables = {{
    // Unknown: slot 0
    {0,
     {{{802, 4, 0, 0, 0, 0, 0, 0, 7},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {1, 0, 0, 306, 0, 0, 0, 0, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {7, 0, 0, 0, 0, 0, 0, 626, 0},
       {52, 0, 0, 0, 0, 0, 0, 0, 3415}}},
     {{{0.93, 0.986, 0.958},
       {0.988, 1, 0.994},
       {1, 1, 1},
       {1, 0.997, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 0.989, 0.994},
       {0.998, 0.985, 0.991}}},
     {0.99, 0.989, 0.989}},
    // Unknown: slot 1
    {1,
     {{{812, 1, 0, 0, 0, 0, 0, 0, 0},
       {0, 250, 0, 0, 0, 0, 0, 0, 73},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {0, 1, 0, 306, 0, 0, 0, 0, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 7, 0, 0, 0, 0, 0, 626, 0},
       {0, 52, 0, 0, 0, 0, 0, 0, 3415}}},
     {{{1, 0.999, 0.999},
       {0.804, 0.774, 0.789},
       {1, 1, 1},
       {1, 0.997, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 0.989, 0.994},
       {0.979, 0.985, 0.982}}},
     {0.979, 0.979, 0.979}},
    // Unknown: slot 2
    {2,
     {{{811, 0, 1, 0, 0, 0, 0, 0, 1},
       {0, 322, 1, 0, 0, 0, 0, 0, 0},
       {0, 2, 363, 0, 0, 0, 0, 0, 0},
       {0, 0, 1, 306, 0, 0, 0, 0, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 7, 0, 0, 0, 0, 626, 0},
       {0, 0, 33, 0, 0, 0, 0, 0, 3434}}},
     {{{1, 0.998, 0.999},
       {0.994, 0.997, 0.995},
       {0.894, 0.995, 0.942},
       {1, 0.997, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 0.989, 0.994},
       {1, 0.99, 0.995}}},
     {0.994, 0.993, 0.993}},
    // Unknown: slot 3
    {3,
     {{{813, 0, 0, 0, 0, 0, 0, 0, 0},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {2, 43, 0, 259, 0, 1, 0, 0, 2},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 7, 0, 0, 0, 626, 0},
       {0, 0, 0, 52, 0, 0, 0, 0, 3415}}},
     {{{0.998, 1, 0.999},
       {0.883, 1, 0.938},
       {1, 1, 1},
       {0.814, 0.844, 0.829},
       {1, 1, 1},
       {0.996, 1, 0.998},
       {1, 1, 1},
       {1, 0.989, 0.994},
       {0.999, 0.985, 0.992}}},
     {0.985, 0.983, 0.984}},
    // Unknown: slot 4
    {4,
     {{{812, 0, 0, 0, 1, 0, 0, 0, 0},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {0, 0, 0, 306, 1, 0, 0, 0, 0},
       {12, 15, 0, 0, 144, 0, 0, 37, 2},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 0, 1, 0, 0, 626, 6},
       {0, 0, 0, 0, 2, 0, 0, 0, 3465}}},
     {{{0.985, 0.999, 0.992},
       {0.956, 1, 0.977},
       {1, 1, 1},
       {1, 0.997, 0.998},
       {0.966, 0.686, 0.802},
       {1, 1, 1},
       {1, 1, 1},
       {0.944, 0.989, 0.966},
       {0.998, 0.999, 0.999}}},
     {0.988, 0.988, 0.987}},
    // Unknown: slot 5
    {5,
     {{{813, 0, 0, 0, 0, 0, 0, 0, 0},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {0, 0, 0, 307, 0, 0, 0, 0, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 239, 0, 0, 3},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 0, 0, 0, 0, 626, 7},
       {0, 0, 0, 0, 0, 0, 0, 0, 3467}}},
     {{{1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 0.988, 0.994},
       {1, 1, 1},
       {1, 0.989, 0.994},
       {0.997, 1, 0.999}}},
     {0.998, 0.998, 0.998}},
    // Unknown: slot 6
    {6,
     {{{813, 0, 0, 0, 0, 0, 0, 0, 0},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 365, 0, 0, 0, 0, 0, 0},
       {0, 0, 0, 306, 0, 0, 1, 0, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 0, 0, 0, 1, 626, 6},
       {0, 0, 0, 0, 0, 0, 3, 0, 3464}}},
     {{{1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {1, 0.997, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {0.952, 1, 0.976},
       {1, 0.989, 0.994},
       {0.998, 0.999, 0.999}}},
     {0.998, 0.998, 0.998}},
    // Unknown: slot 7
    {7,
     {{{812, 0, 0, 0, 0, 0, 0, 1, 0},
       {0, 323, 0, 0, 0, 0, 0, 0, 0},
       {0, 0, 364, 0, 0, 0, 0, 1, 0},
       {0, 0, 0, 306, 0, 0, 0, 1, 0},
       {0, 0, 0, 0, 210, 0, 0, 0, 0},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 0, 0, 0, 0, 622, 11},
       {0, 0, 0, 0, 0, 0, 0, 0, 3467}}},
     {{{1, 0.999, 0.999},
       {1, 1, 1},
       {1, 0.997, 0.999},
       {1, 0.997, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {1, 1, 1},
       {0.995, 0.983, 0.989},
       {0.997, 1, 0.998}}},
     {0.998, 0.998, 0.998}},
    // Unknown: slot 8
    {8,
     {{{810, 0, 0, 0, 0, 0, 0, 0, 3},
       {0, 322, 0, 0, 0, 0, 0, 0, 1},
       {0, 0, 364, 0, 0, 0, 0, 0, 1},
       {0, 0, 0, 306, 0, 0, 0, 0, 1},
       {0, 0, 0, 0, 209, 0, 0, 0, 1},
       {0, 0, 0, 0, 0, 242, 0, 0, 0},
       {0, 0, 0, 0, 0, 0, 100, 0, 0},
       {0, 0, 0, 0, 0, 0, 0, 633, 0},
       {0, 0, 0, 0, 0, 0, 0, 55, 3412}}},
     {{{1, 0.996, 0.998},
       {1, 0.997, 0.998},
       {1, 0.997, 0.999},
       {1, 0.997, 0.998},
       {1, 0.995, 0.998},
       {1, 1, 1},
       {1, 1, 1},
       {0.92, 1, 0.958},
       {0.998, 0.984, 0.991}}},
     {0.991, 0.99, 0.991}},
}};

// Ten-class identification test matrix and its reported overall accuracy.
inline constexpr std::array<std::string_view, 10> kIdentifyAxis = {
    "Non-IoT devices",
    "Amazon Echo",
    "Samsung SmartCam",
    "Belkin Wemo switch",
    "Netatmo Welcome",
    "Insteon camera",
    "Withings Aura smart sleep sensor",
    "Netatmo weather station",
    "PIX-STAR photoframe",
    "Belkin Wemo motion sensor",
};

inline constexpr std::array<std::array<std::uint64_t, 10>, 10> kIdentifyCounts = {{
    {2226, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {1, 812, 0, 0, 0, 0, 0, 0, 0, 0},
    {2, 0, 321, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 365, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 306, 1, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 210, 0, 0, 0, 0},
    {1, 0, 0, 0, 0, 0, 241, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 100, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 628, 5},
    {1, 0, 0, 0, 0, 0, 0, 0, 1, 3465},
}};

// Reported test-set accuracy for the ten-class identification run, percent.
inline constexpr double kIdentifyReportedAccuracyPct = 99.86;

}  // namespace fixtures

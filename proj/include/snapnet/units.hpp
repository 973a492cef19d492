#pragma once

#include <numbers>

// SI internally. External interfaces speak mbar, mL/uL and mm.
namespace snapnet::units {

inline constexpr double kAtmosphere = 101325.0;    // Pa
inline constexpr double kAirViscosity = 1.81e-5;   // Pa s, 20 C
inline constexpr double kBodyLength = 0.025;       // m

inline constexpr double kPascalPerMbar = 100.0;
inline constexpr double kCubicMetrePerMl = 1e-6;
inline constexpr double kCubicMetrePerUl = 1e-9;
inline constexpr double kMetrePerMm = 1e-3;

constexpr double mbar(double v) { return v * kPascalPerMbar; }
constexpr double to_mbar(double pa) { return pa / kPascalPerMbar; }
constexpr double ml(double v) { return v * kCubicMetrePerMl; }
constexpr double to_ml(double m3) { return m3 / kCubicMetrePerMl; }
constexpr double ul(double v) { return v * kCubicMetrePerUl; }
constexpr double to_ul(double m3) { return m3 / kCubicMetrePerUl; }
constexpr double mm(double v) { return v * kMetrePerMm; }
constexpr double to_mm(double m) { return m / kMetrePerMm; }

// Support chamber under one dome: cylinder of the shell diameter and 3.5 mm depth.
inline constexpr double kShellDiameter = 10e-3;
inline constexpr double kChamberDepth = 3.5e-3;
inline constexpr double kDefaultChamberVolume =
    std::numbers::pi * (kShellDiameter / 2) * (kShellDiameter / 2) * kChamberDepth;

}  // namespace snapnet::units

#pragma once

namespace htev {

// Switch point between the power series and the Hankel asymptotic expansion.
inline constexpr double kBesselSwitch = 12.0;

double bessel_j1(double x);
double bessel_j1_series(double x);
double bessel_j1_asymptotic(double x);

// J1(2 sqrt(u)) / sqrt(u), equal to 1 at u = 0; entire in u
double bessel_j1_ratio(double u);

// |series - asymptotic| at the switch point, checked once at startup
double bessel_switch_gap();

}  // namespace htev

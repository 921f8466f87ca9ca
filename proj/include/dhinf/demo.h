#pragma once

#include "dhinf/model.h"

namespace dhinf::demo {

/// Three-state example plant (rank E = 2) with scalar uncertainty in A.
UncertainPlant Plant();

/// Published reference gains (1 x 3).
MatrixXd ReferenceGainK1();
MatrixXd ReferenceGainK2();

/// Published figures for the example.
inline constexpr double kOpenLoopSpectralRadius = 2.5;
inline constexpr double kGammaMinAlpha0 = 1.9093;
inline constexpr double kGammaMinAlpha1000 = 1.1848;
inline constexpr double kK1RhoMin = 0.2473, kK1RhoMax = 0.3480, kK1Norm = 2.0089;
inline constexpr double kK2RhoMin = 0.4835, kK2RhoMax = 0.5008, kK2Norm = 1.1044;

}  // namespace dhinf::demo

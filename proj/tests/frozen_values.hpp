#pragma once

// Reference values produced by tests/oracle/derive.py (sympy / scipy).
namespace frozen {

inline constexpr double kFrontdoorN28 = 193721.0 / 109850.0;  // 1.7635047792444242
inline constexpr double kVarCN28 = 1.0 / 676.0;
inline constexpr double kVarAfN28 = 42.0 / 650.0;
inline constexpr double kIdealFrontdoorN100 = 3.2570304608155590;
inline constexpr double kIdealCombinedCase = 0.99498756211208903;
inline constexpr double kVeDefaultK05 = 59.68367419472183;
inline constexpr double kVeDefaultK03 = 52.06054300480074;
// Diagonal of the per-sample information at the default point, k = 0.5.
inline constexpr double kFimDefaultDiag[8] = {2.58712871e-01, 2.04759803e+02, 3.11639837e-01,
                                              7.04648526e-01, 4.88236961e-01, 2.90958050e-01,
                                              4.95074012e-01, 9.58294961e-02};

}  // namespace frozen

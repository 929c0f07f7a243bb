#pragma once

#include <array>

// Nickel-price dataset: SSE Composite Index, WTI crude oil, and the US
// dollar index as features; the UK nickel price as the regression target.
// Shipped verbatim as data/financial_train.csv and data/financial_test.csv.

namespace qkernel::embedded {

inline constexpr std::array<std::array<double, 4>, 40> kFinancialTrain = {{
    {3676.59, 68.35, 92.514, 19506},
    {3536.29, 74.83, 94.353, 18342},
    {3581.73, 69.29, 92.033, 19789},
    {3272.00, 96.35, 106.804, 21613},
    {3547.34, 83.57, 94.121, 19448},
    {3228.06, 97.59, 107.911, 19802},
    {3607.43, 66.26, 96.114, 20030},
    {3387.64, 108.43, 104.909, 21824},
    {3067.76, 108.26, 103.802, 30114},
    {3253.69, 112.12, 98.499, 31583},
    {3662.60, 70.46, 92.614, 19623},
    {3489.15, 92.10, 96.188, 24396},
    {3047.06, 104.69, 103.230, 31771},
    {3567.10, 68.59, 92.449, 19332},
    {3693.13, 68.14, 92.48, 20190},
    {3579.54, 78.90, 95.722, 20734},
    {3562.70, 69.95, 96.338, 20141},
    {3186.27, 94.42, 106.104, 22492},
    {3429.58, 91.32, 95.392, 23398},
    {3607.09, 72.61, 92.919, 19401},
    {3518.42, 82.81, 93.326, 19574},
    {3613.97, 71.97, 93.176, 19358},
    {3609.86, 83.76, 93.809, 20306},
    {3593.15, 82.96, 93.728, 20050},
    {3275.76, 97.26, 106.331, 21700},
    {3409.21, 111.76, 104.261, 23158},
    {3555.26, 82.12, 94.775, 22176},
    {3597.43, 82.64, 94.901, 22064},
    {3284.83, 120.67, 104.151, 27264},
    {3613.07, 73.98, 93.335, 19387},
    {3625.13, 71.12, 96.489, 19615},
    {3558.28, 81.31, 93.961, 19294},
    {3189.04, 88.54, 105.566, 22210},
    {3167.13, 94.29, 99.924, 32483},
    {3516.30, 68.44, 92.512, 19656},
    {3582.08, 76.75, 96.544, 20336},
    {3524.74, 69.09, 93.038, 19678},
    {3522.16, 68.74, 92.694, 19011},
    {3576.89, 65.57, 96.024, 19946},
    {3637.57, 72.36, 95.881, 20230},
}};

inline constexpr std::array<std::array<double, 4>, 40> kFinancialTest = {{
    {3561.76, 80.44, 94.080, 18918},
    {3582.60, 83.76, 93.625, 19739},
    {3569.91, 85.43, 95.723, 22073},
    {3477.13, 65.64, 92.971, 18893},
    {2928.51, 98.54, 101.769, 32636},
    {3675.19, 69.30, 92.650, 19713},
    {3186.43, 114.67, 101.766, 28392},
    {3498.54, 80.86, 93.853, 19162},
    {3642.22, 73.30, 93.03, 19351},
    {3146.86, 110.29, 102.097, 27732},
    {3054.99, 106.13, 104.897, 27810},
    {3398.62, 105.76, 104.464, 22698},
    {3238.95, 121.51, 103.218, 28023},
    {3546.94, 80.64, 94.519, 18978},
    {3225.64, 106.95, 100.326, 33175},
    {3675.02, 72.38, 96.015, 19624},
    {3582.83, 75.45, 93.381, 18946},
    {3462.31, 95.72, 96.694, 24282},
    {3130.24, 115.07, 101.698, 28284},
    {3320.15, 104.27, 104.192, 24038},
    {3004.14, 103.09, 103.689, 28185},
    {3271.03, 114.93, 98.615, 32380},
    {3446.98, 66.59, 93.145, 19193},
    {3282.72, 99.27, 98.627, 33223},
    {3186.82, 104.25, 99.913, 32981},
    {3715.37, 70.45, 92.652, 19726},
    {3267.2, 106.19, 103.981, 24449},
    {3573.84, 66.50, 96.158, 19953},
    {3451.41, 91.59, 96.619, 24361},
    {3465.83, 93.66, 95.697, 23406},
    {3628.49, 72.23, 93.460, 19221},
    {3586.08, 79.46, 96.326, 20383},
    {3544.48, 84.05, 93.879, 19702},
    {3263.79, 122.11, 102.546, 28855},
    {3266.60, 107.82, 97.875, 32893},
    {3656.22, 72.61, 92.534, 20016},
    {3567.44, 81.22, 95.625, 21794},
    {3595.09, 72.05, 96.370, 20189},
    {3313.58, 104.09, 107.829, 21880},
    {3214.50, 105.96, 99.055, 32725},
}};

} // namespace qkernel::embedded

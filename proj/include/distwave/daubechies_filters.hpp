// Copyright 2026 The distwave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <span>

namespace distwave::detail {

// Daubechies orthonormal scaling filters h_0..h_{2N-1} (sum = sqrt(2)) for
// N = 1..8 vanishing moments, extremal-phase ordering.
inline constexpr std::array<double, 2> kDb1 = {0.7071067811865476, 0.7071067811865476};
inline constexpr std::array<double, 4> kDb2 = {0.48296291314453416, 0.8365163037378079,
                                               0.2241438680420134, -0.12940952255126037};
inline constexpr std::array<double, 6> kDb3 = {
    0.33267055295008263, 0.8068915093110925,   0.45987750211849154,
    -0.13501102001025458, -0.08544127388202666, 0.03522629188570953};
inline constexpr std::array<double, 8> kDb4 = {
    0.2303778133088965,   0.7148465705529157,  0.6308807679298589, -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764, 0.0328830116668852, -0.010597401785069032};
inline constexpr std::array<double, 10> kDb5 = {
    0.16010239797419293,  0.6038292697971896,    0.7243085284377729,
    0.13842814590132074,  -0.24229488706638203,  -0.032244869584638375,
    0.07757149384004572,  -0.006241490212798274, -0.012580751999081999,
    0.0033357252854737712};
inline constexpr std::array<double, 12> kDb6 = {
    0.11154074335010947,  0.49462389039845306,   0.7511339080210954,
    0.31525035170919763,  -0.22626469396543983,  -0.12976686756726194,
    0.09750160558732304,  0.027522865530305727,  -0.03158203931748603,
    0.0005538422011614961, 0.004777257510945511, -0.0010773010853084796};
inline constexpr std::array<double, 14> kDb7 = {
    0.07785205408500918,   0.3965393194819173,     0.7291320908462351,
    0.4697822874051931,    -0.14390600392856498,   -0.22403618499387498,
    0.07130921926683026,   0.08061260915108308,    -0.03802993693501441,
    -0.01657454163066688,  0.01255099855609984,    0.0004295779729213665,
    -0.0018016407040474908, 0.00035371379997452024};
inline constexpr std::array<double, 16> kDb8 = {
    0.05441584224310401,    0.31287159091429995,     0.6756307362972898,
    0.5853546836542067,     -0.015829105256349306,   -0.2840155429615469,
    0.0004724845739132828,  0.12874742662047847,     -0.017369301001807547,
    -0.044088253930794755,  0.013981027917398282,    0.008746094047405777,
    -0.004870352993451574,  -0.00039174037337694705, 0.0006754494064505693,
    -0.00011747678412476953};

inline constexpr int kMaxVanishingMoments = 8;

// Filter for N vanishing moments; empty span when N is out of range.
constexpr std::span<const double> daubechies_filter(int N) {
  switch (N) {
    case 1: return kDb1;
    case 2: return kDb2;
    case 3: return kDb3;
    case 4: return kDb4;
    case 5: return kDb5;
    case 6: return kDb6;
    case 7: return kDb7;
    case 8: return kDb8;
    default: return {};
  }
}

}  // namespace distwave::detail

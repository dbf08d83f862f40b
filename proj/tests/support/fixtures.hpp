#pragma once

#include <string>

#include "qdsr/dims.hpp"
#include "qdsr/harness.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr::test {

/// Two masses and two lengths over [M, L]; the target is an inverse length.
inline UnitTable fig1_units()
{
    return parse_unit_table("m1, 1, 0\n"
                            "m2, 1, 0\n"
                            "L1, 0, 1\n"
                            "L2, 0, 1\n"
                            "TARGET, 0, -1\n");
}

inline constexpr char const* fig1_tree_text = "(sin((m1 / m2) + A1)) / (L1 * ((A2 + (L1 / L2)) ** A3))";

/// Newtonian gravity over [M, L, T].
inline UnitTable newton_units()
{
    return parse_unit_table("G, -1, 3, -2\n"
                            "m1, 1, 0, 0\n"
                            "m2, 1, 0, 0\n"
                            "r, 0, 1, 0\n"
                            "TARGET, 1, 1, -2\n");
}

/// Gravity with one lumped mass product; dimensionally trivial.
inline UnitTable newton_trivial_units()
{
    return parse_unit_table("G, -1, 3, -2\n"
                            "mm, 2, 0, 0\n"
                            "r, 0, 1, 0\n"
                            "TARGET, 1, 1, -2\n");
}

/// One dimensionless variable x.
inline UnitTable scalar_units()
{
    return parse_unit_table("x, 0\nTARGET, 0\n");
}

/// One length x with a length target.
inline UnitTable length_units()
{
    return parse_unit_table("x, 1\nTARGET, 1\n");
}

inline std::vector<FeynmanTarget> const& feynman()
{
    static auto const targets = load_feynman_assets(feynman_asset_path());
    return targets;
}

} // namespace qdsr::test

#pragma once
#include <memory>
#include <string>

#include "certitight/liftprob.hpp"

namespace ct {

// Families: stereo1d, roloc-z, roloc-y, ppr, plr, stereo2d. For stereo2d,
// lifting_mode "u" selects the depth-only substitution (known not to tighten);
// the default "z" uses the combined substitution. d is consumed by the
// range-only families, whose variable dimensions are fixed per lifting object;
// the other families have intrinsic dimensions and ignore it.
std::unique_ptr<Lifting> make_lifting(const std::string& family,
                                      const std::string& lifting_mode = "",
                                      int d = 3);

// The frozen one-dimensional stereo instance used throughout the tests
// (two landmarks, two measurements, ground truth between the landmarks).
ProblemSetup stereo1d_fixture();

}  // namespace ct

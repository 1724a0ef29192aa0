#pragma once
#include <memory>

#include "certitight/liftprob.hpp"

namespace ct {

std::unique_ptr<Lifting> make_stereo1d();
std::unique_ptr<Lifting> make_roloc(bool y_mode, int d = 3);
std::unique_ptr<Lifting> make_registration(bool line_mode);  // ppr / plr
std::unique_ptr<Lifting> make_stereo2d(bool u_only);

}  // namespace ct

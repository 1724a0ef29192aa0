#include <stdexcept>

#include "certitight/problems.hpp"
#include "families.hpp"

namespace ct {

std::unique_ptr<Lifting> make_lifting(const std::string& family,
                                      const std::string& lifting_mode, int d) {
  if (family == "stereo1d") return make_stereo1d();
  if (family == "roloc-z") return make_roloc(false, d);
  if (family == "roloc-y") return make_roloc(true, d);
  if (family == "ppr") return make_registration(false);
  if (family == "plr") return make_registration(true);
  if (family == "stereo2d") return make_stereo2d(lifting_mode == "u");
  throw std::invalid_argument("unknown problem family '" + family + "'");
}

}  // namespace ct

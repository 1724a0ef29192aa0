#pragma once
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ct {

// Deterministic RNG used everywhere. All distribution transforms are spelled
// out here (instead of std::uniform_real_distribution etc.) so the draw
// sequence is pinned by this file alone, not by the standard library build.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // Derive an independent stream, e.g. one per worker or per sample batch.
  static Rng split(uint64_t seed, uint64_t stream) {
    // splitmix64 step keeps distinct streams decorrelated even for small seeds
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

  // uniform in [0,1) with 53 random bits
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u clamped away from 0 so log stays finite
    double u = uniform();
    if (u < 1e-300) u = 1e-300;
    double r = std::sqrt(-2.0 * std::log(u));
    double t = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  Eigen::VectorXd normal_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::VectorXd uniform_vec(int n, double a, double b) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(a, b);
    return v;
  }

  // Haar-uniform rotation: normalized 4-normal quaternion for d=3,
  // uniform angle for d=2.
  Eigen::MatrixXd rotation(int d) {
    if (d == 2) {
      double a = uniform(0.0, 2.0 * M_PI);
      Eigen::Matrix2d C;
      C << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
      return C;
    }
    Eigen::Vector4d q = normal_vec(4);
    q.normalize();
    double w = q[0], x = q[1], y = q[2], z = q[3];
    Eigen::Matrix3d C;
    C << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return C;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ct

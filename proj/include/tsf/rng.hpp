#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace tsf {

/// Channel identifiers for per-run noise streams.
enum class RngChannel : std::uint64_t { kInit = 0, kGyro = 1, kMag = 2, kPath = 3 };

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic stream keyed by (master_seed, stream_id, channel).
/// Distinct keys yield statistically independent generators, so runs and
/// Monte-Carlo paths can be drawn in any order or in parallel.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id, RngChannel channel,
            std::uint64_t sub_id = 0)
      : engine_(mix(master_seed, stream_id, static_cast<std::uint64_t>(channel), sub_id)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = normal();
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    std::uint64_t h = detail::splitmix64(a);
    h = detail::splitmix64(h ^ detail::splitmix64(b + 0x517cc1b727220a95ULL));
    h = detail::splitmix64(h ^ detail::splitmix64(c + 0x2545f4914f6cdd1dULL));
    h = detail::splitmix64(h ^ detail::splitmix64(d + 0x9e3779b97f4a7c15ULL));
    return h;
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace tsf

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace demorec {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr const char* kVersion = "0.1.0";

// Error codes shared with the C boundary (see include/demorec/demorec.h).
enum class Status : int {
  Ok = 0,
  InvalidArgument = 1,
  ShapeMismatch = 2,
  ParseError = 3,
  IoError = 4,
  NotFinite = 5,
  EmptyGraph = 6,
  InternalError = 7,
};

class Error : public std::runtime_error {
public:
  Error(Status code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Status code() const { return code_; }

private:
  Status code_;
};

inline void require(bool cond, Status code, const std::string& msg) {
  if (!cond) throw Error(code, msg);
}

// Stateless seed mixer (splitmix64). Used to derive independent stream
// seeds from (base_seed, stream_id) so that adding a consumer never
// perturbs the draws of another.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

inline Matrix gaussian_matrix(Index rows, Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

// Glorot/Xavier uniform: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_matrix(Index rows, Index cols, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace demorec

// Counter-based random number streams.
//
// A stream is identified by (seed, stream_id). Draw n is a pure function of
// the pair and of n, so sequences are reproducible bit for bit regardless of
// how draws from different streams interleave. That property is what lets
// filters assign one stream per mixand (or per purpose) and still produce
// byte-identical output whether mixands run sequentially or in parallel.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string_view>

namespace igsf {

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1).
  double uniform();

  // Standard normal via Box-Muller (cosine branch); consumes two uniforms.
  double normal();

  Eigen::VectorXd normals(int n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// FNV-1a 64-bit hash of a tag string. Used to derive stream ids from
// human-readable purpose tags such as "run=3/filter=enkf/perturb". The hash
// is fixed by this implementation and never changes across platforms, so a
// documented tag always maps to the same stream.
std::uint64_t stream_tag(std::string_view tag);

}  // namespace igsf

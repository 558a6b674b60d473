#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string_view>
#include <vector>

namespace evseg {

// Per-location quantities are stored column-wise: a G-location frame of
// M-dim vectors is an M x G matrix, column g = location g.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Zeroed copy of any weights struct exposing tensors().
template <class Weights>
Weights zeros_like(const Weights& w) {
  Weights out = w;
  for (Matrix* t : out.tensors()) t->setZero();
  return out;
}

/// value, gradient and both Adam moments for one weights struct.
template <class Weights>
struct Trainable {
  Weights value;
  Weights grad;
  Weights first_moment;
  Weights second_moment;

  Trainable() = default;
  explicit Trainable(Weights init)
      : value(std::move(init)),
        grad(zeros_like(value)),
        first_moment(zeros_like(value)),
        second_moment(zeros_like(value)) {}
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace evseg

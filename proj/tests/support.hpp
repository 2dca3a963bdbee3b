#pragma once

#include "fracdiff/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

namespace fracdiff::testing {

/// Desk-scale 1-D layout: Omega = (-1, 1), L = 4, two-sided windows.
inline GridSpec desk_spec(double h = 1.0 / 32.0) {
  GridSpec g;
  g.spacing = h;
  g.control = {"W1", {Ball::interval(1.05, 2.0), Ball::interval(-2.0, -1.05)}};
  g.observation = {"W2", {Ball::interval(2.05, 3.5), Ball::interval(-3.5, -2.05)}};
  return g;
}

/// Small 2-D layout: unit disk in [-2, 2]^2 with two disjoint window disks.
inline GridSpec disk_spec(double h = 0.25) {
  GridSpec g;
  g.dim = 2;
  g.half_width = 2.0;
  g.spacing = h;
  g.omega = Ball{{0.0, 0.0}, 1.0};
  g.control = {"W1", {Ball{{1.5, 1.5}, 0.4}}};
  g.observation = {"W2", {Ball{{-1.5, -1.5}, 0.4}}};
  return g;
}

inline Eigen::VectorXd random_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

}  // namespace fracdiff::testing

#pragma once

#include "larson/autograd.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace larson {

using Rng = std::mt19937_64;

inline ag::Matrix xavier_uniform(ag::Index rows, ag::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  ag::Matrix m(rows, cols);
  for (ag::Index j = 0; j < cols; ++j)
    for (ag::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

inline ag::Matrix normal_matrix(ag::Index rows, ag::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  ag::Matrix m(rows, cols);
  for (ag::Index j = 0; j < cols; ++j)
    for (ag::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

using ParamList = std::vector<ag::Parameter*>;

}  // namespace larson

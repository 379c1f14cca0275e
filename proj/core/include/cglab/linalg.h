// Copyright 2026 The cglab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef CGLAB_LINALG_H_
#define CGLAB_LINALG_H_

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cglab {

using RowMatrixXf =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Number of singular values above rel_tol times the largest one.
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol);

// Orthonormal basis (d x r) of the row space of m (rows x d).
Eigen::MatrixXd row_space_basis(const Eigen::MatrixXd& m, double rel_tol);

// Minimum-norm least-squares solution of a x = b via an SVD pseudo-inverse.
// Singular values at or below rel_tol * max are treated as zero. Writes the
// rank to *rank when non-null.
Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double rel_tol, int* rank = nullptr);

// d x cols matrix with orthonormal columns drawn from the Haar measure.
Eigen::MatrixXd random_orthonormal(int d, int cols, std::mt19937_64& rng);

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng);

// Cosine similarity; 0 if either vector is zero.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cglab

#endif  // CGLAB_LINALG_H_

#pragma once

#include <Eigen/Dense>

#include "backdiff/graph.hpp"

namespace backdiff {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values[k]
  int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
// below tol * ||A||_F (absolute tol for a zero matrix).
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-10, int max_sweeps = 100);

// I - D^{-1/2} A D^{-1/2} on the binary adjacency; isolated nodes get a 0
// diagonal entry.
Eigen::MatrixXd normalized_laplacian(const Graph& g);

Eigen::VectorXd laplacian_spectrum(const Graph& g);

// L2 distance between sorted normalised-Laplacian spectra (shorter one
// zero-padded) divided by sqrt(max(n1, n2)).
double nld(const Graph& g1, const Graph& g2);

}  // namespace backdiff

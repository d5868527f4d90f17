#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. None of these call the library routine they check.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "backdiff/graph.hpp"
#include "backdiff/rng.hpp"

namespace oracle {

using backdiff::Graph;

// Product Q^1 ... Q^t of explicitly built step matrices.
Eigen::MatrixXd naive_cumulative(const std::vector<double>& alphas, int t, const Eigen::VectorXd& m);

// q(z^{t-1} = k | z^t = observed, z^0 = z) for one categorical variable,
// by summing the joint over every trajectory z^1 .. z^t.
Eigen::VectorXd enumerate_posterior(const std::vector<double>& alphas, const Eigen::VectorXd& m, int z, int observed,
                                    int t);

// q(z^t = k | z^0 = z) by propagating the one-hot row step by step.
Eigen::VectorXd propagate(const std::vector<double>& alphas, const Eigen::VectorXd& m, int z, int t);

// Isomorphism by trying all n! node maps.
bool isomorphic(const Graph& a, const Graph& b);

// Minimum unit-cost edit distance over every partial injective node map.
double enumerate_ged(const Graph& a, const Graph& b);

// Number of simple cycles of length k through each node, by DFS.
std::vector<double> cycles_through(const Graph& g, int k);

// Coefficients c_0..c_n of det(lambda I - A) by Faddeev-LeVerrier.
std::vector<double> charpoly(const Eigen::MatrixXd& a);
double poly_eval(const std::vector<double>& c, double x);

// Central finite differences of f with respect to every entry of *x.
template <class F>
Eigen::MatrixXd finite_difference(F&& f, Eigen::MatrixXd* x, double h = 1e-5) {
  Eigen::MatrixXd g(x->rows(), x->cols());
  for (Eigen::Index i = 0; i < x->rows(); ++i) {
    for (Eigen::Index j = 0; j < x->cols(); ++j) {
      const double keep = (*x)(i, j);
      (*x)(i, j) = keep + h;
      const double up = f();
      (*x)(i, j) = keep - h;
      const double down = f();
      (*x)(i, j) = keep;
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// Random graph generators for property tests.
Graph random_graph(int n, int a, int d, double edge_p, backdiff::Rng& rng);
Eigen::VectorXd random_distribution(int c, backdiff::Rng& rng, double floor = 0.05);
std::vector<double> random_alphas(int steps, backdiff::Rng& rng);

// Total-variation distance between two probability vectors.
double tv(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace oracle

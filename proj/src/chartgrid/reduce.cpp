#include "qcurv/common.hpp"

#include <omp.h>

#include <cmath>
#include <vector>

namespace qc {

namespace {

constexpr std::size_t kLeaf = 32;
constexpr std::size_t kTaskCutoff = 1 << 15;

double tree(const double* x, std::size_t n) {
  if (n <= kLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return tree(x, h) + tree(x + h, n - h);
}

double tree_tasks(const double* x, std::size_t n) {
  if (n <= kTaskCutoff) return tree(x, n);
  std::size_t h = n / 2;
  double a = 0.0, b = 0.0;
#pragma omp task shared(a)
  a = tree_tasks(x, h);
#pragma omp task shared(b)
  b = tree_tasks(x + h, n - h);
#pragma omp taskwait
  return a + b;
}

}  // namespace

double pairwise_sum_serial(const double* x, std::size_t n) { return tree(x, n); }

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= kTaskCutoff || omp_get_max_threads() == 1 || omp_in_parallel()) return tree(x, n);
  double s = 0.0;
#pragma omp parallel
#pragma omp single
  s = tree_tasks(x, n);
  return s;
}

double weighted_dot(const Vec& a, const Vec& b, const Vec& w) {
  Vec t = a.cwiseProduct(b).cwiseProduct(w);
  return pairwise_sum(t);
}

double weighted_sum(const Vec& a, const Vec& w) {
  Vec t = a.cwiseProduct(w);
  return pairwise_sum(t);
}

double max_abs(const Vec& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

int thread_count() { return omp_get_max_threads(); }
void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace qc

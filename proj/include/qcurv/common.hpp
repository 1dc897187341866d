// Shared vocabulary: vector aliases, error types, deterministic reductions.
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class ErrorKind { Config, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)), message_(what) {}
  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string code_;
  std::string message_;
};

[[noreturn]] inline void config_error(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Config, code, msg);
}
[[noreturn]] inline void numeric_error(const std::string& code, const std::string& msg) {
  throw Error(ErrorKind::Numeric, code, msg);
}

// Pairwise summation over a fixed tree. The tree depends only on n, so the
// parallel variant returns bit-identical results for any thread count.
double pairwise_sum(const double* x, std::size_t n);
double pairwise_sum_serial(const double* x, std::size_t n);
inline double pairwise_sum(const Vec& x) { return pairwise_sum(x.data(), static_cast<std::size_t>(x.size())); }

// sum_i a_i b_i w_i through the same tree
double weighted_dot(const Vec& a, const Vec& b, const Vec& w);
double weighted_sum(const Vec& a, const Vec& w);

// max |x_i|
double max_abs(const Vec& x);

int thread_count();
void set_thread_count(int n);

}  // namespace qc

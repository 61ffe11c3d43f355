#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace crossdiff {

/// Densities u_{i,K} of n species on every cell at one time level.
///
/// Storage is species-major within cell: entry (i, K) lives at K * n + i,
/// which is also the unknown ordering of the Newton system.
class State {
 public:
  State() = default;
  State(std::size_t species, std::size_t cells, double fill = 0.0)
      : n_(species), cells_(cells), values_(species * cells, fill) {}

  std::size_t species() const { return n_; }
  std::size_t cells() const { return cells_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t i, std::size_t k) { return values_[k * n_ + i]; }
  double operator()(std::size_t i, std::size_t k) const { return values_[k * n_ + i]; }

  Eigen::Map<Eigen::VectorXd> cell(std::size_t k) {
    return {values_.data() + k * n_, static_cast<Eigen::Index>(n_)};
  }
  Eigen::Map<const Eigen::VectorXd> cell(std::size_t k) const {
    return {values_.data() + k * n_, static_cast<Eigen::Index>(n_)};
  }

  /// All unknowns as one flat vector.
  Eigen::Map<Eigen::VectorXd> flat() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  std::size_t time_index = 0;

  bool operator==(const State& other) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

}  // namespace crossdiff

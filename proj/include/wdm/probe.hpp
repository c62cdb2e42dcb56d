#ifndef WDM_PROBE_HPP
#define WDM_PROBE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "wdm/dataset.hpp"
#include "wdm/model.hpp"

namespace wdm {

struct ProbeResult {
  std::vector<double> per_factor_accuracy;  // each in [0, 1]
  double mean_accuracy = 0.0;
  int n_train = 0, n_test = 0;
  std::vector<int> factor_cardinalities;
  std::vector<char> degenerate_factor;  // single class present -> accuracy 1.0
};

// One multinomial logistic classifier per factor (L2 1e-4, tolerance 1e-6) on
// a seed-deterministic stratified 80/20 split of the unique samples.
ProbeResult fit_linear_probe(const Eigen::MatrixXd& representations,
                             const Eigen::MatrixXi& labels,
                             const std::vector<int>& cardinalities,
                             std::uint64_t split_seed);

// Encodes dataset.x with the x-side encoder, then probes against dataset.z.
ProbeResult evaluate_model(const CriticState& state, const PairDataset& dataset,
                           std::uint64_t split_seed);

}  // namespace wdm

#endif

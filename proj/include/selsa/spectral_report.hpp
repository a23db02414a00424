#pragma once

#include "selsa/network.hpp"
#include "selsa/spectral.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace selsa {

struct ClassTransition {
  int class_id = 0;
  int n_proposals = 0;
  double p_out_in = 0;  // P(A-bar -> A) with A = proposals of this class
  double ncut = 0;
};

// One row per class present in `labels` (including background). Classes
// that cover every node cannot form a partition and are left out.
std::vector<ClassTransition> class_transitions(const AffinityGraph<double>& g, const Eigen::VectorXi& labels);

// Similarities of the first SELSA block over a joint proposal set:
// phi1(relu(fc1 x)) . psi1(relu(fc1 x)).
Matrix<double> block_similarity(const Matrix<double>& features, const SelsaParams<double>& params);

struct ClassRiskRow {
  int class_id = 0;
  int n_proposals = 0;
  double p_out_in_before = 0, p_out_in_after = 0;
  double ncut_before = 0, ncut_after = 0;
};

struct ClassRiskReport {
  std::vector<ClassRiskRow> rows;
  std::vector<std::string> warnings;
};

// Per-class aggregation risk P(A-bar -> A) under the `before` and `after`
// parameters, both computed on the same joint proposal set.
ClassRiskReport cluster_risk_report(const Matrix<double>& features, const Eigen::VectorXi& labels, int num_labels,
                                    const SelsaParams<double>& before, const SelsaParams<double>& after);

// class_id,n_proposals,p_out_in_before,p_out_in_after,ncut_before,ncut_after
void write_cluster_risk_csv(std::ostream& os, const ClassRiskReport& report);

}  // namespace selsa

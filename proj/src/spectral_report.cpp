#include "selsa/spectral_report.hpp"

#include "selsa/proposal.hpp"

#include <map>
#include <ostream>

namespace selsa {

std::vector<ClassTransition> class_transitions(const AffinityGraph<double>& g, const Eigen::VectorXi& labels) {
  if (labels.size() != g.size()) throw ConfigError("class_transitions: label count != graph size");
  std::map<int, std::vector<Eigen::Index>> members;
  for (Eigen::Index i = 0; i < labels.size(); ++i) members[labels(i)].push_back(i);

  std::vector<ClassTransition> out;
  for (const auto& [cls, nodes] : members) {
    if (static_cast<Eigen::Index>(nodes.size()) == g.size()) continue;
    Partition p(nodes, g.size());
    ClassTransition row;
    row.class_id = cls;
    row.n_proposals = static_cast<int>(nodes.size());
    row.p_out_in = transition_probability(g, p.complement(), p.a());
    row.ncut = ncut(g, p);
    out.push_back(row);
  }
  return out;
}

Matrix<double> block_similarity(const Matrix<double>& features, const SelsaParams<double>& params) {
  params.validate();
  const Matrix<double> h = relu(params.fc1(features));
  return similarity_matrix(h, h, params.phi1, params.psi1);
}

ClassRiskReport cluster_risk_report(const Matrix<double>& features, const Eigen::VectorXi& labels, int num_labels,
                                    const SelsaParams<double>& before, const SelsaParams<double>& after) {
  if (features.rows() != labels.size()) throw ConfigError("cluster_risk_report: label count != proposal count");
  ClassRiskReport report;

  std::map<int, int> counts;
  for (Eigen::Index i = 0; i < labels.size(); ++i) ++counts[labels(i)];
  for (int c = 0; c < num_labels; ++c) {
    if (!counts.count(c)) report.warnings.push_back("class " + std::to_string(c) + " has no proposals; skipped");
  }
  if (counts.size() < 2) {
    report.warnings.push_back("fewer than two classes present; no class partition is possible");
    return report;
  }

  auto pre = class_transitions(to_affinity(block_similarity(features, before)), labels);
  auto post = class_transitions(to_affinity(block_similarity(features, after)), labels);
  for (std::size_t k = 0; k < pre.size(); ++k) {
    report.rows.push_back({pre[k].class_id, pre[k].n_proposals, pre[k].p_out_in, post[k].p_out_in, pre[k].ncut,
                           post[k].ncut});
  }
  return report;
}

void write_cluster_risk_csv(std::ostream& os, const ClassRiskReport& report) {
  os << "class_id,n_proposals,p_out_in_before,p_out_in_after,ncut_before,ncut_after\n";
  for (const auto& r : report.rows) {
    os << r.class_id << ',' << r.n_proposals << ',' << format_real(r.p_out_in_before) << ','
       << format_real(r.p_out_in_after) << ',' << format_real(r.ncut_before) << ',' << format_real(r.ncut_after)
       << '\n';
  }
}

}  // namespace selsa

#pragma once

#include "selsa/network.hpp"

#include <filesystem>
#include <iosfwd>

namespace selsa {

// Text checkpoint, version 1:
//
//   selsa-checkpoint,1
//   feature_dim,sim_dim,num_classes
//   <d>,<d_sim>,<C>
//   tensor,<name>.weight,<rows>,<cols>
//   <rows lines of cols comma-separated values>
//   tensor,<name>.bias,<rows>,1
//   <rows lines of 1 value>
//   ...
//
// Tensors appear in the order fc1, fc2, phi1, psi1, phi2, psi2, classifier.
// Values are written in shortest round-trip decimal form, so save/load is
// lossless. C counts foreground classes; the classifier has C + 1 rows.
void save_checkpoint(std::ostream& os, const SelsaParams<double>& params);
SelsaParams<double> load_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const SelsaParams<double>& params);
SelsaParams<double> load_checkpoint(const std::filesystem::path& path);

}  // namespace selsa

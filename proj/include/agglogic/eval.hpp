#pragma once

// Interpretation of terms on MRFGs.

#include <stdexcept>
#include <vector>

#include "agglogic/graph.hpp"
#include "agglogic/random.hpp"
#include "agglogic/term.hpp"

namespace agglogic {

class EvalError : public std::runtime_error {
 public:
  enum class Kind { kArityMismatch, kEmptyDomain, kDimension };
  EvalError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Value of t on g, with the i-th free variable bound to the i-th root.
double eval(const Term& t, const MRFG& g);

/// One value of the closed term t per replicate, each on an independent
/// sample of the model; replicate i uses rng.split(i).
std::vector<double> eval_distribution(const Term& t, const ModelSpec& spec, std::size_t n,
                                      const FeatureDistribution& d, std::size_t replicates, const RngStream& rng);

}  // namespace agglogic

#pragma once

#include <span>

#include "fful/data.hpp"
#include "fful/model.hpp"
#include "fful/param_vector.hpp"
#include "fful/update_store.hpp"

// Plain single-threaded implementations of the hot kernels, kept as the
// comparison baseline for tests and the kernel benchmark.
namespace fful::reference {

double vec_dot(const ParamVector& a, const ParamVector& b);
double vec_norm(const ParamVector& a);

LossGrad loss_and_grad(const MlpModel& model, const LabeledDataset& ds);

// Sequential per-client round updates against a fixed global model.
std::vector<ParamVector> round_updates(const MlpModel& global,
                                       const std::vector<LabeledDataset>& clients, int epochs,
                                       int batch_size, double learning_rate,
                                       std::span<const std::uint64_t> streams);

// Sequential skew-compensated recursion over the store.
ParamVector unlearn_delta(const UpdateStore& store, int target_client, double alpha);

}  // namespace fful::reference

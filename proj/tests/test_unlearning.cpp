#include <doctest.h>

#include <cmath>

#include "fful/federation.hpp"
#include "fful/reference.hpp"
#include "fful/rng.hpp"
#include "fful/unlearning.hpp"

using namespace fful;

namespace {

// N=2, T=2 scalar history: benign client 0 sends (0.2, 0.1), target client 1
// sends (1.0, 0.5), everyone sampled in both rounds.
UpdateStore scalar_fixture() {
  UpdateStore store;
  store.num_clients = 2;
  store.dim = 1;
  store.records.push_back(
      RoundRecord{0,
                  {StoredUpdate{0, 1.0, ParamVector(std::vector<double>{0.2})},
                   StoredUpdate{1, 1.0, ParamVector(std::vector<double>{1.0})}}});
  store.records.push_back(
      RoundRecord{1,
                  {StoredUpdate{0, 1.0, ParamVector(std::vector<double>{0.1})},
                   StoredUpdate{1, 1.0, ParamVector(std::vector<double>{0.5})}}});
  return store;
}

// Hand-executed recursion for the fixture, same operation order as the
// engine: gamma = cross * benign - (1/N) * target; delta = f*delta + gamma.
double fixture_delta2(double alpha, double second_round_factor) {
  const double gamma0 = 0.5 * 0.2 - 0.5 * 1.0;
  const double delta1 = (1.0 + alpha) * 0.0 + gamma0;
  const double gamma1 = 0.5 * 0.1 - 0.5 * 0.5;
  return second_round_factor * delta1 + gamma1;
}

UpdateStore random_store(int num_clients, int rounds, std::uint32_t dim, std::uint64_t seed) {
  UpdateStore store;
  store.num_clients = num_clients;
  store.dim = dim;
  Rng rng(seed);
  for (int t = 0; t < rounds; ++t) {
    std::vector<StoredUpdate> entries;
    for (int c = 0; c < num_clients; ++c) {
      if (t > 0 && rng.next_uniform() < 0.3) continue;  // some clients unsampled
      std::vector<double> values(dim);
      for (double& v : values) v = rng.next_gaussian();
      entries.push_back(StoredUpdate{static_cast<std::uint32_t>(c), 0.5 + 0.5 * rng.next_uniform(),
                                     ParamVector(std::move(values))});
    }
    store.records.push_back(RoundRecord{static_cast<std::uint32_t>(t), std::move(entries)});
  }
  return store;
}

// The unlearning ops touch only the parameter vector, so scalar fixtures can
// ride on a placeholder spec.
MlpModel bare_model(std::vector<double> params) {
  MlpModel model;
  model.spec = MlpSpec{1, {}, 2};
  model.params = ParamVector(std::move(params));
  return model;
}

FederatedDataset blob_federation(int num_clients, int samples_per_class, std::uint64_t seed) {
  const LabeledDataset pool = make_blobs(2, samples_per_class, 6, 0.3, seed);
  FederatedDataset fed;
  fed.clients = partition_dirichlet(pool, num_clients, 1.0, seed + 1);
  fed.test_main = make_blobs(2, 40, 6, 0.3, seed + 2);
  return fed;
}

}  // namespace

TEST_CASE("recursion reproduces the hand-executed scalar fixture") {
  const UpdateStore store = scalar_fixture();

  const RecursionResult fast = unlearn_recursion(store, 1, 0.1, UnlearnMode::kFastFedul);
  CHECK(fast.delta[0] == fixture_delta2(0.1, 1.1));
  CHECK(std::abs(fast.delta[0] - (-0.64)) < 5e-16);
  REQUIRE(fast.gamma_norms.size() == 2);
  CHECK(fast.gamma_norms[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(fast.gamma_norms[1] == doctest::Approx(0.2).epsilon(1e-12));

  const RecursionResult partial = unlearn_recursion(store, 1, 0.1, UnlearnMode::kPartialSkew);
  CHECK(partial.delta[0] == fixture_delta2(0.1, 1.0));
  CHECK(std::abs(partial.delta[0] - (-0.60)) < 5e-16);

  // intermediate state after round one
  UpdateStore first_round = store;
  first_round.records.pop_back();
  const RecursionResult one = unlearn_recursion(first_round, 1, 0.1, UnlearnMode::kFastFedul);
  CHECK(one.delta[0] == -0.4);
}

TEST_CASE("naive subtraction matches the hand sum on the fixture") {
  const UpdateStore store = scalar_fixture();
  const MlpModel model = bare_model({2.0});
  const MlpModel naive = naive_unlearn(model, store, 1);
  CHECK(naive.params[0] == 2.0 - 0.5 * (1.0 + 0.5));
  CHECK(naive.params[0] == doctest::Approx(2.0 - 0.75).epsilon(1e-15));
}

TEST_CASE("empty store and all-zero stores are no-ops") {
  UpdateStore store;
  store.num_clients = 3;
  store.dim = 1;
  const MlpModel model = bare_model({0.7});
  const UnlearnConfig cfg{1, 0.08, UnlearnMode::kFastFedul};
  const UnlearnReport report = fast_fedul(model, store, cfg);
  CHECK(report.unlearned_model.params[0] == 0.7);
  CHECK(vec_norm(report.delta) == 0.0);

  UpdateStore zeros;
  zeros.num_clients = 3;
  zeros.dim = 1;
  for (std::uint32_t t = 0; t < 4; ++t) {
    zeros.records.push_back(RoundRecord{
        t,
        {StoredUpdate{0, 0.5, ParamVector(std::vector<double>{0.0})},
         StoredUpdate{1, 0.5, ParamVector(std::vector<double>{0.0})},
         StoredUpdate{2, 0.5, ParamVector(std::vector<double>{0.0})}}});
  }
  for (double alpha : {0.0, 0.05, 0.3}) {
    const RecursionResult rec = unlearn_recursion(zeros, 1, alpha, UnlearnMode::kFastFedul);
    CHECK(vec_norm(rec.delta) == 0.0);
  }
}

TEST_CASE("a never-sampled target leaves the naive model untouched") {
  UpdateStore store = random_store(4, 5, 3, 11);
  for (auto& rec : store.records) {
    std::erase_if(rec.entries, [](const StoredUpdate& e) { return e.client_id == 2; });
  }
  const MlpModel model = bare_model({0.1, -0.2, 0.3});
  const MlpModel untouched = naive_unlearn(model, store, 2);
  CHECK(untouched.params == model.params);
}

TEST_CASE("naive equals the direct formula on random stores") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const UpdateStore store = random_store(5, 6, 4, seed);
    Rng rng(seed + 100);
    std::vector<double> params(4);
    for (double& p : params) p = rng.next_gaussian();
    const MlpModel model = bare_model(params);

    const int target = 3;
    const MlpModel naive = naive_unlearn(model, store, target);
    // independent route: subtract the accumulated target updates in one shot
    ParamVector accumulated(store.dim);
    for (const auto& rec : store.records) {
      for (const auto& e : rec.entries) {
        if (e.client_id == target) vec_add_inplace(accumulated, e.update);
      }
    }
    const ParamVector expected =
        vec_add(model.params, vec_scale(accumulated, -1.0 / store.num_clients));
    for (std::size_t d = 0; d < expected.dim(); ++d) {
      CHECK(naive.params[d] == doctest::Approx(expected[d]).epsilon(1e-12));
    }
  }
}

TEST_CASE("the recursion is linear in the stored history") {
  const UpdateStore store = random_store(5, 7, 6, 3);
  UpdateStore scaled = store;
  const double c = -2.5;
  for (auto& rec : scaled.records) {
    for (auto& e : rec.entries) {
      for (std::size_t d = 0; d < e.update.dim(); ++d) e.update[d] *= c;
    }
  }
  const RecursionResult base = unlearn_recursion(store, 2, 0.07, UnlearnMode::kFastFedul);
  const RecursionResult multiplied = unlearn_recursion(scaled, 2, 0.07, UnlearnMode::kFastFedul);
  for (std::size_t d = 0; d < base.delta.dim(); ++d) {
    CHECK(multiplied.delta[d] == doctest::Approx(c * base.delta[d]).epsilon(1e-9));
  }
}

TEST_CASE("partial skew collapses to fast with alpha zero and single rounds") {
  const UpdateStore store = random_store(4, 6, 5, 9);
  const RecursionResult fast0 = unlearn_recursion(store, 1, 0.0, UnlearnMode::kFastFedul);
  const RecursionResult partial0 = unlearn_recursion(store, 1, 0.0, UnlearnMode::kPartialSkew);
  CHECK(fast0.delta == partial0.delta);

  UpdateStore one = store;
  one.records.resize(1);
  const RecursionResult fast1 = unlearn_recursion(one, 1, 0.09, UnlearnMode::kFastFedul);
  const RecursionResult partial1 = unlearn_recursion(one, 1, 0.09, UnlearnMode::kPartialSkew);
  CHECK(fast1.delta == partial1.delta);
}

TEST_CASE("the serial reference recursion agrees with the engine") {
  const UpdateStore store = random_store(6, 8, 7, 21);
  const RecursionResult engine = unlearn_recursion(store, 4, 0.06, UnlearnMode::kFastFedul);
  const ParamVector ref = reference::unlearn_delta(store, 4, 0.06);
  for (std::size_t d = 0; d < engine.delta.dim(); ++d) {
    CHECK(engine.delta[d] == doctest::Approx(ref[d]).epsilon(1e-12));
  }
}

TEST_CASE("fast_fedul reports M_T plus delta exactly and validates dimensions") {
  const UpdateStore store = random_store(4, 5, 4, 33);
  const MlpModel model = bare_model({0.5, -0.5, 0.25, 0.0});
  const UnlearnConfig cfg{0, 0.05, UnlearnMode::kFastFedul};
  const UnlearnReport report = fast_fedul(model, store, cfg);
  CHECK(report.unlearned_model.params == vec_add(model.params, report.delta));
  CHECK(report.gamma_norms.size() == store.rounds());

  const MlpModel mismatched = bare_model({0.0, 0.0});
  CHECK_THROWS_AS(fast_fedul(mismatched, store, cfg), std::invalid_argument);
  CHECK_THROWS_AS(naive_unlearn(mismatched, store, 0), std::invalid_argument);
  const UnlearnConfig bad{99, 0.05, UnlearnMode::kFastFedul};
  CHECK_THROWS_AS(fast_fedul(model, store, bad), std::invalid_argument);
}

TEST_CASE("zero skew makes fast_fedul with alpha zero exact") {
  // In a world where retrained clients reproduce their stored updates
  // exactly, the alpha-free recursion recovers the retrained model.
  const UpdateStore store = random_store(5, 8, 6, 55);
  const int target = 4;
  const double n = 5.0;

  ParamVector original(store.dim);   // M_T relative to M_0
  ParamVector retrained(store.dim);  // M*_T relative to M_0
  for (const auto& rec : store.records) {
    for (const auto& e : rec.entries) {
      vec_axpy_inplace(original, 1.0 / n, e.update);
      if (static_cast<int>(e.client_id) != target) {
        vec_axpy_inplace(retrained, 1.0 / (n - 1.0), e.update);
      }
    }
  }
  const RecursionResult rec = unlearn_recursion(store, target, 0.0, UnlearnMode::kFastFedul);
  const ParamVector unlearned = vec_add(original, rec.delta);
  for (std::size_t d = 0; d < unlearned.dim(); ++d) {
    CHECK(unlearned[d] == doctest::Approx(retrained[d]).epsilon(1e-11));
  }
}

TEST_CASE("retrain oracle determinism and single-round arithmetic") {
  const int n = 3;
  const FederatedDataset fed = blob_federation(n, 30, 61);
  const MlpSpec spec{6, {4}, 2};
  FedConfig cfg;
  cfg.num_clients = n;
  cfg.sample_size = n;
  cfg.rounds = 1;
  cfg.local_epochs = 1;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 5;
  const TrainingTrace trace = run_training(cfg, fed, spec);

  const MlpModel a = retrain_oracle(cfg, fed, spec, trace.store, 2);
  const MlpModel b = retrain_oracle(cfg, fed, spec, trace.store, 2);
  CHECK(a.params == b.params);

  // M*_1 = M_0 + (u0 + u1) / (N - 1) with the same streams as training
  const MlpModel initial = init_model(spec, cfg.seed);
  const ParamVector u0 = local_train(initial, fed.clients[0], 1, 16, 0.05,
                                     stream_key(cfg.seed, StreamPurpose::kLocalTrain, 0, 0));
  const ParamVector u1 = local_train(initial, fed.clients[1], 1, 16, 0.05,
                                     stream_key(cfg.seed, StreamPurpose::kLocalTrain, 0, 1));
  std::vector<const ParamVector*> ptrs{&u0, &u1};
  const ParamVector expected = fedavg_step(initial.params, ptrs, 2.0);
  CHECK(a.params == expected);
}

TEST_CASE("retrain trace exposes zero skew at round zero and usable pairs after") {
  const int n = 4;
  const FederatedDataset fed = blob_federation(n, 40, 71);
  const MlpSpec spec{6, {4}, 2};
  FedConfig cfg;
  cfg.num_clients = n;
  cfg.sample_size = n;
  cfg.rounds = 3;
  cfg.local_epochs = 1;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 8;
  RunOptions options;
  options.record_round_models = true;
  const TrainingTrace trace = run_training(cfg, fed, spec, {}, options);
  REQUIRE(trace.round_models.size() == static_cast<std::size_t>(cfg.rounds) + 1);

  const RetrainTrace retrain =
      retrain_with_trace(cfg, fed, spec, trace.store, n - 1, &trace.round_models);
  REQUIRE(retrain.skew_pairs.size() == static_cast<std::size_t>(cfg.rounds));
  CHECK(vec_norm(retrain.skew_pairs[0].delta) == 0.0);
  CHECK(vec_norm(retrain.skew_pairs[0].epsilon) == 0.0);
  CHECK(vec_norm(retrain.skew_pairs[1].delta) > 0.0);

  const double k_hat = estimate_lipschitz(retrain.skew_pairs);
  CHECK(k_hat >= 0.0);
  CHECK(std::isfinite(k_hat));
}

TEST_CASE("estimate_lipschitz ratios") {
  std::vector<SkewPair> pairs;
  SkewPair zero;
  zero.delta = ParamVector(std::vector<double>{0.6, 0.0});
  zero.epsilon = ParamVector(std::vector<double>{0.0, 0.0});
  pairs.push_back(zero);
  CHECK(estimate_lipschitz(pairs) == 0.0);

  SkewPair half;
  half.delta = ParamVector(std::vector<double>{0.6, 0.0});
  half.epsilon = ParamVector(std::vector<double>{0.0, 0.3});
  pairs.push_back(half);
  CHECK(estimate_lipschitz(pairs) == doctest::Approx(0.5).epsilon(1e-12));

  SkewPair smaller;
  smaller.delta = ParamVector(std::vector<double>{1.0, 0.0});
  smaller.epsilon = ParamVector(std::vector<double>{0.1, 0.0});
  pairs.push_back(smaller);
  CHECK(estimate_lipschitz(pairs) == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<SkewPair> unusable;
  SkewPair degenerate;
  degenerate.delta = ParamVector(std::vector<double>{0.0});
  degenerate.epsilon = ParamVector(std::vector<double>{0.0});
  unusable.push_back(degenerate);
  CHECK_THROWS_AS(estimate_lipschitz(unusable), std::invalid_argument);
}

TEST_CASE("theorem1_bound closed form, limit form and degenerate cases") {
  BoundInputs empty;
  empty.rounds = 1;
  empty.gamma_norms = {0.4};
  CHECK(theorem1_bound(empty) == 0.0);

  BoundInputs plug;
  plug.lipschitz = 0.3;
  plug.alpha = 0.1;
  plug.rounds = 2;
  plug.gamma_norms = {0.4, 9.9};  // the second norm never enters
  CHECK(theorem1_bound(plug) == doctest::Approx(0.16).epsilon(1e-12));

  BoundInputs limit;
  limit.lipschitz = 0.1;
  limit.alpha = 0.1;
  limit.rounds = 2;
  limit.gamma_norms = {1.0, 0.0};
  CHECK(theorem1_bound(limit) == doctest::Approx(0.2).epsilon(1e-12));

  // near-degenerate denominators switch to the limit smoothly
  BoundInputs near = limit;
  near.lipschitz = 0.1 + 1e-13;
  CHECK(theorem1_bound(near) == doctest::Approx(0.2).epsilon(1e-9));

  BoundInputs bad;
  bad.lipschitz = -1.0;
  bad.rounds = 2;
  bad.gamma_norms = {0.0, 0.0};
  CHECK_THROWS_AS(theorem1_bound(bad), std::invalid_argument);
}

TEST_CASE("gamma norms from the store match the recursion report") {
  const UpdateStore store = random_store(5, 6, 4, 77);
  const auto gammas = gamma_norms_from_store(store, 2);
  const RecursionResult rec = unlearn_recursion(store, 2, 0.25, UnlearnMode::kFastFedul);
  REQUIRE(gammas.size() == rec.gamma_norms.size());
  for (std::size_t t = 0; t < gammas.size(); ++t) CHECK(gammas[t] == rec.gamma_norms[t]);
}

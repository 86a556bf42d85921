#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fful/param_vector.hpp"

namespace fful {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StoreFormatError : StoreError {
  using StoreError::StoreError;
};
struct StoreVersionError : StoreError {
  using StoreError::StoreError;
};
struct StoreTruncatedError : StoreError {
  using StoreError::StoreError;
};
struct StoreInvariantError : StoreError {
  using StoreError::StoreError;
};

struct StoredUpdate {
  std::uint32_t client_id = 0;
  double probability = 1.0;  // sampling probability, in (0, 1]
  ParamVector update;
};

struct RoundRecord {
  std::uint32_t round = 0;
  std::vector<StoredUpdate> entries;  // ascending client_id
};

// Per-round history of sampled client updates. Updates are kept on the f32
// grid (store_append rounds them), so the in-memory contents round-trip
// through the file encoding bit for bit.
struct UpdateStore {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr char kMagic[4] = {'F', 'F', 'U', 'L'};

  std::uint32_t num_clients = 0;
  std::uint32_t dim = 0;
  std::vector<RoundRecord> records;  // rounds 0..T-1 in order

  std::uint32_t rounds() const { return static_cast<std::uint32_t>(records.size()); }
  std::uint64_t serialized_bytes() const;
  void validate() const;  // throws StoreInvariantError
};

// Appends the next round; `round` must equal the current round count. Entries
// must be in ascending client-id order; values pass through f32.
void store_append(UpdateStore& store, std::uint32_t round, std::vector<StoredUpdate> entries);

// Binary file plus a sibling "<path>.manifest.json" duplicating the header and
// describing the parameter layout.
void store_write(const UpdateStore& store, const std::string& path,
                 const std::string& layout_description = "");
UpdateStore store_read(const std::string& path);

}  // namespace fful

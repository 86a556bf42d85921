#include "fful/update_store.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

namespace fful {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {
      static_cast<char>(v & 0xFF),
      static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF),
      static_cast<char>((v >> 24) & 0xFF),
  };
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  if (!in) throw StoreTruncatedError(std::string("store file truncated while reading ") + what);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float get_f32(std::istream& in, const char* what) {
  return std::bit_cast<float>(get_u32(in, what));
}

}  // namespace

std::uint64_t UpdateStore::serialized_bytes() const {
  std::uint64_t bytes = 20;  // magic + version + N + dim + T
  for (const auto& rec : records) {
    bytes += 8 + static_cast<std::uint64_t>(rec.entries.size()) * (8 + 4ull * dim);
  }
  return bytes;
}

void UpdateStore::validate() const {
  if (num_clients == 0) throw StoreInvariantError("store has zero clients");
  for (std::size_t t = 0; t < records.size(); ++t) {
    const auto& rec = records[t];
    if (rec.round != t) {
      throw StoreInvariantError("store rounds not contiguous at index " + std::to_string(t));
    }
    std::int64_t prev_id = -1;
    for (const auto& e : rec.entries) {
      if (e.client_id >= num_clients) {
        throw StoreInvariantError("client id out of range in round " + std::to_string(t));
      }
      if (static_cast<std::int64_t>(e.client_id) <= prev_id) {
        throw StoreInvariantError("client ids not strictly increasing in round " + std::to_string(t));
      }
      prev_id = e.client_id;
      if (!(e.probability > 0.0) || e.probability > 1.0 || !std::isfinite(e.probability)) {
        throw StoreInvariantError("probability outside (0,1] in round " + std::to_string(t));
      }
      if (e.update.dim() != dim) {
        throw StoreInvariantError("update dimension mismatch in round " + std::to_string(t));
      }
      for (std::size_t d = 0; d < e.update.dim(); ++d) {
        if (!std::isfinite(e.update[d])) {
          throw StoreInvariantError("non-finite update entry in round " + std::to_string(t));
        }
      }
    }
  }
}

void store_append(UpdateStore& store, std::uint32_t round, std::vector<StoredUpdate> entries) {
  if (round != store.records.size()) {
    throw StoreInvariantError("store_append: expected round " + std::to_string(store.records.size()) +
                              ", got " + std::to_string(round));
  }
  for (auto& e : entries) {
    e.probability = static_cast<double>(static_cast<float>(e.probability));
    for (std::size_t d = 0; d < e.update.dim(); ++d) {
      e.update[d] = static_cast<double>(static_cast<float>(e.update[d]));
    }
  }
  store.records.push_back(RoundRecord{round, std::move(entries)});
}

void store_write(const UpdateStore& store, const std::string& path,
                 const std::string& layout_description) {
  store.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError("cannot open store file for writing: " + path);

  out.write(UpdateStore::kMagic, 4);
  put_u32(out, UpdateStore::kVersion);
  put_u32(out, store.num_clients);
  put_u32(out, store.dim);
  put_u32(out, store.rounds());
  for (const auto& rec : store.records) {
    put_u32(out, rec.round);
    put_u32(out, static_cast<std::uint32_t>(rec.entries.size()));
    for (const auto& e : rec.entries) {
      put_u32(out, e.client_id);
      put_f32(out, static_cast<float>(e.probability));
      for (std::size_t d = 0; d < store.dim; ++d) {
        put_f32(out, static_cast<float>(e.update[d]));
      }
    }
  }
  if (!out) throw StoreError("write failed for store file: " + path);
  out.close();

  nlohmann::json manifest{
      {"magic", "FFUL"},
      {"version", UpdateStore::kVersion},
      {"num_clients", store.num_clients},
      {"dim", store.dim},
      {"rounds", store.rounds()},
      {"layout", layout_description},
  };
  std::ofstream mout(path + ".manifest.json", std::ios::trunc);
  if (!mout) throw StoreError("cannot open store manifest for writing: " + path + ".manifest.json");
  mout << manifest.dump(2) << "\n";
}

UpdateStore store_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open store file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in) throw StoreTruncatedError("store file truncated while reading magic");
  if (magic[0] != 'F' || magic[1] != 'F' || magic[2] != 'U' || magic[3] != 'L') {
    throw StoreFormatError("bad magic bytes in store file: " + path);
  }
  const std::uint32_t version = get_u32(in, "version");
  if (version != UpdateStore::kVersion) {
    throw StoreVersionError("unsupported store version " + std::to_string(version));
  }

  UpdateStore store;
  store.num_clients = get_u32(in, "num_clients");
  store.dim = get_u32(in, "dim");
  const std::uint32_t rounds = get_u32(in, "rounds");
  store.records.reserve(rounds);
  for (std::uint32_t t = 0; t < rounds; ++t) {
    RoundRecord rec;
    rec.round = get_u32(in, "round");
    const std::uint32_t k = get_u32(in, "entry count");
    rec.entries.reserve(k);
    for (std::uint32_t j = 0; j < k; ++j) {
      StoredUpdate e;
      e.client_id = get_u32(in, "client id");
      e.probability = static_cast<double>(get_f32(in, "probability"));
      ParamVector update(store.dim);
      for (std::uint32_t d = 0; d < store.dim; ++d) {
        update[d] = static_cast<double>(get_f32(in, "update"));
      }
      e.update = std::move(update);
      rec.entries.push_back(std::move(e));
    }
    store.records.push_back(std::move(rec));
  }
  if (in.peek() != EOF) throw StoreFormatError("trailing bytes after store records: " + path);
  store.validate();
  return store;
}

}  // namespace fful

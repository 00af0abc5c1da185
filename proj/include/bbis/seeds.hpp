#pragma once

#include <cstdint>
#include <initializer_list>

namespace bbis {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for one replication, hashed from its coordinates so that adding beta
/// levels or methods never changes the seeds of existing replications.
std::uint64_t derive_seed(std::uint64_t base_seed, std::initializer_list<std::uint64_t> coordinates);

}  // namespace bbis

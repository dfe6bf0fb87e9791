#ifndef OMICSNET_SEEDING_HPP
#define OMICSNET_SEEDING_HPP

#include <cstdint>
#include <string_view>

namespace omicsnet {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for a named stage: FNV-1a of the name, combined with the global seed.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

} // namespace omicsnet

#endif

#pragma once

#include "slhf/orbitals.hpp"
#include "slhf/scf.hpp"

#include <optional>
#include <string>

namespace slhf {

/// 16 hex digits (FNV-1a) over Z, the canonical configuration label, the
/// grid parameters, the SCF options and the cache format version.
std::string scf_cache_key(const ElectronConfiguration& config, int points, double r_max, double map_param,
                          const ScfOptions& options);

/// JSON text of a converged state. Doubles are written with round-trip
/// precision, so a loaded state reproduces every downstream number exactly.
std::string serialize_state(const SpinOrbitalSet& set, const ScfOptions& options);
/// Returns nullopt when the text is not a cache of this format version or
/// was written for different inputs.
std::optional<SpinOrbitalSet> deserialize_state(const std::string& text, const ElectronConfiguration& config,
                                                const GridPtr& grid, const ScfOptions& options);

/// SCF through a cache directory (empty: no caching). `hit` reports
/// whether the state came from disk.
SpinOrbitalSet cached_scf(const ElectronConfiguration& config, const GridPtr& grid, const ScfOptions& options,
                          const std::string& directory, bool* hit = nullptr);

} // namespace slhf

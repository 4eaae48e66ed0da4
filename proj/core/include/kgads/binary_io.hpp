#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>

#include "kgads/propagators.hpp"
#include "kgads/spectral.hpp"

namespace kgads::binary {

/// Every file starts with a 16-byte envelope: the magic "KGADSBIN", a
/// little-endian uint32 format version and a uint32 payload kind. All
/// numbers that follow are little-endian; reals are IEEE-754 binary64.
inline constexpr char kMagic[8] = {'K', 'G', 'A', 'D', 'S', 'B', 'I', 'N'};
inline constexpr std::uint32_t kVersion = 1;

enum class Payload : std::uint32_t { spectral_model = 1, kernel = 2 };

/// Model payload: {n, nu, L, N, n_modes} header, model and mesh description,
/// node grid and weights, then per sector the eigenvalues and the
/// column-major eigenvector matrix. The assembled form is not stored.
void write_model(std::ostream& out, const SpectralModel& s);
std::shared_ptr<const SpectralModel> read_model(std::istream& in);

/// Kernel payload: the model payload followed by the time grid, kind,
/// weighting and the mode-term list.
void write_kernel(std::ostream& out, const BiKernel& k);
BiKernel read_kernel(std::istream& in);

void save_model(const std::filesystem::path& path, const SpectralModel& s);
std::shared_ptr<const SpectralModel> load_model(const std::filesystem::path& path);
void save_kernel(const std::filesystem::path& path, const BiKernel& k);
BiKernel load_kernel(const std::filesystem::path& path);

}  // namespace kgads::binary

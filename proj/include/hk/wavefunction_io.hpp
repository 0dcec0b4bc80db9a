#pragma once

#include <iosfwd>
#include <string>

#include "hk/coherent.hpp"

namespace hk {

/// Binary layout (all little-endian):
///   char[4]  magic "HKWF"
///   uint32   format version (1)
///   uint32   dimension d
///   float64  hbar
///   d times: float64 origin, float64 spacing, uint64 count
///   N times: float64 real, float64 imag   (row-major, last axis fastest)
void write_wavefunction_binary(std::ostream& out, const WaveFunction& psi);
WaveFunction read_wavefunction_binary(std::istream& in);

/// CSV layout: "# hbar=<v>" line, one "# axis=<a> origin=<o> spacing=<h> count=<n>"
/// line per axis, header "x0,...,x{d-1},re,im", then one row per grid point.
void write_wavefunction_csv(std::ostream& out, const WaveFunction& psi);
WaveFunction read_wavefunction_csv(std::istream& in);

void save_wavefunction(const std::string& path, const WaveFunction& psi);
WaveFunction load_wavefunction(const std::string& path);

}  // namespace hk

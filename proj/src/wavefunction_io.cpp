#include "hk/wavefunction_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace hk {

namespace {

static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("wavefunction dump truncated");
  return v;
}

}  // namespace

void write_wavefunction_binary(std::ostream& out, const WaveFunction& psi) {
  out.write("HKWF", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(psi.grid.dim()));
  put<double>(out, psi.hbar);
  for (int a = 0; a < psi.grid.dim(); ++a) {
    put<double>(out, psi.grid.origin(a));
    put<double>(out, psi.grid.spacing(a));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(psi.grid.counts[a]));
  }
  for (const Complex& v : psi.values) {
    put<double>(out, v.real());
    put<double>(out, v.imag());
  }
}

WaveFunction read_wavefunction_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HKWF", 4) != 0) throw Error("not a wavefunction dump (bad magic)");
  if (get<std::uint32_t>(in) != 1) throw Error("unsupported wavefunction dump version");
  const int d = static_cast<int>(get<std::uint32_t>(in));
  WaveFunction psi;
  psi.hbar = get<double>(in);
  psi.grid.origin.resize(d);
  psi.grid.spacing.resize(d);
  psi.grid.counts.resize(d);
  for (int a = 0; a < d; ++a) {
    psi.grid.origin(a) = get<double>(in);
    psi.grid.spacing(a) = get<double>(in);
    psi.grid.counts[a] = static_cast<int>(get<std::uint64_t>(in));
  }
  psi.values.resize(psi.grid.size());
  for (auto& v : psi.values) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    v = Complex(re, im);
  }
  return psi;
}

void write_wavefunction_csv(std::ostream& out, const WaveFunction& psi) {
  const int d = psi.grid.dim();
  out << std::setprecision(17);
  out << "# hbar=" << psi.hbar << "\n";
  for (int a = 0; a < d; ++a)
    out << "# axis=" << a << " origin=" << psi.grid.origin(a) << " spacing=" << psi.grid.spacing(a)
        << " count=" << psi.grid.counts[a] << "\n";
  for (int a = 0; a < d; ++a) out << "x" << a << ",";
  out << "re,im\n";
  for (std::size_t k = 0; k < psi.values.size(); ++k) {
    const RealVector x = psi.grid.point(k);
    for (int a = 0; a < d; ++a) out << x(a) << ",";
    out << psi.values[k].real() << "," << psi.values[k].imag() << "\n";
  }
}

WaveFunction read_wavefunction_csv(std::istream& in) {
  WaveFunction psi;
  std::string line;
  std::vector<double> origin, spacing;
  std::vector<int> counts;
  while (std::getline(in, line) && line.rfind("#", 0) == 0) {
    if (line.rfind("# hbar=", 0) == 0) {
      psi.hbar = std::stod(line.substr(7));
    } else if (line.rfind("# axis=", 0) == 0) {
      int axis = 0, count = 0;
      double o = 0, h = 0;
      if (std::sscanf(line.c_str(), "# axis=%d origin=%lf spacing=%lf count=%d", &axis, &o, &h, &count) != 4)
        throw Error("malformed axis line in wavefunction csv: " + line);
      origin.push_back(o);
      spacing.push_back(h);
      counts.push_back(count);
    }
  }
  const int d = static_cast<int>(counts.size());
  if (d == 0) throw Error("wavefunction csv has no axis description");
  psi.grid.origin = Eigen::Map<RealVector>(origin.data(), d);
  psi.grid.spacing = Eigen::Map<RealVector>(spacing.data(), d);
  psi.grid.counts = counts;
  psi.values.reserve(psi.grid.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (static_cast<int>(cells.size()) != d + 2) throw Error("malformed wavefunction csv row");
    psi.values.emplace_back(cells[d], cells[d + 1]);
  }
  if (psi.values.size() != psi.grid.size()) throw Error("wavefunction csv row count does not match the grid");
  return psi;
}

void save_wavefunction(const std::string& path, const WaveFunction& psi) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ofstream out(path, csv ? std::ios::out : std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  if (csv)
    write_wavefunction_csv(out, psi);
  else
    write_wavefunction_binary(out, psi);
}

WaveFunction load_wavefunction(const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return csv ? read_wavefunction_csv(in) : read_wavefunction_binary(in);
}

}  // namespace hk

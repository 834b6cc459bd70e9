#include "haec/array_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace haec {
namespace {

constexpr char kMagic[8] = {'H', 'A', 'E', 'C', 'F', '6', '4', '\n'};

static_assert(std::endian::native == std::endian::little, "flat array I/O assumes a little-endian host");

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InputError("flat array: truncated file");
  return v;
}

void read_doubles(std::istream& is, double* dst, std::uint64_t count) {
  if (count > (std::uint64_t{1} << 40)) throw InputError("flat array: implausible length");
  if (count && !is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(double))))
    throw InputError("flat array: truncated file");
}

}  // namespace

void write_flat_array(const std::filesystem::path& path, const FlatArray& array) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof kMagic);
  write_u64(os, array.header.size());
  os.write(reinterpret_cast<const char*>(array.header.data()),
           static_cast<std::streamsize>(array.header.size() * sizeof(double)));
  write_u64(os, static_cast<std::uint64_t>(array.values.size()));
  os.write(reinterpret_cast<const char*>(array.values.data()),
           static_cast<std::streamsize>(array.values.size() * sizeof(double)));
  if (!os) throw InputError("write failed: " + path.string());
}

FlatArray read_flat_array(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw InputError("flat array: bad magic in " + path.string());
  FlatArray out;
  const std::uint64_t nh = read_u64(is);
  if (nh > 1024) throw InputError("flat array: implausible header length");
  out.header.resize(nh);
  read_doubles(is, out.header.data(), nh);
  const std::uint64_t nv = read_u64(is);
  out.values.resize(static_cast<Index>(nv));
  read_doubles(is, out.values.data(), nv);
  if (is.peek() != std::char_traits<char>::eof()) throw InputError("flat array: trailing bytes");
  return out;
}

void save_prototype(const std::filesystem::path& path, const PrototypeFilter<double>& proto) {
  write_flat_array(path, {{static_cast<double>(proto.length()), static_cast<double>(proto.num_subbands),
                           static_cast<double>(proto.decimation)},
                          proto.taps});
}

PrototypeFilter<double> load_prototype(const std::filesystem::path& path) {
  const FlatArray a = read_flat_array(path);
  if (a.header.size() != 3 || a.header[0] != static_cast<double>(a.values.size()))
    throw InputError("prototype file: header does not match contents");
  return prototype_from_taps<double>(a.values, static_cast<Index>(a.header[1]), static_cast<Index>(a.header[2]));
}

void save_bark_map(const std::filesystem::path& path, const BarkMap<double>& map) {
  const Index bins = map.num_bins(), bands = map.num_bands();
  Eigen::VectorXd values(bins * bands + bands + 1);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), bins, bands) =
      map.weights;
  values.tail(bands + 1) = map.band_edges;
  write_flat_array(path, {{static_cast<double>(map.dft_size), static_cast<double>(bands), map.sample_rate}, values});
}

BarkMap<double> load_bark_map(const std::filesystem::path& path) {
  const FlatArray a = read_flat_array(path);
  if (a.header.size() != 3) throw InputError("bark map file: bad header");
  const Index k = static_cast<Index>(a.header[0]), bands = static_cast<Index>(a.header[1]);
  const Index bins = k / 2 + 1;
  if (a.values.size() != bins * bands + bands + 1) throw InputError("bark map file: size does not match header");
  BarkMap<double> map;
  map.dft_size = k;
  map.sample_rate = a.header[2];
  map.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      a.values.data(), bins, bands);
  map.band_edges = a.values.tail(bands + 1);
  return map;
}

void write_lec_snapshot(const std::filesystem::path& path, const LecState<double>& state) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << std::setprecision(9);
  os << "# lec snapshot: subbands " << state.num_bins() << ", members " << state.members.size() << "\n";
  for (Index k = 0; k < state.num_bins(); ++k) {
    const auto& m = state.members[static_cast<size_t>(state.selected(k))];
    os << k << " len=" << m.length << " err_psd=" << m.error_psd(k);
    for (Index t = 0; t < m.length; ++t) os << ' ' << m.coeffs(k, t).real() << ',' << m.coeffs(k, t).imag();
    os << '\n';
  }
}

}  // namespace haec

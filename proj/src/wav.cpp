#include "haec/wav.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace haec {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

template <typename T>
T get(const std::vector<char>& buf, size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw InputError("wav: truncated header");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw InputError("wav: not a RIFF/WAVE file: " + path.string());

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id(buf.data() + pos, 4);
    const std::uint32_t size = get<std::uint32_t>(buf, pos + 4);
    const size_t body = pos + 8;
    if (body + size > buf.size()) throw InputError("wav: truncated chunk '" + id + "'");
    if (id == "fmt ") {
      format = get<std::uint16_t>(buf, body);
      channels = get<std::uint16_t>(buf, body + 2);
      rate = get<std::uint32_t>(buf, body + 4);
      bits = get<std::uint16_t>(buf, body + 14);
      if (format == 0xFFFE && size >= 26) format = get<std::uint16_t>(buf, body + 24);  // extensible
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw InputError("wav: data chunk before fmt chunk");
      if (channels != 1) throw InputError("wav: only mono files are supported");
      WavData out;
      out.sample_rate = static_cast<int>(rate);
      if (format == 3 && bits == 32) {
        const size_t n = size / 4;
        out.samples.resize(static_cast<Index>(n));
        for (size_t i = 0; i < n; ++i) out.samples(static_cast<Index>(i)) = get<float>(buf, body + 4 * i);
      } else if (format == 1 && bits == 16) {
        const size_t n = size / 2;
        out.samples.resize(static_cast<Index>(n));
        for (size_t i = 0; i < n; ++i)
          out.samples(static_cast<Index>(i)) = get<std::int16_t>(buf, body + 2 * i) / 32768.0;
      } else {
        throw InputError("wav: unsupported sample format (need 32-bit float or 16-bit PCM)");
      }
      require_finite(out.samples, "wav");
      return out;
    }
    pos = body + size + (size & 1);
  }
  throw InputError("wav: no data chunk in " + path.string());
}

void write_wav(const std::filesystem::path& path, const Eigen::VectorXd& samples, int sample_rate) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 4);
  os.write("RIFF", 4);
  put<std::uint32_t>(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put<std::uint32_t>(os, 16);
  put<std::uint16_t>(os, 3);
  put<std::uint16_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sample_rate));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(sample_rate) * 4);
  put<std::uint16_t>(os, 4);
  put<std::uint16_t>(os, 32);
  os.write("data", 4);
  put<std::uint32_t>(os, data_bytes);
  for (Index i = 0; i < samples.size(); ++i) put<float>(os, static_cast<float>(samples(i)));
  if (!os) throw InputError("write failed: " + path.string());
}

}  // namespace haec

#include <cstdint>
#include <cstring>
#include <fstream>

#include "qflow/errors.hpp"
#include "qflow/io.hpp"

namespace qflow {

namespace {

const char kMagic[4] = {'Q', 'F', 'S', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

struct Reader {
  const unsigned char* p;
  std::size_t len, pos = 0;
  Reader(const std::string& s)
      : p(reinterpret_cast<const unsigned char*>(s.data())), len(s.size()) {}
  void need(std::size_t k) {
    if (pos + k > len) fail(Errc::CorruptPayload, "snapshot truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

} // namespace

void write_snapshot(const std::string& path, const Snapshot& snap) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, Snapshot::kVersion);
  put_u32(buf, static_cast<std::uint32_t>(snap.n));
  put_u32(buf, snap.mode == GridMode::Full2D ? 0u : 1u);
  put_u32(buf, static_cast<std::uint32_t>(snap.L));
  put_f64(buf, snap.t);
  put_f64(buf, snap.dt);
  put_u64(buf, static_cast<std::uint64_t>(snap.step_index));
  put_u32(buf, static_cast<std::uint32_t>(snap.accept_streak));
  put_u64(buf, snap.config_hash);
  put_u64(buf, snap.coeffs.size());

  std::string payload;
  payload.reserve(snap.coeffs.size() * 8);
  for (double c : snap.coeffs) put_f64(payload, c);
  buf += payload;
  put_u64(buf, fnv1a(payload.data(), payload.size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(Errc::CorruptPayload, "cannot open '" + path + "' for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) fail(Errc::CorruptPayload, "short write to '" + path + "'");
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(Errc::CorruptPayload, "cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  Reader r(buf);
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0)
    fail(Errc::CorruptPayload, "bad magic in '" + path + "'");
  r.pos = 4;
  std::uint32_t version = r.u32();
  if (version != Snapshot::kVersion)
    fail(Errc::VersionMismatch, "snapshot version " + std::to_string(version) +
                                    ", expected " + std::to_string(Snapshot::kVersion));
  Snapshot snap;
  snap.n = static_cast<int>(r.u32());
  snap.mode = r.u32() == 0 ? GridMode::Full2D : GridMode::Axisymmetric;
  snap.L = static_cast<int>(r.u32());
  snap.t = r.f64();
  snap.dt = r.f64();
  snap.step_index = static_cast<long long>(r.u64());
  snap.accept_streak = static_cast<int>(r.u32());
  snap.config_hash = r.u64();
  std::uint64_t count = r.u64();
  r.need(count * 8 + 8);
  std::size_t payload_start = r.pos;
  snap.coeffs.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) snap.coeffs[i] = r.f64();
  std::uint64_t stored = r.u64();
  std::uint64_t computed = fnv1a(buf.data() + payload_start, count * 8);
  if (stored != computed) fail(Errc::CorruptPayload, "checksum mismatch");
  return snap;
}

} // namespace qflow

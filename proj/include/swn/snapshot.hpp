#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "swn/gauge_field.hpp"
#include "swn/lattice.hpp"

// Binary field-snapshot format, little endian:
//   magic "SWN3" | version u32 | N u32 | L f64 | n u32
//   A links  (site-major, axis-major):              N^3 * 3 complex
//   B links  (site-major, axis-major, entry row-major): N^3 * 3 * n^2 complex
//   Psi      (site-major, entry row-major):         N^3 * 2n complex
//   alpha f64
// each complex stored as f64 (re, im). Round trips are bit exact.

namespace swn {

struct SnapshotError : std::runtime_error {
  enum class Kind { io, bad_magic, bad_version, size_mismatch };
  Kind kind;
  SnapshotError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct Snapshot {
  int N = 0;
  double L = 0.0;
  int n = 0;
  U1Connection a;
  SUnConnection b;
  SpinorField psi;
  double alpha = 0.0;
};

namespace detail_snapshot {

constexpr std::uint32_t kVersion = 1;

inline std::uint64_t payload_bytes(std::uint32_t N, std::uint32_t n) {
  std::uint64_t V = static_cast<std::uint64_t>(N) * N * N;
  std::uint64_t complexes = V * 3 + V * 3 * n * n + V * 2 * n;
  return complexes * 16 + 8;  // + trailing alpha
}

constexpr std::uint64_t header_bytes = 4 + 4 + 4 + 8 + 4;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

template <class T>
void put(std::FILE* f, const T& v) {
  if (std::fwrite(&v, sizeof(T), 1, f) != 1)
    throw SnapshotError(SnapshotError::Kind::io, "snapshot: short write");
}

template <class T>
void get(std::FILE* f, T& v) {
  if (std::fread(&v, sizeof(T), 1, f) != 1)
    throw SnapshotError(SnapshotError::Kind::io, "snapshot: short read");
}

inline void put_c(std::FILE* f, const Complex& z) {
  put(f, z.real());
  put(f, z.imag());
}

inline Complex get_c(std::FILE* f) {
  double re, im;
  get(f, re);
  get(f, im);
  return {re, im};
}

}  // namespace detail_snapshot

inline void write_snapshot(const std::string& path, const U1Connection& a, const SUnConnection& b,
                           const SpinorField& psi, double alpha, const TorusLattice& lat) {
  using namespace detail_snapshot;
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw SnapshotError(SnapshotError::Kind::io, "snapshot: cannot open " + path);
  std::FILE* fp = f.get();
  std::fwrite("SWN3", 1, 4, fp);
  put<std::uint32_t>(fp, kVersion);
  put<std::uint32_t>(fp, static_cast<std::uint32_t>(lat.n_per_axis));
  put(fp, lat.side_length);
  put<std::uint32_t>(fp, static_cast<std::uint32_t>(psi.n));
  int V = lat.sites();
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax) put_c(fp, a.at(s, ax));
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax)
      for (int r = 0; r < psi.n; ++r)
        for (int c = 0; c < psi.n; ++c)
          put_c(fp, b.is_trivial ? (r == c ? Complex(1, 0) : Complex(0, 0)) : b.at(s, ax)(r, c));
  for (int s = 0; s < V; ++s)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < psi.n; ++c) put_c(fp, psi.psi[s](r, c));
  put(fp, alpha);
  if (std::fflush(fp) != 0) throw SnapshotError(SnapshotError::Kind::io, "snapshot: flush failed");
}

inline Snapshot load_snapshot(const std::string& path) {
  using namespace detail_snapshot;
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw SnapshotError(SnapshotError::Kind::io, "snapshot: cannot open " + path);
  std::FILE* fp = f.get();

  char magic[4];
  if (std::fread(magic, 1, 4, fp) != 4)
    throw SnapshotError(SnapshotError::Kind::size_mismatch, "snapshot: truncated header");
  if (std::memcmp(magic, "SWN3", 4) != 0)
    throw SnapshotError(SnapshotError::Kind::bad_magic, "snapshot: bad magic");
  std::uint32_t version, N, n;
  double L;
  try {
    get(fp, version);
    get(fp, N);
    get(fp, L);
    get(fp, n);
  } catch (const SnapshotError&) {
    throw SnapshotError(SnapshotError::Kind::size_mismatch, "snapshot: truncated header");
  }
  if (version != kVersion)
    throw SnapshotError(SnapshotError::Kind::bad_version,
                        "snapshot: version " + std::to_string(version) + " != " +
                            std::to_string(kVersion));
  if (N < 4 || n < 1 || n > 4 || !(L > 0.0))
    throw SnapshotError(SnapshotError::Kind::size_mismatch, "snapshot: implausible header fields");

  std::fseek(fp, 0, SEEK_END);
  std::uint64_t actual = static_cast<std::uint64_t>(std::ftell(fp));
  std::uint64_t expected = header_bytes + payload_bytes(N, n);
  if (actual != expected)
    throw SnapshotError(SnapshotError::Kind::size_mismatch,
                        "snapshot: file has " + std::to_string(actual) + " bytes, expected " +
                            std::to_string(expected));
  std::fseek(fp, static_cast<long>(header_bytes), SEEK_SET);

  Snapshot snap;
  snap.N = static_cast<int>(N);
  snap.L = L;
  snap.n = static_cast<int>(n);
  TorusLattice lat = build_lattice(snap.N, snap.L);
  int V = lat.sites();

  snap.a.link.resize(static_cast<size_t>(V) * 3);
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax) snap.a.at(s, ax) = get_c(fp);

  snap.b.n = snap.n;
  snap.b.is_trivial = false;
  snap.b.link.assign(static_cast<size_t>(V) * 3, LinkMat::Identity(snap.n, snap.n));
  bool all_identity = true;
  for (int s = 0; s < V; ++s)
    for (int ax = 0; ax < 3; ++ax) {
      LinkMat m(snap.n, snap.n);
      for (int r = 0; r < snap.n; ++r)
        for (int c = 0; c < snap.n; ++c) m(r, c) = get_c(fp);
      if ((m - LinkMat::Identity(snap.n, snap.n)).norm() != 0.0) all_identity = false;
      snap.b.at(s, ax) = m;
    }
  if (all_identity) {
    snap.b.is_trivial = true;
    snap.b.link.clear();
  }

  snap.psi = SpinorField::zero(lat, snap.n);
  for (int s = 0; s < V; ++s)
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < snap.n; ++c) snap.psi.psi[s](r, c) = get_c(fp);
  refresh_norm(snap.psi, lat);
  get(fp, snap.alpha);
  return snap;
}

}  // namespace swn

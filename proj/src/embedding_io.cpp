#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "pte/embedding.hpp"

namespace pte {
namespace {

constexpr std::string_view kMagic = "PTEV1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_ptev1(const RowMatrix<double>& rows) {
  std::string out(kMagic);
  out.reserve(kMagic.size() + 8 + 4 * static_cast<std::size_t>(rows.size()));
  put_u32(out, static_cast<std::uint32_t>(rows.rows()));
  put_u32(out, static_cast<std::uint32_t>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = 0; j < rows.cols(); ++j)
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(rows(i, j))));
  return out;
}

RowMatrix<double> decode_ptev1(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic)
    throw InputError("not a PTEV1 embedding file (bad magic)");
  const std::uint32_t n = get_u32(bytes, 5);
  const std::uint32_t dim = get_u32(bytes, 9);
  const std::size_t expected = 13 + 4ull * n * dim;
  if (bytes.size() != expected)
    throw InputError("PTEV1 size mismatch: header says " + std::to_string(n) + "x" +
                     std::to_string(dim) + ", file has " + std::to_string(bytes.size()) +
                     " bytes");
  RowMatrix<double> out(n, dim);
  std::size_t at = 13;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < dim; ++j, at += 4)
      out(i, j) = std::bit_cast<float>(get_u32(bytes, at));
  return out;
}

void write_ptev1(const std::filesystem::path& path, const RowMatrix<double>& rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_ptev1(rows);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

RowMatrix<double> read_ptev1(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_ptev1(ss.str());
}

}  // namespace pte

#include "pics/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace pics::io {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put_le64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double get_le64(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string encode_elements(const ComplexArray& a) {
  std::string out;
  out.reserve(a.size() * 16);
  for (const auto& v : a.vector()) {
    put_le64(out, v.real());
    put_le64(out, v.imag());
  }
  return out;
}

std::vector<cplx> decode_elements(const char* p, std::size_t n) {
  std::vector<cplx> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = cplx(get_le64(p + 16 * i), get_le64(p + 16 * i + 8));
  return data;
}

Extents parse_extents(const std::string& line, const std::string& where) {
  std::istringstream ls(line);
  Extents ext;
  std::string tok;
  while (ls >> tok) {
    if (tok.find_first_not_of("0123456789") != std::string::npos) {
      throw std::runtime_error(where + ": bad extent '" + tok + "'");
    }
    ext.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (ext.empty()) throw std::runtime_error(where + ": no extents in header");
  return ext;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

ComplexArray read_array(const std::string& base) {
  const std::string hdr_path = base + ".hdr";
  std::istringstream hdr(read_file(hdr_path));
  std::string magic, ext_line;
  std::getline(hdr, magic);
  if (!magic.empty() && magic.back() == '\r') magic.pop_back();
  if (magic != kHeaderMagic) throw std::runtime_error(hdr_path + ": missing '" + kHeaderMagic + "' header line");
  std::getline(hdr, ext_line);
  Extents ext = parse_extents(ext_line, hdr_path);
  const std::string bytes = read_file(base + ".dat");
  const std::size_t n = element_count(ext);
  if (bytes.size() != n * 16) {
    throw std::runtime_error(base + ".dat: expected " + std::to_string(n * 16) + " bytes for extents " +
                             format_extents(ext) + ", found " + std::to_string(bytes.size()));
  }
  return ComplexArray(std::move(ext), decode_elements(bytes.data(), n));
}

void write_array(const std::string& base, const ComplexArray& array) {
  std::string hdr = std::string(kHeaderMagic) + "\n";
  for (std::size_t d = 0; d < array.rank(); ++d) {
    if (d) hdr += ' ';
    hdr += std::to_string(array.extent(d));
  }
  hdr += '\n';
  write_file_atomic(base + ".dat", encode_elements(array));
  write_file_atomic(base + ".hdr", hdr);
}

bool array_exists(const std::string& base) {
  return fs::exists(base + ".hdr") && fs::exists(base + ".dat");
}

ComplexArray read_npy(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0) {
    throw std::runtime_error(path.string() + ": not a .npy file");
  }
  const int major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len, offset;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    offset = 10;
  } else {
    header_len = 0;
    for (int b = 0; b < 4; ++b) header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + b])) << (8 * b);
    offset = 12;
  }
  const std::string header = bytes.substr(offset, header_len);
  std::smatch m;
  if (!std::regex_search(header, m, std::regex("'descr':\\s*'([^']*)'"))) {
    throw std::runtime_error(path.string() + ": npy header without descr");
  }
  const std::string descr = m[1];
  if (descr != "<c16") throw std::runtime_error(path.string() + ": only complex128 ('<c16') is supported, got " + descr);
  const bool fortran = std::regex_search(header, std::regex("'fortran_order':\\s*True"));
  if (!std::regex_search(header, m, std::regex("'shape':\\s*\\(([^)]*)\\)"))) {
    throw std::runtime_error(path.string() + ": npy header without shape");
  }
  std::string shape = m[1];
  for (auto& c : shape) if (c == ',') c = ' ';
  Extents ext = shape.find_first_not_of(' ') == std::string::npos ? Extents{1} : parse_extents(shape, path.string());
  const std::size_t n = element_count(ext);
  const std::size_t data_off = offset + header_len;
  if (bytes.size() != data_off + 16 * n) throw std::runtime_error(path.string() + ": data length mismatch");
  auto raw = decode_elements(bytes.data() + data_off, n);
  if (fortran || ext.size() == 1) return ComplexArray(std::move(ext), std::move(raw));
  // C order: last index fastest in `raw`.
  ComplexArray out(ext);
  std::vector<std::size_t> idx(ext.size(), 0);
  for (std::size_t c = 0; c < n; ++c) {
    out[out.offset(idx)] = raw[c];
    for (std::size_t d = ext.size(); d-- > 0;) {
      if (++idx[d] < ext[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

void write_npy(const fs::path& path, const ComplexArray& array) {
  std::string dict = "{'descr': '<c16', 'fortran_order': True, 'shape': (";
  for (std::size_t d = 0; d < array.rank(); ++d) {
    dict += std::to_string(array.extent(d));
    if (array.rank() == 1 || d + 1 < array.rank()) dict += ",";
    if (d + 1 < array.rank()) dict += " ";
  }
  dict += "), }";
  std::size_t total = 10 + dict.size() + 1;
  dict.append((64 - total % 64) % 64, ' ');
  dict += '\n';
  std::string out = "\x93NUMPY";
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xff));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
  out += dict;
  out += encode_elements(array);
  write_file_atomic(path, out);
}

}  // namespace pics::io

#include "spml/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "spml/errors.hpp"

namespace spml::io {
namespace {

using json = nlohmann::json;

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
    return value;
  }
}

const char* dtype_name(DType t) { return t == DType::F32 ? "f32" : "f64"; }

template <typename T>
void write_impl(const std::filesystem::path& path, const Matrix<T>& m, DType dtype,
                const std::string& extra_json) {
  json sidecar;
  try {
    sidecar = json::parse(extra_json);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid sidecar extras: " + std::string(e.what()));
  }
  if (!sidecar.is_object()) throw ConfigError("sidecar extras must be a JSON object");
  sidecar["n"] = m.rows();
  sidecar["d"] = m.cols();
  sidecar["dtype"] = dtype_name(dtype);
  sidecar["order"] = "row-major";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (T v : m.values()) {
    T le = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
  }
  if (!out) throw DataError("write failed: " + path.string());
  write_text(sidecar_path(path), sidecar.dump(2) + "\n");
}

template <typename T>
Matrix<T> read_impl(const std::filesystem::path& path, DType expected) {
  json sidecar;
  try {
    sidecar = json::parse(read_text(sidecar_path(path)));
  } catch (const json::exception& e) {
    throw DataError("malformed sidecar for " + path.string() + ": " + e.what());
  }
  std::size_t n = 0, d = 0;
  try {
    n = sidecar.at("n").get<std::size_t>();
    d = sidecar.at("d").get<std::size_t>();
    if (sidecar.at("dtype").get<std::string>() != dtype_name(expected)) {
      throw DataError("unexpected dtype in sidecar for " + path.string() + ": wanted " +
                      dtype_name(expected));
    }
    if (sidecar.contains("order") && sidecar["order"].get<std::string>() != "row-major") {
      throw DataError("only row-major matrices are supported: " + path.string());
    }
  } catch (const json::exception& e) {
    throw DataError("malformed sidecar for " + path.string() + ": " + e.what());
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  const auto expected_bytes = static_cast<std::uintmax_t>(n) * d * sizeof(T);
  std::error_code ec;
  const auto actual_bytes = std::filesystem::file_size(path, ec);
  if (ec || actual_bytes != expected_bytes) {
    throw DataError("dimension mismatch: " + path.string() + " has " +
                    std::to_string(actual_bytes) + " bytes, sidecar implies " +
                    std::to_string(expected_bytes));
  }
  std::vector<T> data(n * d);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(expected_bytes));
  if (!in) throw DataError("short read: " + path.string());
  for (auto& v : data) {
    v = to_little_endian(v);
    if (!std::isfinite(v)) throw DataError("non-finite value in " + path.string());
  }
  return Matrix<T>(n, d, std::move(data));
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_binary_matrix(const std::filesystem::path& path, const Matrix<float>& m,
                         const std::string& extra_json) {
  write_impl(path, m, DType::F32, extra_json);
}

void write_binary_matrix(const std::filesystem::path& path, const Matrix<double>& m,
                         const std::string& extra_json) {
  write_impl(path, m, DType::F64, extra_json);
}

Matrix<float> read_binary_matrix_f32(const std::filesystem::path& path) {
  return read_impl<float>(path, DType::F32);
}

Matrix<double> read_binary_matrix_f64(const std::filesystem::path& path) {
  return read_impl<double>(path, DType::F64);
}

Matrix<int> read_int_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::vector<int> values;
  std::size_t cols = 0, rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      int v = 0;
      try {
        v = std::stoi(cell, &pos);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(rows + 1) + ": not an integer: '" +
                        cell + "'");
      }
      while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) ++pos;
      if (pos != cell.size()) {
        throw DataError(path.string() + ":" + std::to_string(rows + 1) + ": not an integer: '" +
                        cell + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw DataError(path.string() + ":" + std::to_string(rows + 1) + ": expected " +
                      std::to_string(cols) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0 || cols == 0) throw DataError("empty label file: " + path.string());
  return Matrix<int>(rows, cols, std::move(values));
}

void write_int_csv(const std::filesystem::path& path, const Matrix<int>& m) {
  std::ostringstream out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
  write_text(path, out.str());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace spml::io

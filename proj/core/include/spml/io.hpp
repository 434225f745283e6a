#pragma once

#include <filesystem>
#include <string>

#include "spml/matrix.hpp"

namespace spml::io {

enum class DType { F32, F64 };

// Binary little-endian row-major matrix with a JSON sidecar at `<path>.json`:
// {"n": rows, "d": cols, "dtype": "f32"|"f64", "order": "row-major", ...extra}.
// `extra_json` is a JSON object whose members are merged into the sidecar.
void write_binary_matrix(const std::filesystem::path& path, const Matrix<float>& m,
                         const std::string& extra_json = "{}");
void write_binary_matrix(const std::filesystem::path& path, const Matrix<double>& m,
                         const std::string& extra_json = "{}");

Matrix<float> read_binary_matrix_f32(const std::filesystem::path& path);
Matrix<double> read_binary_matrix_f64(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

// Integer CSV without header.
Matrix<int> read_int_csv(const std::filesystem::path& path);
void write_int_csv(const std::filesystem::path& path, const Matrix<int>& m);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spml::io

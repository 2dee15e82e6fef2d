#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>

namespace pidiar {

// Row-major float32 matrix, the in-memory image of an EMB1 payload.
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// `key: value` lines stored next to a payload as `<basename>.meta`.
using Sidecar = std::map<std::string, std::string>;

// EMB1 payload: ASCII "EMB1", uint32 LE rows, uint32 LE cols, rows*cols float32 LE.
std::string encode_emb1(const FloatMatrix &m);
// Throws FormatError on bad magic, truncation, trailing bytes or non-finite values.
FloatMatrix decode_emb1(const std::string &bytes);

std::string encode_sidecar(const Sidecar &meta);
Sidecar decode_sidecar(const std::string &text);

// `foo/bar.emb` -> `foo/bar.meta`
std::string sidecar_path(const std::string &payload_path);

void write_container(const std::string &path, const FloatMatrix &payload, const Sidecar &meta);
// Reads payload and sidecar; when `expected_type` is non-empty the sidecar
// `type` key must match it.
std::pair<FloatMatrix, Sidecar> read_container(const std::string &path,
                                               const std::string &expected_type = "");

// Typed sidecar lookups; throw FormatError(0, ...) when missing or malformed.
std::string meta_string(const Sidecar &meta, const std::string &key);
double meta_double(const Sidecar &meta, const std::string &key);
long meta_int(const Sidecar &meta, const std::string &key);
std::string format_double(double v);

} // namespace pidiar

#include "pidiar/container.hpp"
#include "pidiar/annotation.hpp"
#include "pidiar/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

namespace pidiar {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string &in, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    return v;
}

std::string trim(const std::string &s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string encode_emb1(const FloatMatrix &m) {
    std::string out;
    out.reserve(kHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
    out.append(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    const float *data = m.data();
    for (Eigen::Index i = 0; i < m.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(data[i]));
    return out;
}

FloatMatrix decode_emb1(const std::string &bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(0, "bad magic, expected EMB1");
    if (bytes.size() < kHeaderBytes) throw FormatError(bytes.size(), "truncated header");
    const std::uint32_t rows = get_u32(bytes, 4);
    const std::uint32_t cols = get_u32(bytes, 8);
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    const std::size_t need = kHeaderBytes + 4 * count;
    if (bytes.size() < need) {
        std::size_t have_rows = cols == 0 ? 0 : (bytes.size() - kHeaderBytes) / (4 * static_cast<std::size_t>(cols));
        throw FormatError(bytes.size(), "truncated payload: header declares " + std::to_string(rows) +
                                            " rows, file holds " + std::to_string(have_rows));
    }
    if (bytes.size() > need) throw FormatError(need, "trailing bytes after payload");
    FloatMatrix m(rows, cols);
    float *data = m.data();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t pos = kHeaderBytes + 4 * i;
        float v = std::bit_cast<float>(get_u32(bytes, pos));
        if (!std::isfinite(v)) throw FormatError(pos, "non-finite value");
        data[i] = v;
    }
    return m;
}

std::string encode_sidecar(const Sidecar &meta) {
    std::string out;
    for (const auto &[k, v] : meta) out += k + ": " + v + "\n";
    return out;
}

Sidecar decode_sidecar(const std::string &text) {
    Sidecar meta;
    std::size_t pos = 0;
    std::size_t offset = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = trim(text.substr(pos, end - pos));
        if (!line.empty() && line[0] != '#') {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) throw FormatError(offset, "sidecar line without ':'");
            meta[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
        }
        offset = end + 1;
        pos = end + 1;
    }
    return meta;
}

std::string sidecar_path(const std::string &payload_path) {
    return std::filesystem::path(payload_path).replace_extension(".meta").string();
}

void write_container(const std::string &path, const FloatMatrix &payload, const Sidecar &meta) {
    for (Eigen::Index i = 0; i < payload.size(); ++i)
        if (!std::isfinite(payload.data()[i])) throw FormatError(12 + 4 * static_cast<std::size_t>(i), "non-finite value");
    write_text_file(path, encode_emb1(payload));
    write_text_file(sidecar_path(path), encode_sidecar(meta));
}

std::pair<FloatMatrix, Sidecar> read_container(const std::string &path, const std::string &expected_type) {
    FloatMatrix m = decode_emb1(read_text_file(path));
    Sidecar meta = decode_sidecar(read_text_file(sidecar_path(path)));
    if (!expected_type.empty()) {
        auto it = meta.find("type");
        if (it == meta.end() || it->second != expected_type)
            throw FormatError(0, "'" + path + "' is not a " + expected_type + " container");
    }
    return {std::move(m), std::move(meta)};
}

std::string meta_string(const Sidecar &meta, const std::string &key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw FormatError(0, "sidecar is missing '" + key + "'");
    return it->second;
}

double meta_double(const Sidecar &meta, const std::string &key) {
    const std::string s = meta_string(meta, key);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw FormatError(0, "sidecar key '" + key + "' is not a number: '" + s + "'");
    return v;
}

long meta_int(const Sidecar &meta, const std::string &key) {
    const std::string s = meta_string(meta, key);
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw FormatError(0, "sidecar key '" + key + "' is not an integer: '" + s + "'");
    return v;
}

std::string format_double(double v) {
    // Shortest form that round-trips.
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace pidiar

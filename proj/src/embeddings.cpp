#include "pidiar/embeddings.hpp"
#include "pidiar/error.hpp"

#include <cmath>
#include <stdexcept>

namespace pidiar {

namespace {
constexpr double kTimeEps = 1e-9;
}

std::vector<Window> window_times(double duration, double size, double shift) {
    if (!(size > 0.0) || !(shift > 0.0)) throw std::invalid_argument("window size and shift must be positive");
    if (duration + kTimeEps < size)
        throw std::invalid_argument("recording of " + std::to_string(duration) +
                                    " s is shorter than one window of " + std::to_string(size) + " s");
    const auto last = static_cast<long>(std::floor((duration - size) / shift + 0.5 + kTimeEps));
    std::vector<Window> out;
    out.reserve(static_cast<std::size_t>(last + 1));
    for (long i = 0; i <= last; ++i) {
        double on = static_cast<double>(i) * shift;
        out.push_back({on, std::min(on + size, duration)});
    }
    return out;
}

EmbeddingSequence::EmbeddingSequence(std::string recording_id, FloatMatrix vectors, double window_size,
                                     double window_shift, double recording_duration)
    : recording_id_(std::move(recording_id)), vectors_(std::move(vectors)), window_size_(window_size),
      window_shift_(window_shift), recording_duration_(recording_duration) {
    if (vectors_.rows() < 1 || vectors_.cols() < 1) throw std::invalid_argument("embedding matrix must be non-empty");
    if (!vectors_.allFinite()) throw std::invalid_argument("embedding matrix has non-finite values");
    const auto expected = window_times(recording_duration_, window_size_, window_shift_).size();
    if (static_cast<std::size_t>(vectors_.rows()) != expected)
        throw std::invalid_argument("recording '" + recording_id_ + "' has " + std::to_string(vectors_.rows()) +
                                    " embeddings but its timing implies " + std::to_string(expected));
}

std::vector<Window> EmbeddingSequence::windows() const {
    return window_times(recording_duration_, window_size_, window_shift_);
}

void write_embeddings(const EmbeddingSequence &seq, const std::string &path) {
    Sidecar meta{
        {"type", "embeddings"},
        {"recording_id", seq.recording_id()},
        {"window_size", format_double(seq.window_size())},
        {"window_shift", format_double(seq.window_shift())},
        {"recording_duration", format_double(seq.recording_duration())},
        {"dim", std::to_string(seq.dim())},
    };
    write_container(path, seq.vectors(), meta);
}

EmbeddingSequence read_embeddings(const std::string &path) {
    auto [m, meta] = read_container(path);
    if (meta_int(meta, "dim") != m.cols())
        throw FormatError(8, "sidecar dim " + meta_string(meta, "dim") + " disagrees with payload");
    try {
        return EmbeddingSequence(meta_string(meta, "recording_id"), std::move(m), meta_double(meta, "window_size"),
                                 meta_double(meta, "window_shift"), meta_double(meta, "recording_duration"));
    } catch (const std::invalid_argument &e) {
        throw FormatError(0, std::string("'") + path + "': " + e.what());
    }
}

} // namespace pidiar

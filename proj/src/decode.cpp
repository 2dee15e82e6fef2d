#include "pidiar/error.hpp"
#include "pidiar/reseg.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace pidiar {

std::string PosteriorMatrix::speaker_label(Eigen::Index c) const {
    if (!speakers.empty()) return speakers[static_cast<std::size_t>(c)];
    return "spk" + std::to_string(c + 1);
}

void PosteriorMatrix::validate() const {
    if (!(frame_shift > 0.0) || !std::isfinite(frame_shift)) throw std::invalid_argument("frame shift must be > 0");
    if (subsample_factor < 1) throw std::invalid_argument("subsample factor must be >= 1");
    if (!(offset >= 0.0)) throw std::invalid_argument("posterior offset must be >= 0");
    if (!values.allFinite() || (values.array() < 0.0).any() || (values.array() > 1.0).any())
        throw std::invalid_argument("posteriors must lie in [0, 1]");
    if (!speakers.empty() && static_cast<Eigen::Index>(speakers.size()) != values.cols())
        throw std::invalid_argument("speaker label count differs from posterior columns");
}

void write_posteriors(const PosteriorMatrix &post, const std::string &path) {
    post.validate();
    Sidecar meta{{"type", "posteriors"},
                 {"recording_id", post.recording_id},
                 {"frame_shift", format_double(post.frame_shift)},
                 {"subsample_factor", std::to_string(post.subsample_factor)},
                 {"offset", format_double(post.offset)}};
    if (!post.speakers.empty()) {
        std::string joined;
        for (const auto &s : post.speakers) joined += (joined.empty() ? "" : ",") + s;
        meta["speakers"] = joined;
    }
    write_container(path, post.values.cast<float>(), meta);
}

PosteriorMatrix read_posteriors(const std::string &path) {
    auto [m, meta] = read_container(path, "posteriors");
    PosteriorMatrix post;
    post.recording_id = meta_string(meta, "recording_id");
    post.values = m.cast<double>();
    post.frame_shift = meta_double(meta, "frame_shift");
    post.subsample_factor = static_cast<int>(meta_int(meta, "subsample_factor"));
    if (meta.count("offset")) post.offset = meta_double(meta, "offset");
    if (meta.count("speakers")) {
        std::stringstream ss(meta.at("speakers"));
        std::string item;
        while (std::getline(ss, item, ',')) post.speakers.push_back(item);
    }
    try {
        post.validate();
    } catch (const std::invalid_argument &e) {
        throw FormatError(0, e.what());
    }
    return post;
}

Annotation decode_posteriors(const PosteriorMatrix &post, double threshold, const Annotation &sad, int median_window) {
    post.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("decode threshold must be in (0, 1)");
    if (median_window < 1) throw std::invalid_argument("median window must be >= 1");
    const Eigen::Index T = post.frames(), S = post.num_speakers();
    Annotation out(post.recording_id);
    if (T == 0 || S == 0) return out;

    Eigen::MatrixXi active = Eigen::MatrixXi::Zero(T, S);
    for (Eigen::Index t = 0; t < T; ++t) {
        bool any = false;
        for (Eigen::Index s = 0; s < S; ++s) {
            if (post.values(t, s) >= threshold) {
                active(t, s) = 1;
                any = true;
            }
        }
        if (!any) {
            Eigen::Index arg = 0;
            post.values.row(t).maxCoeff(&arg);
            active(t, arg) = 1;
        }
    }

    // Binary median = majority within the window, edges replicated.
    const Eigen::Index half = median_window / 2;
    Eigen::MatrixXi smooth = active;
    if (median_window > 1) {
        for (Eigen::Index s = 0; s < S; ++s) {
            for (Eigen::Index t = 0; t < T; ++t) {
                Eigen::Index votes = 0, n = 0;
                for (Eigen::Index k = t - half; k <= t - half + median_window - 1; ++k) {
                    votes += active(std::clamp<Eigen::Index>(k, 0, T - 1), s);
                    ++n;
                }
                smooth(t, s) = 2 * votes > n ? 1 : 0;
            }
        }
    }

    const std::vector<std::pair<double, double>> speech = sad.speech_regions();
    Annotation raw(post.recording_id);
    for (Eigen::Index s = 0; s < S; ++s) {
        Eigen::Index t = 0;
        while (t < T) {
            if (!smooth(t, s)) {
                ++t;
                continue;
            }
            Eigen::Index e = t;
            while (e < T && smooth(e, s)) ++e;
            raw.add(post.row_onset(t), post.row_onset(e) - post.row_onset(t), post.speaker_label(s));
            t = e;
        }
    }
    return crop(raw, speech);
}

} // namespace pidiar

#pragma once

#include "nbeatsx/data/frame.hpp"
#include "nbeatsx/data/split.hpp"
#include "nbeatsx/model/network.hpp"
#include "nbeatsx/training/normalization.hpp"

#include <memory>
#include <span>
#include <vector>

namespace nbeatsx {

/// One training example: L past targets, H future targets, L+H covariate rows.
struct Window {
    std::vector<double> y_back;
    std::vector<double> y_future;
    Tensor covariates;  // (L+H) x N_x, or a placeholder when N_x == 0
    HourStamp origin = 0;
};

inline std::size_t window_count(std::size_t rows, std::size_t L, std::size_t H, std::size_t stride) {
    if (stride == 0) throw ConfigError("windows: stride must be positive");
    if (rows < L + H) {
        throw DataError("windows: " + std::to_string(rows) + " rows cannot hold a window of " +
                        std::to_string(L + H));
    }
    return (rows - L - H) / stride + 1;
}

/// Windows starting every `stride` hours from the first row.
inline std::vector<Window> make_windows(const SeriesFrame& f, std::size_t L, std::size_t H, std::size_t stride) {
    const std::size_t n = window_count(f.size(), L, H, stride);
    const std::size_t nx = f.n_covariates();
    std::vector<Window> out;
    out.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
        const std::size_t s = w * stride;
        Window win;
        win.y_back.assign(f.target.begin() + static_cast<std::ptrdiff_t>(s),
                          f.target.begin() + static_cast<std::ptrdiff_t>(s + L));
        win.y_future.assign(f.target.begin() + static_cast<std::ptrdiff_t>(s + L),
                            f.target.begin() + static_cast<std::ptrdiff_t>(s + L + H));
        if (nx > 0) {
            win.covariates = Tensor({L + H, nx});
            for (std::size_t t = 0; t < L + H; ++t)
                for (std::size_t c = 0; c < nx; ++c) win.covariates.at(t, c) = f.covariates[c][s + t];
        }
        win.origin = f.timestamps[s + L];
        out.push_back(std::move(win));
    }
    return out;
}

/// A normalised copy of a frame's columns, shared by window sets.
struct PreparedSeries {
    std::vector<HourStamp> timestamps;
    std::vector<double> target;
    std::vector<std::vector<double>> covariates;

    static std::shared_ptr<const PreparedSeries> from(const SeriesFrame& f, const NormalizationStats& st) {
        if (st.covariates.size() != f.n_covariates()) {
            throw DataError("normalization stats cover " + std::to_string(st.covariates.size()) +
                            " covariates, frame has " + std::to_string(f.n_covariates()));
        }
        auto p = std::make_shared<PreparedSeries>();
        p->timestamps = f.timestamps;
        p->target = apply_column(st.target, f.target);
        for (std::size_t c = 0; c < f.n_covariates(); ++c) p->covariates.push_back(apply_column(st.covariates[c], f.covariates[c]));
        return p;
    }

    std::size_t size() const noexcept { return timestamps.size(); }
};

/// Window start rows over a prepared series, gathered into batches on demand.
class WindowSet {
public:
    WindowSet() = default;
    WindowSet(std::shared_ptr<const PreparedSeries> data, std::size_t L, std::size_t H, std::vector<std::size_t> starts)
        : data_(std::move(data)), L_(L), H_(H), starts_(std::move(starts)) {
        for (std::size_t s : starts_) {
            if (s + L_ + H_ > data_->size()) throw DataError("windows: start row beyond the series");
        }
    }

    std::size_t size() const noexcept { return starts_.size(); }
    bool empty() const noexcept { return starts_.empty(); }
    const std::vector<std::size_t>& starts() const noexcept { return starts_; }
    HourStamp origin(std::size_t i) const { return data_->timestamps[starts_[i] + L_]; }

    /// Model input for the windows at the given positions.
    ModelInput input(std::span<const std::size_t> which) const {
        const std::size_t B = which.size(), nx = data_->covariates.size();
        ModelInput in{Tensor({B, L_}), {}};
        if (nx > 0) in.covariates = Tensor({B, L_ + H_, nx});
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t s = starts_.at(which[b]);
            std::copy_n(data_->target.begin() + static_cast<std::ptrdiff_t>(s), L_,
                        in.y_back.data().begin() + static_cast<std::ptrdiff_t>(b * L_));
            for (std::size_t t = 0; t < L_ + H_; ++t)
                for (std::size_t c = 0; c < nx; ++c) in.covariates[(b * (L_ + H_) + t) * nx + c] = data_->covariates[c][s + t];
        }
        return in;
    }

    /// Future targets [B, H]; a non-finite value means the window reaches unseen data.
    Tensor target(std::span<const std::size_t> which) const {
        Tensor y({which.size(), H_});
        for (std::size_t b = 0; b < which.size(); ++b) {
            const std::size_t s = starts_.at(which[b]);
            for (std::size_t h = 0; h < H_; ++h) y.at(b, h) = data_->target[s + L_ + h];
        }
        if (!y.all_finite()) throw DataError("windows: target span contains unavailable values");
        return y;
    }

    std::vector<std::size_t> all() const {
        std::vector<std::size_t> idx(size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }

private:
    std::shared_ptr<const PreparedSeries> data_;
    std::size_t L_ = 0, H_ = 0;
    std::vector<std::size_t> starts_;
};

inline bool overlaps(HourRange a, HourRange b) { return a.begin < b.end && b.begin < a.end; }

/// Training windows: start every `stride` rows, forecast span ends by `limit`
/// and does not touch any early-stop range.
inline std::vector<std::size_t> fit_window_starts(std::size_t limit, std::size_t L, std::size_t H, std::size_t stride,
                                                  const std::vector<HourRange>& held_out) {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s + L + H <= limit; s += stride) {
        const HourRange fore{s + L, s + L + H};
        bool clash = false;
        for (const auto& w : held_out) clash = clash || overlaps(fore, w);
        if (!clash) out.push_back(s);
    }
    return out;
}

/// Early-stop windows: one per day inside each held-out range, forecast span contained in it.
inline std::vector<std::size_t> early_stop_window_starts(const std::vector<HourRange>& held_out, std::size_t L,
                                                         std::size_t H) {
    std::vector<std::size_t> out;
    for (const auto& w : held_out)
        for (std::size_t o = w.begin; o + H <= w.end; o += kHoursPerDay)
            if (o >= L) out.push_back(o - L);
    return out;
}

}  // namespace nbeatsx

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ipwres {

//! Development-time grid 0 = c_0 < c_1 < ... < c_m = omega. Intervals are
//! half-open [c_{n-1}, c_n); the point t = omega belongs to the last one.
class TimeGrid {
  public:
    explicit TimeGrid(std::vector<double> cut_points) : cuts_(std::move(cut_points)) {
        if (cuts_.size() < 2) throw std::invalid_argument("TimeGrid: need at least two cut points");
        if (cuts_.front() != 0.0) throw std::invalid_argument("TimeGrid: first cut must be 0");
        for (std::size_t i = 1; i < cuts_.size(); ++i)
            if (!(cuts_[i] > cuts_[i - 1]))
                throw std::invalid_argument("TimeGrid: cut points must be strictly increasing");
    }

    //! Regular grid of the given width; the final interval is shortened to end
    //! exactly at omega when width does not divide it.
    static TimeGrid regular(double omega, double width) {
        if (!(omega > 0.0) || !(width > 0.0))
            throw std::invalid_argument("TimeGrid::regular: omega and width must be positive");
        std::vector<double> cuts{0.0};
        for (double c = width; c < omega - 1e-12 * omega; c += width) cuts.push_back(c);
        cuts.push_back(omega);
        return TimeGrid(std::move(cuts));
    }

    const std::vector<double>& cuts() const { return cuts_; }
    std::size_t intervals() const { return cuts_.size() - 1; }
    double omega() const { return cuts_.back(); }
    double lower(std::size_t n) const { return cuts_[n]; }
    double upper(std::size_t n) const { return cuts_[n + 1]; }
    double width(std::size_t n) const { return cuts_[n + 1] - cuts_[n]; }

    //! Index of the interval containing t; t == omega maps to the last one.
    std::size_t interval_of(double t) const {
        if (t < 0.0 || t > omega())
            throw std::out_of_range("TimeGrid::interval_of: t outside [0, omega]");
        if (t >= cuts_[cuts_.size() - 2]) return intervals() - 1;
        std::size_t lo = 0, hi = intervals() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (t < cuts_[mid + 1]) hi = mid; else lo = mid + 1;
        }
        return lo;
    }

    //! |[c_n, c_{n+1}) ∩ [0, t)|, the exposure of interval n up to time t.
    double overlap(std::size_t n, double t) const {
        const double w = std::min(t, upper(n)) - lower(n);
        return w > 0.0 ? std::min(w, width(n)) : 0.0;
    }

    bool operator==(const TimeGrid& other) const { return cuts_ == other.cuts_; }

  private:
    std::vector<double> cuts_;
};

}  // namespace ipwres

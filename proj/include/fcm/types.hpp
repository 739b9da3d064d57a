#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcm {

using Vec = std::vector<double>;

// Thrown on malformed input: bad config values, crossing quantiles,
// malformed CSV rows, unknown sellers. CLI maps it to exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation attempted in the wrong session state (settle before close, ...).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Duplicate session, duplicate settle, duplicate CSV key.
struct ConflictError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Forecast submitted after the session closed. The attempt is recorded and
// the seller stays marked missing for the round.
struct LateSubmissionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ledger replay hit a gap, an out-of-order record, or a state mismatch.
struct ReplayError : std::runtime_error {
    ReplayError(std::size_t record_index, const std::string& what)
        : std::runtime_error("record " + std::to_string(record_index) + ": " + what),
          index(record_index) {}
    std::size_t index;
};

// Per-round availability flags: alpha[i] = 1 when seller i did not submit.
class AvailabilityMask {
public:
    AvailabilityMask() = default;
    explicit AvailabilityMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_)
            if (b > 1) throw ValidationError("availability flags must be 0 or 1");
    }

    static AvailabilityMask all_present(std::size_t n) {
        return AvailabilityMask(std::vector<std::uint8_t>(n, 0));
    }
    static AvailabilityMask all_missing(std::size_t n) {
        return AvailabilityMask(std::vector<std::uint8_t>(n, 1));
    }

    std::size_t size() const { return bits_.size(); }
    bool missing(std::size_t i) const { return bits_[i] != 0; }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    std::size_t available_count() const {
        std::size_t c = 0;
        for (auto b : bits_) c += (b == 0);
        return c;
    }
    bool any_missing() const { return available_count() != size(); }
    bool none_available() const { return available_count() == 0; }

    std::vector<std::size_t> available_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i] == 0) idx.push_back(i);
        return idx;
    }

    bool operator==(const AvailabilityMask& o) const { return bits_ == o.bits_; }

private:
    std::vector<std::uint8_t> bits_;
};

// Dense row-major matrix, just enough for the n-by-n correction term.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const Vec& data() const { return data_; }
    Vec& data() { return data_; }

    // Extend by one zero row and one zero column (seller join).
    void grow() {
        Matrix bigger(rows_ + 1, cols_ + 1, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) bigger(i, j) = (*this)(i, j);
        *this = std::move(bigger);
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec data_;
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace fcm

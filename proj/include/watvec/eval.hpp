#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace watvec::eval {

using Matrix = std::vector<std::vector<double>>;

class EmptyInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NonFiniteInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class TooFewDocs : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KeyMismatch : public std::runtime_error {
public:
    KeyMismatch(std::vector<std::string> only_a, std::vector<std::string> only_b);
    std::vector<std::string> only_a;
    std::vector<std::string> only_b;
};

// ---- box-and-whisker statistics ---------------------------------------

struct BoxStats {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double whisker_low = 0, whisker_high = 0;
    std::vector<double> outliers;  // beyond 1.5*IQR of the quartiles
};

// Quartiles by linear interpolation on the sorted sample (inclusive method).
BoxStats box_stats(std::span<const double> values);

// ---- cosine-similarity-difference distribution -------------------------

struct DiffStats {
    std::vector<double> samples;  // |cosA(i,j) - cosB(i,j)| per unordered pair
    BoxStats box;
    std::size_t n_docs = 0;
    std::size_t n_pairs = 0;
};

// Keys must coincide; pair order follows sorted doc_id, so the sample order
// is deterministic. Dimensions may differ between the two models.
using VectorsById = std::map<std::string, std::vector<double>>;
DiffStats cosine_diff_distribution(const VectorsById& a, const VectorsById& b);

// ---- classification metrics --------------------------------------------

struct ConfusionCounts {
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::int64_t total() const { return tp + tn + fp + fn; }
};

// nullopt marks an undefined metric (zero denominator), never 0 or NaN
struct MetricReport {
    std::optional<double> accuracy, precision, recall, f1;
};

MetricReport classification_metrics(const ConfusionCounts& c);

// ---- PCA to two dimensions ----------------------------------------------

struct Pca2d {
    Matrix projections;  // N x 2
    std::array<double, 2> explained_variance{0.0, 0.0};
    std::array<std::vector<double>, 2> components;  // unit loadings
    bool degenerate_rank = false;  // second eigenvalue vanished; column 2 zeroed
};

// Top-2 eigenpairs of the covariance by orthogonal iteration
// (tolerance 1e-10, at most 10000 sweeps), sign-fixed so the
// largest-magnitude loading of each component is positive.
Pca2d pca_2d(const Matrix& x);

// ---- stage timing ---------------------------------------------------------

class StageTimer {
public:
    struct Stage {
        std::string name;
        double total_seconds = 0;
        std::size_t samples = 0;
        std::optional<double> mean_seconds;  // total/samples, undefined for 0
    };

    void start(const std::string& stage);
    void stop(std::size_t samples_processed = 0);

    // test seam and report merging
    void record(const std::string& stage, double seconds, std::size_t samples);

    std::vector<Stage> report() const;  // stages in first-start order

private:
    struct Entry {
        std::string name;
        double total_seconds = 0;
        std::size_t samples = 0;
    };
    std::vector<Entry> entries_;
    std::optional<std::size_t> running_;
    std::chrono::steady_clock::time_point started_at_{};

    std::size_t entry_for(const std::string& stage);
};

}  // namespace watvec::eval

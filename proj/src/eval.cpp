#include "watvec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "watvec/common.hpp"
#include "watvec/pv.hpp"

namespace watvec::eval {

KeyMismatch::KeyMismatch(std::vector<std::string> a, std::vector<std::string> b)
    : std::runtime_error([&] {
          std::ostringstream ss;
          ss << "KeyMismatch:";
          for (const auto& k : a) ss << " -" << k;
          for (const auto& k : b) ss << " +" << k;
          return ss.str();
      }()),
      only_a(std::move(a)),
      only_b(std::move(b)) {}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double pos = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= n - 1) return sorted[n - 1];
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BoxStats box_stats(std::span<const double> values) {
    if (values.empty()) throw EmptyInput("EmptyInput: box_stats over no values");
    std::vector<double> sorted(values.begin(), values.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) throw NonFiniteInput("NonFinite: box_stats input");
    }
    std::sort(sorted.begin(), sorted.end());

    BoxStats s;
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = quantile_sorted(sorted, 0.25);
    s.median = quantile_sorted(sorted, 0.50);
    s.q3 = quantile_sorted(sorted, 0.75);
    double iqr = s.q3 - s.q1;
    double lo_fence = s.q1 - 1.5 * iqr;
    double hi_fence = s.q3 + 1.5 * iqr;
    // furthest datum inside the fence; never beyond the box itself
    s.whisker_low = s.q1;
    s.whisker_high = s.q3;
    for (double v : sorted) {
        if (v >= lo_fence) {
            s.whisker_low = std::min(v, s.q1);
            break;
        }
    }
    for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
        if (*it <= hi_fence) {
            s.whisker_high = std::max(*it, s.q3);
            break;
        }
    }
    for (double v : sorted) {
        if (v < lo_fence || v > hi_fence) s.outliers.push_back(v);
    }
    return s;
}

DiffStats cosine_diff_distribution(const VectorsById& a, const VectorsById& b) {
    std::vector<std::string> only_a, only_b;
    for (const auto& [k, v] : a) {
        if (!b.contains(k)) only_a.push_back(k);
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k)) only_b.push_back(k);
    }
    if (!only_a.empty() || !only_b.empty()) throw KeyMismatch(std::move(only_a), std::move(only_b));
    if (a.size() < 2) throw TooFewDocs("TooFewDocs: need at least 2 documents");

    std::vector<const std::string*> ids;
    ids.reserve(a.size());
    for (const auto& [k, v] : a) ids.push_back(&k);  // map iteration = sorted

    DiffStats stats;
    stats.n_docs = a.size();
    stats.n_pairs = a.size() * (a.size() - 1) / 2;
    stats.samples.reserve(stats.n_pairs);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            double ca = pv::cosine(a.at(*ids[i]), a.at(*ids[j]));
            double cb = pv::cosine(b.at(*ids[i]), b.at(*ids[j]));
            stats.samples.push_back(std::abs(ca - cb));
        }
    }
    stats.box = box_stats(stats.samples);
    return stats;
}

MetricReport classification_metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.tn < 0 || c.fp < 0 || c.fn < 0) throw std::invalid_argument("negative confusion count");
    if (c.total() == 0) throw EmptyInput("EmptyInput: no evaluated samples");

    MetricReport r;
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0) r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision && r.recall && (*r.precision + *r.recall) > 0) {
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    }
    return r;
}

// ---- PCA ------------------------------------------------------------------

namespace {

// factored out so the projection code can run matrix-vector products
std::vector<double> mat_vec(const Matrix& m, const std::vector<double>& v) {
    std::vector<double> out(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    }
    return out;
}

double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

Pca2d pca_2d(const Matrix& x) {
    const std::size_t n = x.size();
    if (n < 3) throw std::invalid_argument("pca_2d: need at least 3 rows");
    const std::size_t d = x[0].size();
    if (d < 2) throw std::invalid_argument("pca_2d: need at least 2 columns");
    for (const auto& row : x) {
        if (row.size() != d) throw std::invalid_argument("pca_2d: ragged matrix");
        for (double v : row) {
            if (!std::isfinite(v)) throw NonFiniteInput("NonFinite: pca_2d input");
        }
    }

    // column-centered copy
    std::vector<double> mean(d, 0.0);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(n);
    Matrix centered(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) centered[i][j] = x[i][j] - mean[j];
    }

    // covariance, d x d
    Matrix cov(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double vj = centered[i][j];
            if (vj == 0.0) continue;
            for (std::size_t k = j; k < d; ++k) cov[j][k] += vj * centered[i][k];
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            cov[j][k] /= static_cast<double>(n - 1);
            cov[k][j] = cov[j][k];
        }
    }
    double total_var = 0;
    for (std::size_t j = 0; j < d; ++j) total_var += cov[j][j];

    Pca2d out;
    out.projections.assign(n, std::vector<double>(2, 0.0));
    out.components[0].assign(d, 0.0);
    out.components[1].assign(d, 0.0);
    if (total_var == 0.0) {
        out.degenerate_rank = true;
        return out;
    }

    // orthogonal iteration on a deterministic random 2-column start
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::array<std::vector<double>, 2> q;
    for (auto& col : q) {
        col.resize(d);
        for (double& v : col) v = uniform_range(rng, -1.0, 1.0);
    }

    // normalizes q0 and makes q1 a unit vector orthogonal to it; when the
    // image collapses (rank-1 data) q1 is replaced by a deterministic
    // orthogonal fallback so the Ritz step still has a 2-frame to work with
    auto orthonormalize = [&]() {
        double n0 = std::sqrt(vec_dot(q[0], q[0]));
        for (double& v : q[0]) v /= n0;
        double proj = vec_dot(q[1], q[0]);
        for (std::size_t i = 0; i < d; ++i) q[1][i] -= proj * q[0][i];
        double n1 = std::sqrt(vec_dot(q[1], q[1]));
        if (n1 < 1e-13 * std::max(1.0, std::abs(proj))) {
            std::size_t smallest = 0;
            for (std::size_t i = 1; i < d; ++i) {
                if (std::abs(q[0][i]) < std::abs(q[0][smallest])) smallest = i;
            }
            std::fill(q[1].begin(), q[1].end(), 0.0);
            q[1][smallest] = 1.0;
            double p2 = vec_dot(q[1], q[0]);
            for (std::size_t i = 0; i < d; ++i) q[1][i] -= p2 * q[0][i];
            n1 = std::sqrt(vec_dot(q[1], q[1]));
        }
        for (double& v : q[1]) v /= n1;
    };

    orthonormalize();
    double lambda0 = 0, lambda1 = 0;
    // Ritz residual bound; well below the nominal 1e-10 iteration tolerance
    // so the projections hold to 1e-8 even with modest spectral gaps
    const double tol = 1e-13;
    for (int iter = 0; iter < 10000; ++iter) {
        // Rayleigh-Ritz on span(q): rotate to the 2x2 eigenbasis, then test
        // the eigenpair residuals directly
        std::vector<double> cq0 = mat_vec(cov, q[0]);
        std::vector<double> cq1 = mat_vec(cov, q[1]);
        double b00 = vec_dot(q[0], cq0);
        double b01 = vec_dot(q[0], cq1);
        double b11 = vec_dot(q[1], cq1);
        double theta = 0.5 * std::atan2(2 * b01, b00 - b11);
        double c = std::cos(theta), s = std::sin(theta);
        std::vector<double> v0(d), v1(d), r0(d), r1(d);
        for (std::size_t i = 0; i < d; ++i) {
            v0[i] = c * q[0][i] + s * q[1][i];
            v1[i] = -s * q[0][i] + c * q[1][i];
            r0[i] = c * cq0[i] + s * cq1[i];
            r1[i] = -s * cq0[i] + c * cq1[i];
        }
        lambda0 = c * c * b00 + 2 * c * s * b01 + s * s * b11;
        lambda1 = s * s * b00 - 2 * c * s * b01 + c * c * b11;
        if (lambda1 > lambda0) {
            std::swap(lambda0, lambda1);
            std::swap(v0, v1);
            std::swap(r0, r1);
        }
        double res0 = 0, res1 = 0;
        for (std::size_t i = 0; i < d; ++i) {
            double e0 = r0[i] - lambda0 * v0[i];
            double e1 = r1[i] - lambda1 * v1[i];
            res0 += e0 * e0;
            res1 += e1 * e1;
        }
        double scale = std::max(std::abs(lambda0), 1e-300);
        if (std::sqrt(res0) <= tol * scale && std::sqrt(res1) <= tol * scale) {
            q[0] = std::move(v0);
            q[1] = std::move(v1);
            break;
        }
        q[0] = std::move(r0);  // C * ritz vectors: one more power step
        q[1] = std::move(r1);
        if (lambda1 <= 1e-14 * scale) {
            // rank-1 image: r1 is numerically zero, restart from the fallback
            q[1] = v1;
        }
        orthonormalize();
    }

    lambda0 = std::max(lambda0, 0.0);
    lambda1 = std::max(lambda1, 0.0);
    if (lambda1 <= 1e-12 * total_var) {
        out.degenerate_rank = true;
        lambda1 = 0.0;
        std::fill(q[1].begin(), q[1].end(), 0.0);
    }

    // sign convention: largest-magnitude loading positive
    for (auto& col : q) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < d; ++i) {
            if (std::abs(col[i]) > std::abs(col[arg])) arg = i;
        }
        if (col[arg] < 0) {
            for (double& v : col) v = -v;
        }
    }

    out.components[0] = q[0];
    out.components[1] = q[1];
    out.explained_variance = {lambda0 / total_var, lambda1 / total_var};
    for (std::size_t i = 0; i < n; ++i) {
        out.projections[i][0] = vec_dot(centered[i], q[0]);
        out.projections[i][1] = out.degenerate_rank ? 0.0 : vec_dot(centered[i], q[1]);
    }
    return out;
}

// ---- StageTimer -------------------------------------------------------------

std::size_t StageTimer::entry_for(const std::string& stage) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == stage) return i;
    }
    entries_.push_back(Entry{stage, 0.0, 0});
    return entries_.size() - 1;
}

void StageTimer::start(const std::string& stage) {
    if (running_) throw std::logic_error("StageTimer: stage already running");
    running_ = entry_for(stage);
    started_at_ = std::chrono::steady_clock::now();
}

void StageTimer::stop(std::size_t samples_processed) {
    if (!running_) throw std::logic_error("StageTimer: no stage running");
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_at_).count();
    entries_[*running_].total_seconds += elapsed;
    entries_[*running_].samples += samples_processed;
    running_.reset();
}

void StageTimer::record(const std::string& stage, double seconds, std::size_t samples) {
    Entry& e = entries_[entry_for(stage)];
    e.total_seconds += seconds;
    e.samples += samples;
}

std::vector<StageTimer::Stage> StageTimer::report() const {
    std::vector<Stage> out;
    for (const Entry& e : entries_) {
        Stage s;
        s.name = e.name;
        s.total_seconds = e.total_seconds;
        s.samples = e.samples;
        if (e.samples > 0) s.mean_seconds = e.total_seconds / static_cast<double>(e.samples);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace watvec::eval

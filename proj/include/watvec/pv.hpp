#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace watvec::pv {

class EmptyCorpus : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NonFinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class DimensionMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One WAT file, line-split; lines bound the context windows.
struct WatDocument {
    std::string doc_id;
    std::vector<std::vector<std::string>> lines;

    bool empty() const { return lines.empty(); }
    std::size_t token_count() const {
        std::size_t n = 0;
        for (const auto& l : lines) n += l.size();
        return n;
    }
};

// Whitespace tokenization per line; `(` and `)` act as separators.
WatDocument tokenize_wat(std::string_view text, std::string doc_id);

struct Vocab {
    struct Entry {
        std::string token;
        std::int64_t count = 0;
    };
    std::vector<Entry> entries;  // dense indices 0..V-1, by (count desc, token asc)
    std::unordered_map<std::string, std::uint32_t> index;
    std::int64_t total_count = 0;  // over retained tokens
    int min_count = 1;
    std::vector<double> sampling_cdf;  // cumulative counts^0.75, normalized to 1

    std::size_t size() const { return entries.size(); }
    std::optional<std::uint32_t> lookup(const std::string& token) const;
    std::uint32_t sample(std::mt19937_64& rng) const;
};

Vocab build_vocab(const std::vector<WatDocument>& docs, int min_count);

enum class PVMode { pvdm, pvdbow };

const char* name_of(PVMode mode);
std::optional<PVMode> parse_mode(std::string_view name);

struct PVHyperparams {
    int vector_size = 100;
    int epochs = 10;
    PVMode mode = PVMode::pvdm;
    int window = 5;
    int negative = 2;
    double alpha_start = 0.025;
    double alpha_end = 0.0001;
    int min_count = 2;
    std::uint64_t seed = 1;

    void check() const;  // throws std::invalid_argument
};

using Matrix = std::vector<std::vector<double>>;

struct PVModel {
    Vocab vocab;
    PVHyperparams hyper;
    Matrix word_in;   // V x d
    Matrix word_out;  // V x d
    std::vector<std::string> doc_ids;
    Matrix doc_vecs;  // D x d, row i belongs to doc_ids[i]
    std::unordered_map<std::string, std::size_t> doc_index;

    const std::vector<double>* find_doc(const std::string& id) const;
};

// Test instrumentation: observes every training example before the update.
struct TrainHooks {
    std::function<void(std::size_t doc, std::size_t line, std::size_t center, std::span<const std::size_t> context)>
        on_example;
};

PVModel train(const std::vector<WatDocument>& docs, const PVHyperparams& hyper, const TrainHooks* hooks = nullptr);

struct InferResult {
    std::vector<double> vector;
    bool all_tokens_oov = false;
};

InferResult infer_vector(const PVModel& model, const WatDocument& doc, int infer_epochs);

double cosine(std::span<const double> u, std::span<const double> v);

// ---- negative-sampling objective -------------------------------------
// Loss of one (predictor, target, negatives) example plus dL/dh. The pure
// form backs the finite-difference gradient checks; the train step also
// applies the output-matrix update at rate `alpha` (reading old rows for
// the gradient, word2vec-style).

double ns_loss_grad(std::span<const double> h, std::uint32_t target, std::span<const std::uint32_t> negatives,
                    const Matrix& word_out, std::span<double> grad_h);

double ns_train_step(std::span<const double> h, std::uint32_t target, std::span<const std::uint32_t> negatives,
                     Matrix& word_out, double alpha, std::span<double> grad_h);

// ---- model container ---------------------------------------------------

void save_model(const PVModel& model, const std::string& path);
PVModel load_model(const std::string& path);

}  // namespace watvec::pv

#include "watvec/pv.hpp"

#include <algorithm>
#include <cmath>

#include "watvec/common.hpp"

namespace watvec::pv {

WatDocument tokenize_wat(std::string_view text, std::string doc_id) {
    WatDocument doc;
    doc.doc_id = std::move(doc_id);
    std::vector<std::string> line;
    std::string token;
    auto flush_token = [&]() {
        if (!token.empty()) {
            line.push_back(std::move(token));
            token.clear();
        }
    };
    auto flush_line = [&]() {
        flush_token();
        if (!line.empty()) doc.lines.push_back(std::move(line));
        line.clear();
    };
    for (char c : text) {
        if (c == '\n') {
            flush_line();
        } else if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) {
            flush_token();
        } else {
            token.push_back(c);
        }
    }
    flush_line();
    return doc;
}

std::optional<std::uint32_t> Vocab::lookup(const std::string& token) const {
    auto it = index.find(token);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::uint32_t Vocab::sample(std::mt19937_64& rng) const {
    double u = uniform_unit(rng);
    auto it = std::upper_bound(sampling_cdf.begin(), sampling_cdf.end(), u);
    if (it == sampling_cdf.end()) return static_cast<std::uint32_t>(sampling_cdf.size() - 1);
    return static_cast<std::uint32_t>(it - sampling_cdf.begin());
}

Vocab build_vocab(const std::vector<WatDocument>& docs, int min_count) {
    std::unordered_map<std::string, std::int64_t> counts;
    std::size_t tokens_seen = 0;
    for (const WatDocument& doc : docs) {
        for (const auto& line : doc.lines) {
            for (const std::string& tok : line) {
                ++counts[tok];
                ++tokens_seen;
            }
        }
    }
    if (tokens_seen == 0) throw EmptyCorpus("EmptyCorpus: no tokens in any document");

    Vocab v;
    v.min_count = min_count;
    for (auto& [tok, cnt] : counts) {
        if (cnt >= min_count) v.entries.push_back({tok, cnt});
    }
    std::sort(v.entries.begin(), v.entries.end(), [](const Vocab::Entry& a, const Vocab::Entry& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.token < b.token;
    });
    for (std::size_t i = 0; i < v.entries.size(); ++i) {
        v.index.emplace(v.entries[i].token, static_cast<std::uint32_t>(i));
        v.total_count += v.entries[i].count;
    }

    double norm = 0.0;
    for (const auto& e : v.entries) norm += std::pow(static_cast<double>(e.count), 0.75);
    double acc = 0.0;
    for (const auto& e : v.entries) {
        acc += std::pow(static_cast<double>(e.count), 0.75) / norm;
        v.sampling_cdf.push_back(acc);
    }
    if (!v.sampling_cdf.empty()) v.sampling_cdf.back() = 1.0;
    return v;
}

const char* name_of(PVMode mode) { return mode == PVMode::pvdm ? "pvdm" : "pvdbow"; }

std::optional<PVMode> parse_mode(std::string_view name) {
    std::string lower = to_lower(name);
    if (lower == "pvdm" || lower == "pv-dm" || lower == "dm") return PVMode::pvdm;
    if (lower == "pvdbow" || lower == "pv-dbow" || lower == "dbow") return PVMode::pvdbow;
    return std::nullopt;
}

void PVHyperparams::check() const {
    if (vector_size < 1) throw std::invalid_argument("vector_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (negative < 1) throw std::invalid_argument("negative must be >= 1");
    if (!(alpha_start >= alpha_end && alpha_end > 0)) {
        throw std::invalid_argument("need alpha_start >= alpha_end > 0");
    }
    if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
}

const std::vector<double>* PVModel::find_doc(const std::string& id) const {
    auto it = doc_index.find(id);
    if (it == doc_index.end()) return nullptr;
    return &doc_vecs[it->second];
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)), stable at both tails
double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void init_row(std::vector<double>& row, std::size_t d, std::mt19937_64& rng) {
    row.resize(d);
    double bound = 0.5 / static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) row[i] = uniform_range(rng, -bound, bound);
}

void check_finite(const Matrix& m, const char* what, int epoch) {
    for (std::size_t r = 0; r < m.size(); ++r) {
        for (double v : m[r]) {
            if (!std::isfinite(v)) {
                throw NonFinite("NonFinite: " + std::string(what) + " row " + std::to_string(r) + " after epoch " +
                                std::to_string(epoch));
            }
        }
    }
}

// Document mapped into vocab indices; OOV tokens are dropped, empty lines
// disappear with them.
std::vector<std::vector<std::uint32_t>> index_lines(const WatDocument& doc, const Vocab& vocab) {
    std::vector<std::vector<std::uint32_t>> out;
    for (const auto& line : doc.lines) {
        std::vector<std::uint32_t> ids;
        for (const std::string& tok : line) {
            if (auto idx = vocab.lookup(tok)) ids.push_back(*idx);
        }
        if (!ids.empty()) out.push_back(std::move(ids));
    }
    return out;
}

std::vector<std::uint32_t> draw_negatives(const Vocab& vocab, std::uint32_t target, int count,
                                          std::mt19937_64& rng) {
    std::vector<std::uint32_t> negs;
    negs.reserve(count);
    for (int k = 0; k < count; ++k) {
        std::uint32_t j = vocab.sample(rng);
        if (j != target) negs.push_back(j);
    }
    return negs;
}

}  // namespace

double ns_loss_grad(std::span<const double> h, std::uint32_t target, std::span<const std::uint32_t> negatives,
                    const Matrix& word_out, std::span<double> grad_h) {
    std::fill(grad_h.begin(), grad_h.end(), 0.0);
    double loss = 0.0;
    auto visit = [&](std::uint32_t j, bool positive) {
        const std::vector<double>& row = word_out[j];
        double s = dot(row, h);
        loss -= positive ? log_sigmoid(s) : log_sigmoid(-s);
        double g = sigmoid(s) - (positive ? 1.0 : 0.0);
        for (std::size_t i = 0; i < grad_h.size(); ++i) grad_h[i] += g * row[i];
    };
    visit(target, true);
    for (std::uint32_t j : negatives) visit(j, false);
    return loss;
}

double ns_train_step(std::span<const double> h, std::uint32_t target, std::span<const std::uint32_t> negatives,
                     Matrix& word_out, double alpha, std::span<double> grad_h) {
    std::fill(grad_h.begin(), grad_h.end(), 0.0);
    double loss = 0.0;
    auto visit = [&](std::uint32_t j, bool positive) {
        std::vector<double>& row = word_out[j];
        double s = dot(row, h);
        loss -= positive ? log_sigmoid(s) : log_sigmoid(-s);
        double g = sigmoid(s) - (positive ? 1.0 : 0.0);
        for (std::size_t i = 0; i < grad_h.size(); ++i) {
            grad_h[i] += g * row[i];
            row[i] -= alpha * g * h[i];
        }
    };
    visit(target, true);
    for (std::uint32_t j : negatives) visit(j, false);
    return loss;
}

namespace {

// Shared by train (updates word matrices) and infer (doc vector only).
struct SgdPass {
    const Vocab& vocab;
    const PVHyperparams& hyper;
    Matrix& word_in;
    Matrix& word_out;
    bool update_words = true;
    std::size_t example_counter = 0;
    std::size_t total_examples = 1;

    double alpha() const {
        double t = static_cast<double>(example_counter) / static_cast<double>(std::max<std::size_t>(1, total_examples - 1));
        double a = hyper.alpha_start + (hyper.alpha_end - hyper.alpha_start) * t;
        return std::max(a, hyper.alpha_end);
    }

    void run_document(const std::vector<std::vector<std::uint32_t>>& lines, std::vector<double>& doc_vec,
                      std::mt19937_64& rng, const TrainHooks* hooks, std::size_t doc_pos) {
        const std::size_t d = doc_vec.size();
        std::vector<double> h(d), grad_h(d);
        std::vector<std::size_t> context;
        const int window = hyper.window;

        for (std::size_t li = 0; li < lines.size(); ++li) {
            const std::vector<std::uint32_t>& line = lines[li];
            for (std::size_t t = 0; t < line.size(); ++t) {
                double a = alpha();
                std::uint32_t target = line[t];
                std::vector<std::uint32_t> negs = draw_negatives(vocab, target, hyper.negative, rng);

                if (hyper.mode == PVMode::pvdm) {
                    context.clear();
                    // word2vec-style reduced window: a fresh radius in
                    // [1, window] per position
                    std::size_t radius = 1 + static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(window));
                    std::size_t lo = t >= radius ? t - radius : 0;
                    std::size_t hi = std::min(line.size() - 1, t + radius);
                    for (std::size_t c = lo; c <= hi; ++c) {
                        if (c != t) context.push_back(c);
                    }
                    if (hooks && hooks->on_example) hooks->on_example(doc_pos, li, t, context);

                    double inv = 1.0 / static_cast<double>(1 + context.size());
                    for (std::size_t i = 0; i < d; ++i) h[i] = doc_vec[i];
                    for (std::size_t c : context) {
                        const std::vector<double>& w = word_in[line[c]];
                        for (std::size_t i = 0; i < d; ++i) h[i] += w[i];
                    }
                    for (std::size_t i = 0; i < d; ++i) h[i] *= inv;

                    if (update_words) {
                        ns_train_step(h, target, negs, word_out, a, grad_h);
                    } else {
                        ns_loss_grad(h, target, negs, word_out, grad_h);
                    }
                    // word2vec convention for the mean combiner: the full
                    // predictor gradient goes to every contributor (the exact
                    // gradient would carry 1/(1+|context|); the convention is
                    // an equally valid descent step and trains document
                    // vectors at full rate)
                    for (std::size_t i = 0; i < d; ++i) doc_vec[i] -= a * grad_h[i];
                    if (update_words) {
                        for (std::size_t c : context) {
                            std::vector<double>& w = word_in[line[c]];
                            for (std::size_t i = 0; i < d; ++i) w[i] -= a * grad_h[i];
                        }
                    }
                } else {
                    if (hooks && hooks->on_example) hooks->on_example(doc_pos, li, t, {});
                    if (update_words) {
                        ns_train_step(doc_vec, target, negs, word_out, a, grad_h);
                    } else {
                        ns_loss_grad(doc_vec, target, negs, word_out, grad_h);
                    }
                    for (std::size_t i = 0; i < d; ++i) doc_vec[i] -= a * grad_h[i];
                }
                ++example_counter;
            }
        }
    }
};

}  // namespace

PVModel train(const std::vector<WatDocument>& docs, const PVHyperparams& hyper, const TrainHooks* hooks) {
    hyper.check();
    PVModel model;
    model.hyper = hyper;
    model.vocab = build_vocab(docs, hyper.min_count);
    if (model.vocab.size() == 0) {
        throw EmptyCorpus("EmptyCorpus: vocabulary empty after min_count=" + std::to_string(hyper.min_count));
    }

    const std::size_t d = static_cast<std::size_t>(hyper.vector_size);
    std::vector<std::vector<std::vector<std::uint32_t>>> indexed;
    indexed.reserve(docs.size());
    std::size_t positions = 0;
    for (const WatDocument& doc : docs) {
        indexed.push_back(index_lines(doc, model.vocab));
        for (const auto& line : indexed.back()) positions += line.size();
        model.doc_ids.push_back(doc.doc_id);
        model.doc_index.emplace(doc.doc_id, model.doc_ids.size() - 1);
    }
    if (model.doc_index.size() != model.doc_ids.size()) {
        throw std::invalid_argument("duplicate doc_id in training corpus");
    }

    std::mt19937_64 rng(hyper.seed);
    model.word_in.resize(model.vocab.size());
    for (auto& row : model.word_in) init_row(row, d, rng);
    model.word_out.assign(model.vocab.size(), std::vector<double>(d, 0.0));
    model.doc_vecs.resize(docs.size());
    for (auto& row : model.doc_vecs) init_row(row, d, rng);

    SgdPass pass{model.vocab, hyper, model.word_in, model.word_out};
    pass.total_examples = positions * static_cast<std::size_t>(hyper.epochs);

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        for (std::size_t doc = 0; doc < indexed.size(); ++doc) {
            pass.run_document(indexed[doc], model.doc_vecs[doc], rng, hooks, doc);
        }
        check_finite(model.word_in, "word_in", epoch);
        check_finite(model.word_out, "word_out", epoch);
        check_finite(model.doc_vecs, "doc_vecs", epoch);
    }
    return model;
}

InferResult infer_vector(const PVModel& model, const WatDocument& doc, int infer_epochs) {
    if (infer_epochs < 1) throw std::invalid_argument("infer_epochs must be >= 1");
    const std::size_t d = static_cast<std::size_t>(model.hyper.vector_size);

    InferResult out;
    auto indexed = index_lines(doc, model.vocab);
    std::size_t positions = 0;
    for (const auto& line : indexed) positions += line.size();
    if (positions == 0) {
        out.vector.assign(d, 0.0);
        out.all_tokens_oov = true;
        return out;
    }

    std::mt19937_64 rng(mix_seed(model.hyper.seed, doc.doc_id));
    init_row(out.vector, d, rng);

    // frozen word matrices: the pass reads them but never writes
    PVHyperparams hyper = model.hyper;
    hyper.epochs = infer_epochs;
    Matrix& word_in = const_cast<Matrix&>(model.word_in);
    Matrix& word_out = const_cast<Matrix&>(model.word_out);
    SgdPass pass{model.vocab, hyper, word_in, word_out};
    pass.update_words = false;
    pass.total_examples = positions * static_cast<std::size_t>(infer_epochs);

    for (int epoch = 0; epoch < infer_epochs; ++epoch) {
        pass.run_document(indexed, out.vector, rng, nullptr, 0);
    }
    for (double v : out.vector) {
        if (!std::isfinite(v)) throw NonFinite("NonFinite: inferred vector for " + doc.doc_id);
    }
    return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DimensionMismatch("DimensionMismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    }
    double uu = dot(u, u), vv = dot(v, v);
    if (uu == 0.0 || vv == 0.0) return 0.0;
    return dot(u, v) / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace watvec::pv

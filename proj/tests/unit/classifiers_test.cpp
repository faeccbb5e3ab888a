#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "watvec/classifiers.hpp"
#include "watvec/common.hpp"

using namespace watvec;
using ml::ClassifierKind;
using ml::ClassifierSpec;
using ml::LabeledVector;

namespace {

// well-separated gaussian blobs at (+-5, 0), sigma 0.5
std::vector<LabeledVector> blobs(int per_class, std::uint64_t seed, double sigma = 0.5) {
    std::mt19937_64 rng(seed);
    auto gauss = [&]() {
        // Box-Muller from the portable uniform draw
        double u1 = std::max(uniform_unit(rng), 1e-12);
        double u2 = uniform_unit(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };
    std::vector<LabeledVector> data;
    for (int c = 0; c < 2; ++c) {
        double cx = c == 0 ? -5.0 : 5.0;
        for (int i = 0; i < per_class; ++i) {
            data.push_back(LabeledVector{
                (c == 0 ? "b" : "m") + std::to_string(i), {cx + sigma * gauss(), sigma * gauss()}, c});
        }
    }
    return data;
}

ClassifierSpec spec_of(ClassifierKind kind, std::uint64_t seed = 7) {
    ClassifierSpec s;
    s.kind = kind;
    s.seed = seed;
    return s;
}

const ClassifierKind kAllKinds[4] = {ClassifierKind::gnb, ClassifierKind::rf, ClassifierKind::gbdt,
                                     ClassifierKind::linear};

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("stratified split of 10+10 at 0.8 gives 8+8 / 2+2") {
    auto data = blobs(10, 1);
    auto [train, test] = ml::train_test_split(data, 0.8, 42);
    CHECK(train.size() == 16);
    CHECK(test.size() == 4);
    int train_mal = 0, test_mal = 0;
    for (const auto& s : train) train_mal += s.label;
    for (const auto& s : test) test_mal += s.label;
    CHECK(train_mal == 8);
    CHECK(test_mal == 2);
}

TEST_CASE("split is deterministic and partitions the input") {
    auto data = blobs(13, 2);
    auto [tr1, te1] = ml::train_test_split(data, 0.8, 5);
    auto [tr2, te2] = ml::train_test_split(data, 0.8, 5);
    REQUIRE(tr1.size() == tr2.size());
    for (std::size_t i = 0; i < tr1.size(); ++i) CHECK(tr1[i].doc_id == tr2[i].doc_id);
    CHECK(tr1.size() + te1.size() == data.size());

    std::set<std::string> ids;
    for (const auto& s : tr1) ids.insert(s.doc_id);
    for (const auto& s : te1) ids.insert(s.doc_id);
    CHECK(ids.size() == data.size());
}

TEST_CASE("single-class input raises ClassMissing") {
    std::vector<LabeledVector> data{{"a", {1, 2}, 0}, {"b", {2, 1}, 0}};
    CHECK_THROWS_AS(ml::train_test_split(data, 0.8, 1), ml::ClassMissing);
    CHECK_THROWS_AS(ml::fit(spec_of(ClassifierKind::gnb), data), ml::ClassMissing);
}

TEST_CASE("every classifier separates the blobs perfectly") {
    auto data = blobs(20, 3);
    for (ClassifierKind kind : kAllKinds) {
        auto model = ml::fit(spec_of(kind), data);
        auto counts = ml::evaluate(model, data);
        auto metrics = eval::classification_metrics(counts);
        CHECK_MESSAGE(*metrics.accuracy == 1.0, "train accuracy for " << ml::name_of(kind));
        // blob centers classified correctly
        CHECK(ml::predict(model, std::vector<double>{-5.0, 0.0}).label == ml::kBenign);
        CHECK(ml::predict(model, std::vector<double>{5.0, 0.0}).label == ml::kMalicious);
    }
}

TEST_CASE("constant features predict the majority class") {
    std::vector<LabeledVector> data;
    for (int i = 0; i < 12; ++i) data.push_back({"s" + std::to_string(i), {1.0, 1.0}, i < 5 ? 1 : 0});
    // 7 benign vs 5 malicious: everything constant, majority is benign
    for (ClassifierKind kind : kAllKinds) {
        auto model = ml::fit(spec_of(kind), data);
        auto p = ml::predict(model, std::vector<double>{1.0, 1.0});
        CHECK_MESSAGE(p.label == ml::kBenign, ml::name_of(kind) << " should fall back to the prior");
    }
}

TEST_CASE("fits are deterministic given spec, data and seed") {
    auto data = blobs(15, 4, 2.5);  // noisy enough that trees differ if seeds drift
    auto probes = blobs(10, 99, 3.0);
    for (ClassifierKind kind : kAllKinds) {
        auto m1 = ml::fit(spec_of(kind, 11), data);
        auto m2 = ml::fit(spec_of(kind, 11), data);
        for (const auto& p : probes) {
            auto a = ml::predict(m1, p.features);
            auto b = ml::predict(m2, p.features);
            CHECK(a.score == b.score);
            CHECK(a.label == b.label);
        }
    }
}

TEST_CASE("gnb score at the midpoint of symmetric blobs is ~0") {
    auto data = blobs(20, 5);
    auto model = ml::fit(spec_of(ClassifierKind::gnb), data);
    // sampled blobs are only roughly symmetric; the midpoint score is small
    // relative to the blob centers, whose |score| is in the hundreds
    auto p = ml::predict(model, std::vector<double>{0.0, 0.0});
    CHECK(std::abs(p.score) < 0.05 * std::abs(ml::predict(model, std::vector<double>{5.0, 0.0}).score));

    // exact symmetry: mirrored dataset
    std::vector<LabeledVector> mirror;
    int k = 0;
    for (double x : {4.0, 5.0, 6.0}) {
        mirror.push_back({"b" + std::to_string(k), {-x, 1.0}, 0});
        mirror.push_back({"m" + std::to_string(k), {x, 1.0}, 1});
        ++k;
    }
    auto exact = ml::fit(spec_of(ClassifierKind::gnb), mirror);
    CHECK(std::abs(ml::predict(exact, std::vector<double>{0.0, 1.0}).score) < 1e-9);
}

TEST_CASE("gnb log-posteriors match the hand formula") {
    std::mt19937_64 rng(6);
    for (int round = 0; round < 20; ++round) {
        std::size_t n = 10 + rng() % 40, d = 1 + rng() % 4;
        std::vector<LabeledVector> data;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> f(d);
            for (auto& v : f) v = uniform_range(rng, -3, 3);
            data.push_back({"s" + std::to_string(i), f, static_cast<int>(i % 2)});
        }
        auto model = ml::fit(spec_of(ClassifierKind::gnb), data);

        // oracle: direct mean/variance/log-density computation
        std::vector<double> probe(d);
        for (auto& v : probe) v = uniform_range(rng, -3, 3);
        double post[2];
        for (int c = 0; c < 2; ++c) {
            std::vector<const LabeledVector*> members;
            for (const auto& s : data) {
                if (s.label == c) members.push_back(&s);
            }
            double acc = std::log(static_cast<double>(members.size()) / static_cast<double>(n));
            for (std::size_t j = 0; j < d; ++j) {
                double mean = 0;
                for (auto* s : members) mean += s->features[j];
                mean /= static_cast<double>(members.size());
                double var = 0;
                for (auto* s : members) var += (s->features[j] - mean) * (s->features[j] - mean);
                var = std::max(var / static_cast<double>(members.size()), 1e-9);
                acc += -0.5 * std::log(2 * M_PI * var) - (probe[j] - mean) * (probe[j] - mean) / (2 * var);
            }
            post[c] = acc;
        }
        double want = post[1] - post[0];
        CHECK(ml::predict(model, probe).score == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("gnb is invariant to training order") {
    auto data = blobs(15, 8, 1.5);
    auto shuffled = data;
    std::mt19937_64 rng(3);
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng() % i]);
    auto m1 = ml::fit(spec_of(ClassifierKind::gnb), data);
    auto m2 = ml::fit(spec_of(ClassifierKind::gnb), shuffled);
    for (const auto& p : blobs(8, 31, 3.0)) {
        CHECK(ml::predict(m1, p.features).score == doctest::Approx(ml::predict(m2, p.features).score).epsilon(1e-9));
    }
}

TEST_CASE("rf prediction is the strict majority of tree votes") {
    auto data = blobs(15, 9, 3.0);
    ClassifierSpec spec = spec_of(ClassifierKind::rf, 13);
    spec.rf_trees = 25;
    auto model = ml::fit(spec, data);
    const auto& forest = std::get<ml::ForestParams>(model.params);
    REQUIRE(forest.trees.size() == 25);

    for (const auto& probe : blobs(10, 77, 4.0)) {
        std::size_t votes = 0;
        for (const auto& tree : forest.trees) {
            if (tree.predict(probe.features) > 0.5) ++votes;
        }
        auto p = ml::predict(model, probe.features);
        CHECK(p.label == (2 * votes > forest.trees.size() ? ml::kMalicious : ml::kBenign));
    }
}

TEST_CASE("gbdt training loss is non-increasing") {
    auto data = blobs(25, 10, 4.0);  // overlapping blobs, non-trivial loss curve
    ClassifierSpec spec = spec_of(ClassifierKind::gbdt, 17);
    auto model = ml::fit(spec, data);
    const auto& boost = std::get<ml::BoostParams>(model.params);
    REQUIRE(boost.train_loss.size() == static_cast<std::size_t>(spec.gbdt_rounds));
    for (std::size_t r = 1; r < boost.train_loss.size(); ++r) {
        CHECK(boost.train_loss[r] <= boost.train_loss[r - 1] + 1e-9);
    }
}

TEST_CASE("dimension mismatch is rejected") {
    auto model = ml::fit(spec_of(ClassifierKind::gnb), blobs(5, 11));
    CHECK_THROWS_AS(ml::predict(model, std::vector<double>{1.0, 2.0, 3.0}), ml::DimensionMismatch);
}

TEST_CASE("evaluate counts with malicious as positive") {
    auto data = blobs(5, 12);
    auto model = ml::fit(spec_of(ClassifierKind::gbdt), data);
    auto counts = ml::evaluate(model, data);
    CHECK(counts.tp == 5);
    CHECK(counts.tn == 5);
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 0);

    // inverted labels flip the counts
    auto inverted = data;
    for (auto& s : inverted) s.label = 1 - s.label;
    auto bad = ml::evaluate(model, inverted);
    CHECK(bad.tp == 0);
    CHECK(bad.tn == 0);
    CHECK(bad.fp == 5);
    CHECK(bad.fn == 5);
}

TEST_CASE("classifier containers round-trip") {
    auto data = blobs(10, 13, 2.0);
    auto probes = blobs(6, 55, 3.0);
    for (ClassifierKind kind : kAllKinds) {
        auto model = ml::fit(spec_of(kind, 19), data);
        auto path = std::filesystem::temp_directory_path() / ("watvec_clf_" + std::string(ml::name_of(kind)) + ".json");
        ml::save_classifier(model, path.string());
        auto loaded = ml::load_classifier(path.string());
        for (const auto& p : probes) {
            CHECK(ml::predict(model, p.features).score == ml::predict(loaded, p.features).score);
        }
        std::filesystem::remove(path);
    }
}

}  // TEST_SUITE

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "nbof/dataset.hpp"

using namespace nbof;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("dstest_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Dataset random_dataset(int d, int classes, const std::vector<int>& lens, uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.feature_dim = d;
    ds.class_count = classes;
    for (int c = 0; c < classes; ++c) ds.class_names.push_back("class" + std::to_string(c));
    ds.provenance = "test";
    for (int n : lens) {
        std::vector<float> s(static_cast<size_t>(d) * n);
        for (float& v : s) v = static_cast<float>(rng.uniform(-5.0, 5.0));
        ds.samples.push_back(std::move(s));
        ds.seq_len.push_back(n);
        ds.labels.push_back(static_cast<int>(rng.below(static_cast<uint32_t>(classes))));
    }
    return ds;
}

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("seqb round trip is bitwise for fixed and variable lengths") {
    for (bool fixed : {true, false}) {
        TempFile f(fixed ? "fixed.seqb" : "var.seqb");
        std::vector<int> lens = fixed ? std::vector<int>{7, 7, 7, 7}
                                      : std::vector<int>{3, 9, 5, 7};
        Dataset ds = random_dataset(4, 3, lens, fixed ? 1 : 2);
        write_seqb(ds, f.path);
        Dataset back = load_seqb(f.path);
        CHECK(back.feature_dim == ds.feature_dim);
        CHECK(back.class_count == ds.class_count);
        CHECK(back.labels == ds.labels);
        CHECK(back.seq_len == ds.seq_len);
        for (size_t i = 0; i < ds.samples.size(); ++i) CHECK(back.samples[i] == ds.samples[i]);

        // writing the loaded dataset reproduces the file byte for byte
        TempFile g("copy.seqb");
        write_seqb(back, g.path);
        CHECK(slurp(f.path) == slurp(g.path));
    }
}

TEST_CASE("seqb empty dataset round trip") {
    TempFile f("empty.seqb");
    Dataset ds;
    ds.feature_dim = 5;
    ds.class_count = 2;
    ds.class_names = {"a", "b"};
    write_seqb(ds, f.path);
    Dataset back = load_seqb(f.path);
    CHECK(back.size() == 0);
    CHECK(back.feature_dim == 5);
}

TEST_CASE("seqb rejects malformed files") {
    TempFile f("good.seqb");
    Dataset ds = random_dataset(3, 2, {4, 4}, 9);
    write_seqb(ds, f.path);
    const std::vector<char> bytes = slurp(f.path);

    // truncation
    TempFile t("trunc.seqb");
    spit(t.path, std::vector<char>(bytes.begin(), bytes.end() - 9));
    CHECK_THROWS_AS(load_seqb(t.path), ParseError);

    // wrong magic
    TempFile m("magic.seqb");
    std::vector<char> bad = bytes;
    bad[0] = 'X';
    spit(m.path, bad);
    CHECK_THROWS_AS(load_seqb(m.path), ParseError);

    // flipped payload byte breaks the checksum
    TempFile c("crc.seqb");
    std::vector<char> corrupt = bytes;
    corrupt[bytes.size() / 2] ^= 0x40;
    spit(c.path, corrupt);
    CHECK_THROWS_AS(load_seqb(c.path), ParseError);

    CHECK_THROWS_AS(load_seqb("does_not_exist.seqb"), ConfigError);
}

TEST_CASE("crc32 reference value") {
    // standard IEEE check value for "123456789"
    const char* s = "123456789";
    CHECK(crc32_ieee(reinterpret_cast<const uint8_t*>(s), 9) == 0xCBF43926u);
}

TEST_CASE("sliding windows") {
    // D=1, T=5 series 1..5, labels = step index
    std::vector<float> series = {1, 2, 3, 4, 5};
    std::vector<int> labels = {0, 1, 2, 3, 4};
    Dataset ds = sliding_windows(series, 1, 5, 3, 1, labels, 5);
    CHECK(ds.size() == 3);  // floor((5-3)/1) + 1
    CHECK(ds.samples[0] == std::vector<float>{1, 2, 3});
    CHECK(ds.samples[1] == std::vector<float>{2, 3, 4});
    CHECK(ds.samples[2] == std::vector<float>{3, 4, 5});
    // window label is the label at its final step
    CHECK(ds.labels == std::vector<int>{2, 3, 4});

    // stride = window tiles without overlap
    std::vector<float> series6 = {1, 2, 3, 4, 5, 6};
    std::vector<int> labels6 = {0, 0, 0, 1, 1, 1};
    Dataset tiled = sliding_windows(series6, 1, 6, 3, 3, labels6, 2);
    CHECK(tiled.size() == 2);
    CHECK(tiled.samples[1] == std::vector<float>{4, 5, 6});

    CHECK_THROWS_AS(sliding_windows(series, 1, 5, 6, 1, labels, 5), ContractError);
}

TEST_CASE("synthetic generator determinism and degenerate cases") {
    Dataset a = synth_clusters(4, 6, 3, 10, 77);
    Dataset b = synth_clusters(4, 6, 3, 10, 77);
    for (size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i] == b.samples[i]);
    CHECK(a.labels == b.labels);

    Dataset single = synth_clusters(3, 4, 1, 5, 1);
    CHECK(single.class_count == 1);
    CHECK(single.size() == 5);

    CHECK_THROWS_AS(synth_clusters(0, 4, 2, 5, 1), ContractError);
}

TEST_CASE("nearest-centroid oracle exceeds 95 percent on the synthetic task") {
    Dataset ds = synth_clusters(8, 20, 2, 200, 7);
    const int d = ds.feature_dim;

    // oracle: time-averaged feature vector, class centroids from a train
    // split, nearest centroid on the rest
    auto mean_vec = [&](size_t i) {
        std::vector<double> m(static_cast<size_t>(d), 0.0);
        const int n = ds.seq_len[i];
        for (int r = 0; r < d; ++r) {
            double s = 0.0;
            for (int t = 0; t < n; ++t) s += ds.samples[i][static_cast<size_t>(r) * n + t];
            m[r] = s / n;
        }
        return m;
    };
    std::vector<std::vector<double>> centroid(2, std::vector<double>(static_cast<size_t>(d), 0.0));
    std::vector<int> count(2, 0);
    for (size_t i = 0; i < ds.size(); ++i) {
        if (i % 5 == 0) continue;  // held out
        auto m = mean_vec(i);
        for (int r = 0; r < d; ++r) centroid[ds.labels[i]][r] += m[r];
        count[ds.labels[i]]++;
    }
    for (int c = 0; c < 2; ++c)
        for (int r = 0; r < d; ++r) centroid[c][r] /= count[c];

    int correct = 0, total = 0;
    for (size_t i = 0; i < ds.size(); i += 5) {
        auto m = mean_vec(i);
        double best = 1e300;
        int arg = 0;
        for (int c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (int r = 0; r < d; ++r) acc += (m[r] - centroid[c][r]) * (m[r] - centroid[c][r]);
            if (acc < best) {
                best = acc;
                arg = c;
            }
        }
        correct += arg == ds.labels[i];
        total++;
    }
    CHECK(static_cast<double>(correct) / total > 0.95);
}

TEST_CASE("noise bands extend samples without touching original rows") {
    Dataset ds = synth_clusters(5, 8, 2, 6, 3);
    Dataset noisy = inject_noise_bands(ds, 10, 99);
    CHECK(noisy.feature_dim == 15);
    CHECK(noisy.labels == ds.labels);
    for (size_t i = 0; i < ds.size(); ++i) {
        const size_t original = ds.samples[i].size();
        CHECK(noisy.samples[i].size() == original + 10u * 8u);
        for (size_t j = 0; j < original; ++j) CHECK(noisy.samples[i][j] == ds.samples[i][j]);
    }

    Dataset again = inject_noise_bands(ds, 10, 99);
    for (size_t i = 0; i < ds.size(); ++i) CHECK(again.samples[i] == noisy.samples[i]);

    CHECK_THROWS_AS(inject_noise_bands(ds, 0, 1), ContractError);
}

TEST_CASE("noise bands over a constant sample equal the mean row exactly") {
    Dataset ds;
    ds.feature_dim = 3;
    ds.class_count = 1;
    ds.class_names = {"c"};
    ds.samples.push_back(std::vector<float>(12, 1.5f));
    ds.seq_len.push_back(4);
    ds.labels.push_back(0);
    Dataset noisy = inject_noise_bands(ds, 2, 5);
    for (int b = 0; b < 2; ++b)
        for (int t = 0; t < 4; ++t)
            CHECK(noisy.samples[0][static_cast<size_t>(3 + b) * 4 + t] == 1.5f);
}

TEST_CASE("stratified k-fold is a balanced partition") {
    Dataset ds = random_dataset(2, 2, std::vector<int>(100, 4), 13);
    // force exact balance
    for (size_t i = 0; i < ds.labels.size(); ++i) ds.labels[i] = static_cast<int>(i % 2);
    auto folds = kfold_split(ds, 5, 11);
    CHECK(folds.size() == 5);

    std::set<size_t> seen;
    for (const auto& f : folds) {
        int per_class[2] = {0, 0};
        for (size_t i : f.test) {
            CHECK(seen.insert(i).second);  // disjoint
            per_class[ds.labels[i]]++;
        }
        CHECK(per_class[0] == 10);
        CHECK(per_class[1] == 10);
        CHECK(f.train.size() + f.test.size() == ds.size());
    }
    CHECK(seen.size() == ds.size());  // coverage

    auto again = kfold_split(ds, 5, 11);
    for (int f = 0; f < 5; ++f) CHECK(again[f].test == folds[f].test);

    CHECK_THROWS_AS(kfold_split(ds, 1, 1), ConfigError);
    Dataset tiny = random_dataset(2, 2, std::vector<int>(3, 4), 15);
    tiny.labels = {0, 0, 1};
    CHECK_THROWS_AS(kfold_split(tiny, 2, 1), ConfigError);
}

TEST_CASE("kfold partition property over many draws") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const int classes = 2 + static_cast<int>(rng.below(3));
        const int k = 2 + static_cast<int>(rng.below(4));
        Dataset ds = random_dataset(2, classes, std::vector<int>(classes * k * 3, 3),
                                    rng.next_u64());
        // round-robin labels guarantee every class has >= k members
        for (size_t i = 0; i < ds.labels.size(); ++i)
            ds.labels[i] = static_cast<int>(i % static_cast<size_t>(classes));
        auto folds = kfold_split(ds, k, rng.next_u64());
        std::set<size_t> seen;
        for (const auto& f : folds)
            for (size_t i : f.test) CHECK(seen.insert(i).second);
        CHECK(seen.size() == ds.size());
    }
}

TEST_CASE("synth spec parsing") {
    Dataset ds = synth_from_spec("d=3,n=5,classes=2,per_class=4,seed=9");
    CHECK(ds.feature_dim == 3);
    CHECK(ds.size() == 8);
    Dataset noisy = synth_from_spec("d=3,n=5,classes=2,per_class=4,seed=9,noise=2");
    CHECK(noisy.feature_dim == 5);
    CHECK_THROWS_AS(synth_from_spec("bogus=1"), ConfigError);
    CHECK_THROWS_AS(synth_from_spec("d"), ConfigError);
}

#include "insnn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "insnn/rng.hpp"

namespace insnn::io {

namespace {

constexpr int kCifarDim = 32;
constexpr int kCifarChannels = 3;
constexpr std::size_t kCifarRecord = 1 + kCifarChannels * kCifarDim * kCifarDim;

std::vector<unsigned char> read_all(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file);
    in.seekg(0, std::ios::end);
    const std::streamoff len = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> buf(static_cast<std::size_t>(len));
    in.read(reinterpret_cast<char*>(buf.data()), len);
    if (!in) throw IoError("short read on " + file);
    return buf;
}

std::uint32_t read_be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

Dataset load_cifar10(const std::string& file) {
    const std::vector<unsigned char> buf = read_all(file);
    if (buf.empty() || buf.size() % kCifarRecord != 0)
        throw FormatError(file + ": size " + std::to_string(buf.size()) +
                          " is not a multiple of the " + std::to_string(kCifarRecord) +
                          "-byte record; trailing bytes start at offset " +
                          std::to_string(buf.size() - buf.size() % kCifarRecord));
    const std::size_t records = buf.size() / kCifarRecord;

    Dataset d;
    d.channels = kCifarChannels;
    d.height = kCifarDim;
    d.width = kCifarDim;
    d.images.reserve(records);
    d.labels.reserve(records);
    for (std::size_t r = 0; r < records; ++r) {
        const unsigned char* rec = buf.data() + r * kCifarRecord;
        if (rec[0] > 9)
            throw FormatError(file + ": label byte " + std::to_string(rec[0]) +
                              " out of range at offset " + std::to_string(r * kCifarRecord));
        d.labels.push_back(rec[0]);
        Tensor img({kCifarChannels, kCifarDim, kCifarDim});
        for (std::size_t i = 0; i < kCifarRecord - 1; ++i)
            img[static_cast<std::int64_t>(i)] = static_cast<float>(rec[1 + i]) / 255.0f;
        d.images.push_back(std::move(img));
    }
    return d;
}

Dataset load_mnist(const std::string& images_file, const std::string& labels_file) {
    const std::vector<unsigned char> img = read_all(images_file);
    const std::vector<unsigned char> lab = read_all(labels_file);
    if (img.size() < 16)
        throw FormatError(images_file + ": header truncated at offset " +
                          std::to_string(img.size()));
    if (read_be32(img.data()) != 0x00000803u)
        throw FormatError(images_file + ": bad magic at offset 0 (expected 0x00000803)");
    const std::uint32_t n = read_be32(img.data() + 4);
    const std::uint32_t rows = read_be32(img.data() + 8);
    const std::uint32_t cols = read_be32(img.data() + 12);
    if (img.size() != 16 + static_cast<std::size_t>(n) * rows * cols)
        throw FormatError(images_file + ": expected " +
                          std::to_string(16 + static_cast<std::size_t>(n) * rows * cols) +
                          " bytes, file ends at offset " + std::to_string(img.size()));
    if (lab.size() < 8)
        throw FormatError(labels_file + ": header truncated at offset " +
                          std::to_string(lab.size()));
    if (read_be32(lab.data()) != 0x00000801u)
        throw FormatError(labels_file + ": bad magic at offset 0 (expected 0x00000801)");
    if (read_be32(lab.data() + 4) != n)
        throw FormatError(labels_file + ": item count " +
                          std::to_string(read_be32(lab.data() + 4)) + " differs from images (" +
                          std::to_string(n) + ")");
    if (lab.size() != 8 + static_cast<std::size_t>(n))
        throw FormatError(labels_file + ": expected " + std::to_string(8 + n) +
                          " bytes, file ends at offset " + std::to_string(lab.size()));

    Dataset d;
    d.channels = 1;
    d.height = static_cast<int>(rows);
    d.width = static_cast<int>(cols);
    d.images.reserve(n);
    d.labels.reserve(n);
    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    for (std::uint32_t r = 0; r < n; ++r) {
        if (lab[8 + r] > 9)
            throw FormatError(labels_file + ": label " + std::to_string(lab[8 + r]) +
                              " out of range at offset " + std::to_string(8 + r));
        d.labels.push_back(lab[8 + r]);
        Tensor t({1, static_cast<int>(rows), static_cast<int>(cols)});
        const unsigned char* px = img.data() + 16 + r * plane;
        for (std::size_t i = 0; i < plane; ++i)
            t[static_cast<std::int64_t>(i)] = static_cast<float>(px[i]) / 255.0f;
        d.images.push_back(std::move(t));
    }
    return d;
}

Dataset load_mnist(const std::string& images_file) {
    std::string labels = images_file;
    auto replace = [&labels](const std::string& from, const std::string& to) {
        const std::size_t pos = labels.find(from);
        if (pos != std::string::npos) labels.replace(pos, from.size(), to);
    };
    replace("-images-", "-labels-");
    replace("idx3", "idx1");
    if (labels == images_file)
        throw ParameterError("cannot derive a labels filename from " + images_file);
    return load_mnist(images_file, labels);
}

Dataset subset(const Dataset& d, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n >= d.size()) return d;
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    Dataset out;
    out.channels = d.channels;
    out.height = d.height;
    out.width = d.width;
    out.num_classes = d.num_classes;
    out.images.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.images.push_back(d.images[idx[i]]);
        out.labels.push_back(d.labels[idx[i]]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora: ten texture classes mixing a coarse color layout with a
// class-specific oriented grating, plus per-sample jitter, so that wider
// first layers genuinely help.
// ---------------------------------------------------------------------------

namespace {

// Classes come in confusable pairs: 2k and 2k+1 share a coarse layout and a
// grating orientation and differ only in grating frequency, so separating a
// pair needs fine oriented detail that a wider first layer resolves better.
// The knobs scale the difficulty to the corpus (the CIFAR-sized stand-in
// faces a deeper network and more samples, so it adds a distractor grating,
// orientation jitter and heavier noise to keep first-layer capacity binding).
struct TextureKnobs {
    double freq_lo, freq_hi; // within-pair frequency split (cycles per image)
    double grating_w;
    double distract_w;  // amplitude of a random second grating
    double jitter_deg;  // per-sample orientation jitter
    double proto_w;
    float noise;
};

constexpr TextureKnobs kMnistKnobs{3.5, 5.0, 0.40, 0.0, 0.0, 0.30, 0.22f};
constexpr TextureKnobs kCifarKnobs{4.6, 5.6, 0.32, 0.22, 8.0, 0.26, 0.30f};

struct ClassRecipe {
    const std::vector<float>* proto; // shared per pair
    double angle;
    double freq;
};

struct RecipeSet {
    std::vector<std::vector<float>> protos; // one per class pair
    std::vector<ClassRecipe> classes;
};

RecipeSet make_recipes(Rng& rng, int channels, int proto_dim, const TextureKnobs& kb) {
    RecipeSet set;
    set.protos.resize(5);
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    for (auto& p : set.protos) {
        p.resize(static_cast<std::size_t>(proto_dim) * proto_dim * channels);
        for (auto& v : p) v = uni(rng);
    }
    set.classes.resize(10);
    for (int c = 0; c < 10; ++c) {
        ClassRecipe& r = set.classes[static_cast<std::size_t>(c)];
        r.proto = &set.protos[static_cast<std::size_t>(c / 2)];
        r.angle = 3.14159265358979 * (c / 2) / 5.0;
        r.freq = (c % 2) == 0 ? kb.freq_lo : kb.freq_hi;
    }
    return set;
}

void render_sample(const RecipeSet& set, int label, Rng& rng, int dim, int channels,
                   int proto_dim, const TextureKnobs& kb, unsigned char* out) {
    std::uniform_int_distribution<int> shift_dist(-4, 4);
    std::uniform_real_distribution<double> phase_dist(0.0, 6.28318530717959);
    std::uniform_real_distribution<double> jitter_dist(-kb.jitter_deg, kb.jitter_deg);
    std::uniform_int_distribution<int> class_pick(0, 9);
    std::uniform_real_distribution<float> gain_dist(0.7f, 1.3f);
    std::uniform_real_distribution<float> contrast_dist(0.6f, 1.1f);
    std::uniform_real_distribution<float> ramp_dist(-0.15f, 0.15f);
    std::normal_distribution<float> noise(0.0f, kb.noise);
    constexpr double kDeg = 3.14159265358979 / 180.0;

    const ClassRecipe& r = set.classes[static_cast<std::size_t>(label)];
    const double angle = r.angle + jitter_dist(rng) * kDeg;
    const int dx = shift_dist(rng);
    const int dy = shift_dist(rng);
    const double phase = phase_dist(rng);
    const float contrast = contrast_dist(rng);
    const float ramp_x = ramp_dist(rng); // nuisance luminance gradient
    const float ramp_y = ramp_dist(rng);
    const int scale = dim / proto_dim;

    // optional distractor: another class's grating at reduced amplitude
    double dangle = 0.0, dfreq = 0.0, dphase = 0.0;
    if (kb.distract_w > 0.0) {
        const ClassRecipe& d = set.classes[static_cast<std::size_t>(class_pick(rng))];
        dangle = d.angle + jitter_dist(rng) * kDeg;
        dfreq = d.freq;
        dphase = phase_dist(rng);
    }

    std::vector<float> gain(static_cast<std::size_t>(channels));
    for (auto& g : gain) g = gain_dist(rng);

    for (int ch = 0; ch < channels; ++ch) {
        for (int y = 0; y < dim; ++y) {
            for (int x = 0; x < dim; ++x) {
                const int py = std::clamp((y + dy) / scale, 0, proto_dim - 1);
                const int px = std::clamp((x + dx) / scale, 0, proto_dim - 1);
                const float base =
                    (*r.proto)[(static_cast<std::size_t>(ch) * proto_dim + py) * proto_dim + px];
                const double t =
                    (x * std::cos(angle) + y * std::sin(angle)) * r.freq *
                    6.28318530717959 / dim;
                double v = contrast * (kb.proto_w * base * gain[static_cast<std::size_t>(ch)] +
                                       kb.grating_w * 0.5 * (1.0 + std::sin(t + phase)));
                if (kb.distract_w > 0.0) {
                    const double td = (x * std::cos(dangle) + y * std::sin(dangle)) * dfreq *
                                      6.28318530717959 / dim;
                    v += contrast * kb.distract_w * 0.5 * (1.0 + std::sin(td + dphase));
                }
                v += 0.12 + ramp_x * (static_cast<float>(x) / dim - 0.5f) +
                     ramp_y * (static_cast<float>(y) / dim - 0.5f) + noise(rng);
                const float clamped = std::clamp(static_cast<float>(v), 0.0f, 1.0f);
                out[(static_cast<std::size_t>(ch) * dim + y) * dim + x] =
                    static_cast<unsigned char>(std::lround(clamped * 255.0f));
            }
        }
    }
}

void write_synthetic_cifar_file(const std::string& path, int count, Rng& rng,
                                const RecipeSet& recipes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    std::vector<unsigned char> pixels(kCifarRecord - 1);
    for (int i = 0; i < count; ++i) {
        const int label = i % 10; // balanced classes
        render_sample(recipes, label, rng, kCifarDim, kCifarChannels, 8, kCifarKnobs,
                      pixels.data());
        const unsigned char lb = static_cast<unsigned char>(label);
        out.write(reinterpret_cast<const char*>(&lb), 1);
        out.write(reinterpret_cast<const char*>(pixels.data()),
                  static_cast<std::streamsize>(pixels.size()));
    }
    if (!out) throw IoError("write failed on " + path);
}

} // namespace

void write_synthetic_cifar10(const std::string& dir, int n_train, int n_test,
                             std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    Rng rng = make_rng(seed);
    const auto recipes = make_recipes(rng, kCifarChannels, 8, kCifarKnobs);
    write_synthetic_cifar_file(dir + "/data_batch_1.bin", n_train, rng, recipes);
    write_synthetic_cifar_file(dir + "/test_batch.bin", n_test, rng, recipes);
}

void write_synthetic_mnist(const std::string& dir, int n_train, int n_test, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    Rng rng = make_rng(seed);
    const int dim = 28;
    const auto recipes = make_recipes(rng, 1, 7, kMnistKnobs);

    auto write_pair = [&](const std::string& images_path, const std::string& labels_path,
                          int count) {
        std::ofstream imgs(images_path, std::ios::binary);
        std::ofstream labs(labels_path, std::ios::binary);
        if (!imgs || !labs) throw IoError("cannot write MNIST files under " + dir);
        write_be32(imgs, 0x00000803u);
        write_be32(imgs, static_cast<std::uint32_t>(count));
        write_be32(imgs, dim);
        write_be32(imgs, dim);
        write_be32(labs, 0x00000801u);
        write_be32(labs, static_cast<std::uint32_t>(count));
        std::vector<unsigned char> pixels(static_cast<std::size_t>(dim) * dim);
        for (int i = 0; i < count; ++i) {
            const int label = i % 10;
            render_sample(recipes, label, rng, dim, 1, 7, kMnistKnobs, pixels.data());
            imgs.write(reinterpret_cast<const char*>(pixels.data()),
                       static_cast<std::streamsize>(pixels.size()));
            const unsigned char lb = static_cast<unsigned char>(label);
            labs.write(reinterpret_cast<const char*>(&lb), 1);
        }
        if (!imgs || !labs) throw IoError("write failed under " + dir);
    };
    write_pair(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte", n_train);
    write_pair(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte", n_test);
}

} // namespace insnn::io

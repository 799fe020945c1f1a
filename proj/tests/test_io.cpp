#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "insnn/checkpoint.hpp"
#include "insnn/config.hpp"
#include "insnn/datasets.hpp"
#include "insnn/rng.hpp"

using namespace insnn;
using namespace insnn::io;

namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::create_directories(dir);
    return dir;
}

std::vector<unsigned char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("cifar10 loader round-trips a hand-built record") {
    const fs::path dir = temp_dir("insnn_io_cifar");
    const fs::path file = dir / "two_records.bin";
    {
        std::ofstream out(file, std::ios::binary);
        // record 1: label 3, red plane 255, green 128, blue 0
        out.put(3);
        for (int i = 0; i < 1024; ++i) out.put(static_cast<char>(255));
        for (int i = 0; i < 1024; ++i) out.put(static_cast<char>(128));
        for (int i = 0; i < 1024; ++i) out.put(static_cast<char>(0));
        // record 2: label 9, all 51 (= 0.2)
        out.put(9);
        for (int i = 0; i < 3072; ++i) out.put(static_cast<char>(51));
    }
    Dataset d = load_cifar10(file.string());
    REQUIRE(d.size() == 2);
    CHECK(d.labels[0] == 3);
    CHECK(d.labels[1] == 9);
    CHECK(d.images[0](0, 0, 0) == doctest::Approx(1.0f));
    CHECK(d.images[0](1, 16, 16) == doctest::Approx(128.0f / 255.0f));
    CHECK(d.images[0](2, 31, 31) == doctest::Approx(0.0f));
    CHECK(d.images[1](1, 5, 5) == doctest::Approx(0.2f).epsilon(1e-3));
}

TEST_CASE("cifar10 loader rejects truncated files with the byte offset") {
    const fs::path dir = temp_dir("insnn_io_cifar");
    const fs::path file = dir / "truncated.bin";
    {
        std::ofstream out(file, std::ios::binary);
        for (int i = 0; i < 3073 + 100; ++i) out.put(static_cast<char>(i & 0x7f));
    }
    try {
        load_cifar10(file.string());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("3073") != std::string::npos);
        CHECK(std::string(e.what()).find("offset 3073") != std::string::npos);
    }
}

TEST_CASE("mnist loader parses IDX and validates magics") {
    const fs::path dir = temp_dir("insnn_io_mnist");
    write_synthetic_mnist(dir.string(), 30, 10, 5);

    Dataset train = load_mnist((dir / "train-images-idx3-ubyte").string());
    CHECK(train.size() == 30);
    CHECK(train.height == 28);
    CHECK(train.width == 28);
    for (float v : train.images[0].values()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }

    // corrupt the magic of a copy
    const fs::path bad = dir / "bad-images-idx3-ubyte";
    auto bytes = slurp(dir / "train-images-idx3-ubyte");
    bytes[3] = 0x07; // 0x00000807 instead of 0x00000803
    {
        std::ofstream out(bad, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    try {
        load_mnist(bad.string(), (dir / "train-labels-idx1-ubyte").string());
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
        CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
    }

    // truncated image payload
    const fs::path cut = dir / "cut-images-idx3-ubyte";
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), 16 + 100);
    }
    bytes[3] = 0x03;
    CHECK_THROWS_AS(load_mnist(cut.string(), (dir / "train-labels-idx1-ubyte").string()),
                    FormatError);
}

TEST_CASE("synthetic corpora are deterministic and balanced") {
    const fs::path a = temp_dir("insnn_io_syn_a");
    const fs::path b = temp_dir("insnn_io_syn_b");
    write_synthetic_cifar10(a.string(), 100, 20, 9);
    write_synthetic_cifar10(b.string(), 100, 20, 9);
    CHECK(slurp(a / "data_batch_1.bin") == slurp(b / "data_batch_1.bin"));
    CHECK(slurp(a / "test_batch.bin") == slurp(b / "test_batch.bin"));

    Dataset d = load_cifar10((a / "data_batch_1.bin").string());
    std::vector<int> counts(10, 0);
    for (int label : d.labels) ++counts[static_cast<std::size_t>(label)];
    for (int c : counts) CHECK(c == 10);
}

TEST_CASE("subset is seeded and class-preserving") {
    const fs::path dir = temp_dir("insnn_io_subset");
    write_synthetic_cifar10(dir.string(), 60, 10, 13);
    Dataset d = load_cifar10((dir / "data_batch_1.bin").string());
    Dataset s1 = subset(d, 20, 77);
    Dataset s2 = subset(d, 20, 77);
    REQUIRE(s1.size() == 20);
    CHECK(s1.labels == s2.labels);
    for (std::size_t i = 0; i < s1.size(); ++i)
        CHECK(s1.images[i].values() == s2.images[i].values());
    Dataset s3 = subset(d, 20, 78);
    CHECK(s1.labels != s3.labels); // overwhelmingly likely under a new seed
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    const fs::path dir = temp_dir("insnn_io_ckpt");
    Checkpoint ckpt;
    ckpt.config_echo = {{"experiment", "unit"}, {"seed", 7}};
    ckpt.metrics = {{"accuracy", 0.75}};
    Rng rng = make_rng(15);
    Tensor a({3, 4, 5});
    fill_normal(a, rng);
    Tensor b({7});
    fill_uniform(b, rng, -10.0f, 10.0f);
    b(0) = 0.0f;
    b(1) = -0.0f;
    b(2) = std::numeric_limits<float>::denorm_min();
    ckpt.add("weights.a", a);
    ckpt.add("weights.b", b);

    const std::string path = (dir / "unit.ckpt").string();
    ckpt.save(path);
    Checkpoint loaded = Checkpoint::load(path);

    CHECK(loaded.version == 1);
    CHECK(loaded.config_echo.at("experiment") == "unit");
    CHECK(loaded.metrics.at("accuracy") == 0.75);
    REQUIRE(loaded.tensors.size() == 2);
    const Tensor& la = loaded.require("weights.a");
    REQUIRE(la.shape() == a.shape());
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        // exact bit pattern, not approximate equality
        std::uint32_t x, y;
        std::memcpy(&x, &a.data()[i], 4);
        std::memcpy(&y, &la.data()[i], 4);
        CHECK(x == y);
    }
    const Tensor& lb = loaded.require("weights.b");
    for (std::int64_t i = 0; i < b.numel(); ++i) CHECK(lb[i] == b[i]);

    // save(load(x)) equals save(x) byte for byte
    const std::string path2 = (dir / "unit2.ckpt").string();
    loaded.save(path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("checkpoint rejects foreign or damaged files") {
    const fs::path dir = temp_dir("insnn_io_ckpt");
    const fs::path garbage = dir / "garbage.ckpt";
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "not a checkpoint at all";
    }
    CHECK_THROWS_AS(Checkpoint::load(garbage.string()), FormatError);
    CHECK_THROWS_AS(Checkpoint::load((dir / "missing.ckpt").string()), IoError);
}

TEST_CASE("network checkpoints restore every state tensor") {
    net::NetworkConfig cfg = net::NetworkConfig::vgg6_lite(8, {3, 32, 32}, 10);
    net::Network a = net::build_network(cfg, 3);
    net::Network b = net::build_network(cfg, 99); // different init

    const fs::path dir = temp_dir("insnn_io_ckpt");
    Checkpoint ckpt = checkpoint_from_network(a, {{"kind", "unit"}});
    const std::string path = (dir / "net.ckpt").string();
    ckpt.save(path);
    apply_to_network(Checkpoint::load(path), b);

    auto pa = a.state_tensors();
    auto pb = b.state_tensors();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].first == pb[i].first);
        CHECK(pa[i].second->values() == pb[i].second->values());
    }

    // shape mismatch is refused
    net::Network wide = net::build_network(net::NetworkConfig::vgg6_lite(16, {3, 32, 32}, 10), 1);
    CHECK_THROWS_AS(apply_to_network(Checkpoint::load(path), wide), DimensionError);
}

TEST_CASE("fused frontend survives the checkpoint container") {
    Rng rng = make_rng(21);
    Tensor theta({4, 3, 5, 5});
    fill_normal(theta, rng, 0.0f, 0.3f);
    analog::BNParams bn;
    bn.gamma = Tensor::full({4}, 1.2f);
    bn.beta = Tensor::full({4}, 0.1f);
    bn.mu = Tensor::full({4}, -0.05f);
    bn.sigma2 = Tensor::full({4}, 0.8f);
    bn.eps = 1e-5f;
    analog::FuseOptions opts;
    opts.curve = analog::CurveModel::saturating(1.0, 2.0);
    opts.stride = 2;
    opts.padding = 2;
    opts.pool_window = 2;
    opts.quant_bits = 4;
    opts.normalize_range = true;
    analog::FusedFrontend fe = analog::fuse_bn(theta, bn, 1.0, opts);

    Checkpoint ckpt;
    add_frontend(ckpt, fe);
    const fs::path dir = temp_dir("insnn_io_ckpt");
    const std::string path = (dir / "frontend.ckpt").string();
    ckpt.save(path);

    Checkpoint loaded = Checkpoint::load(path);
    REQUIRE(has_frontend(loaded));
    analog::FusedFrontend fe2 = frontend_from_checkpoint(loaded);
    CHECK(fe2.banks.positive.values() == fe.banks.positive.values());
    CHECK(fe2.banks.negative.values() == fe.banks.negative.values());
    CHECK(fe2.trip_points == fe.trip_points); // double-exact via the JSON header
    CHECK(fe2.voltage_scale == fe.voltage_scale);
    CHECK(fe2.curve.family == fe.curve.family);
    CHECK(fe2.curve.coefficients == fe.curve.coefficients);
    CHECK(fe2.stride == fe.stride);
    CHECK(fe2.pool_window == fe.pool_window);

    Tensor image({3, 16, 16});
    fill_uniform(image, rng);
    Tensor s1 = analog::frontend_forward(image, fe);
    Tensor s2 = analog::frontend_forward(image, fe2);
    CHECK(s1.values() == s2.values());
}

TEST_CASE("experiment config parsing and validation") {
    const fs::path dir = temp_dir("insnn_io_cfg");
    const fs::path data_dir = dir / "data";
    fs::create_directories(data_dir);

    const fs::path good = dir / "good.json";
    {
        std::ofstream out(good);
        out << R"({
  "seed": 42,
  "dataset": {"name": "mnist", "path": ")" << data_dir.string() << R"(",
              "train_subset": 100, "test_subset": 20, "synthesize_if_missing": true},
  "network": {"preset": "vgg6_lite", "first_channels": 8, "input": [1, 28, 28], "classes": 10},
  "training": {"epochs": 2, "batch_size": 16, "lr": 0.05},
  "frontend": {"curve_family": "saturating", "quant_bits": 4},
  "out_dir": ")" << (dir / "out").string() << R"("
})";
    }
    ExperimentConfig cfg = load_experiment_config(good.string());
    CHECK(cfg.hyper.seed == 42);
    CHECK(cfg.dataset.name == "mnist");
    CHECK(cfg.hyper.epochs == 2);
    CHECK(cfg.network.layers.size() > 5);
    CHECK(cfg.frontend.quant_bits == 4);

    // missing seed
    const fs::path noseed = dir / "noseed.json";
    {
        std::ofstream out(noseed);
        out << R"({"dataset": {"name": "mnist", "path": "x", "synthesize_if_missing": true},
                   "network": {"preset": "vgg6_lite", "input": [1,28,28]}})";
    }
    CHECK_THROWS_AS(load_experiment_config(noseed.string()), ConfigError);

    // syntax error carries the line number
    const fs::path broken = dir / "broken.json";
    {
        std::ofstream out(broken);
        out << "{\n  \"seed\": 1,\n  \"dataset\": oops\n}\n";
    }
    try {
        load_experiment_config(broken.string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    // nonexistent dataset path without synthesize_if_missing
    const fs::path badpath = dir / "badpath.json";
    {
        std::ofstream out(badpath);
        out << R"({"seed": 1,
                   "dataset": {"name": "mnist", "path": "/no/such/dir"},
                   "network": {"preset": "vgg6_lite", "input": [1,28,28]}})";
    }
    CHECK_THROWS_AS(load_experiment_config(badpath.string()), ConfigError);
}

TEST_CASE("load_dataset synthesizes the stand-in corpus when asked") {
    const fs::path dir = temp_dir("insnn_io_load");
    DatasetConfig cfg;
    cfg.name = "cifar10";
    cfg.path = (dir / "cifar").string();
    cfg.train_subset = 50;
    cfg.test_subset = 10;
    cfg.synthesize_if_missing = true;
    DatasetPair pair = load_dataset(cfg, 3);
    CHECK(pair.train.size() == 50);
    CHECK(pair.test.size() == 10);
    CHECK(pair.train.channels == 3);

    // second call loads the already-written files, same content
    DatasetPair again = load_dataset(cfg, 3);
    CHECK(again.train.labels == pair.train.labels);
}

TEST_CASE("metrics CSV format") {
    const fs::path dir = temp_dir("insnn_io_csv");
    std::vector<training::EpochRow> rows = {
        {0, "train", 2.302585f, 0.1f, 0.25f},
        {0, "test", 2.2f, 0.15f, 0.24f},
    };
    const std::string path = (dir / "metrics.csv").string();
    write_metrics_csv(path, rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,split,loss,accuracy,mean_spike_rate");
    std::getline(in, line);
    CHECK(line == "0,train,2.302585,0.100000,0.250000");
}

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hookmil/bag_io.hpp"
#include "hookmil/checkpoint.hpp"
#include "hookmil/config.hpp"
#include "hookmil/errors.hpp"
#include "hookmil/metrics.hpp"
#include "hookmil/model.hpp"
#include "hookmil/rng.hpp"

using namespace hookmil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hookmil_io_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::vector<char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::vector<char>(std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>());
}

void dump(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string slurp_text(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

// float32-representable random values, as the generator produces
Matrix random_f32_matrix(std::size_t n, std::size_t d, Rng& rng) {
    Matrix m(n, d);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = static_cast<double>(static_cast<float>(rng.normal()));
    return m;
}

}  // namespace

// ==== bag files ==============================================================

TEST_CASE("bag files round-trip exactly") {
    TempDir dir;
    Rng rng(1);
    for (auto [n, d] : {std::pair<std::size_t, std::size_t>{1, 1},
                        {3, 7},
                        {64, 32}}) {
        Matrix m = random_f32_matrix(n, d, rng);
        std::string path = dir.file("bag.hkb");
        write_bag(path, m);
        BagFeatures back = read_bag(path);
        CHECK(back.features == m);
    }
}

TEST_CASE("bag writer creates parent directories") {
    TempDir dir;
    std::string path = dir.file("a/b/c/bag.hkb");
    Matrix m(2, 2, 1.0);
    write_bag(path, m);
    CHECK(read_bag(path).features == m);
}

TEST_CASE("bag reader rejects malformed files distinctly") {
    TempDir dir;
    Matrix m(2, 3, 1.5);
    std::string good = dir.file("good.hkb");
    write_bag(good, m);
    std::vector<char> bytes = slurp(good);

    // bad magic
    std::vector<char> tampered = bytes;
    tampered[0] = 'X';
    dump(dir.file("magic.hkb"), tampered);
    CHECK_THROWS_WITH_AS(read_bag(dir.file("magic.hkb")),
                         doctest::Contains("bad magic"), ParseError);

    // unsupported version
    tampered = bytes;
    tampered[4] = 9;
    dump(dir.file("version.hkb"), tampered);
    CHECK_THROWS_WITH_AS(read_bag(dir.file("version.hkb")),
                         doctest::Contains("version"), ParseError);

    // truncated payload
    tampered = bytes;
    tampered.resize(bytes.size() - 4);
    dump(dir.file("short.hkb"), tampered);
    CHECK_THROWS_WITH_AS(read_bag(dir.file("short.hkb")),
                         doctest::Contains("truncated"), ParseError);

    // N so large the payload cannot be addressed
    tampered = bytes;
    // N lives at offset 8 as u64 little-endian
    for (int i = 0; i < 8; ++i)
        tampered[8 + i] = static_cast<char>(0xff);
    dump(dir.file("overflow.hkb"), tampered);
    CHECK_THROWS_AS(read_bag(dir.file("overflow.hkb")), ParseError);

    // zero-shape header
    tampered = bytes;
    for (int i = 0; i < 8; ++i) tampered[8 + i] = 0;
    dump(dir.file("empty.hkb"), tampered);
    CHECK_THROWS_AS(read_bag(dir.file("empty.hkb")), ParseError);

    CHECK_THROWS_AS(read_bag(dir.file("does_not_exist.hkb")), IoError);
    CHECK_THROWS_AS(write_bag(dir.file("none.hkb"), Matrix()), IoError);
}

// ==== manifests ==============================================================

TEST_CASE("manifests round-trip and tolerate comments") {
    TempDir dir;
    std::vector<ManifestEntry> entries = {
        {"bags/a.hkb", 0, "a"},
        {"bags/b.hkb", 1, "b"},
    };
    std::string path = dir.file("split.tsv");
    write_manifest(path, entries);

    // prepend decoration the reader must skip
    std::string text = "# comment line\n\n" + slurp_text(path);
    std::ofstream(path) << text;

    std::vector<ManifestEntry> back = read_manifest(path, 2);
    REQUIRE(back.size() == 2);
    CHECK(back[0].bag_path == "bags/a.hkb");
    CHECK(back[0].label == 0);
    CHECK(back[1].bag_id == "b");
}

TEST_CASE("manifest errors carry the line number") {
    TempDir dir;
    std::string path = dir.file("bad.tsv");

    std::ofstream(path) << "bags/a.hkb\t0\ta\nbags/b.hkb\tnot_a_label\tb\n";
    CHECK_THROWS_WITH_AS(read_manifest(path, 2), doctest::Contains("line 2"),
                         ParseError);

    std::ofstream(path) << "only_one_field\n";
    CHECK_THROWS_WITH_AS(read_manifest(path, 2), doctest::Contains("line 1"),
                         ParseError);

    // label outside [0, num_classes)
    std::ofstream(path) << "bags/a.hkb\t2\ta\n";
    CHECK_THROWS_AS(read_manifest(path, 2), ParseError);
    std::ofstream(path) << "bags/a.hkb\t-1\ta\n";
    CHECK_THROWS_AS(read_manifest(path, 2), ParseError);

    CHECK_THROWS_AS(read_manifest(dir.file("absent.tsv"), 2), IoError);
    CHECK_THROWS_AS(read_manifest(path, 0), ConfigError);
}

TEST_CASE("datasets resolve bag paths against the manifest directory") {
    TempDir dir;
    Matrix m(4, 3, 2.0);
    write_bag(dir.file("bags/x.hkb"), m);
    write_manifest(dir.file("split.tsv"), {{"bags/x.hkb", 1, "x"}});

    std::vector<BagFeatures> bags = load_dataset(dir.file("split.tsv"), 2);
    REQUIRE(bags.size() == 1);
    CHECK(bags[0].features == m);
    CHECK(bags[0].label == 1);
    CHECK(bags[0].bag_id == "x");
}

TEST_CASE("datasets reject non-finite features by path") {
    TempDir dir;
    // hand-craft a bag holding an infinity
    std::string path = dir.file("bags/inf.hkb");
    Matrix m(1, 2, 1.0);
    write_bag(path, m);
    std::vector<char> bytes = slurp(path);
    // payload starts after the 24-byte header; +inf float32 is 0x7f800000
    bytes[24] = 0;
    bytes[25] = 0;
    bytes[26] = static_cast<char>(0x80);
    bytes[27] = 0x7f;
    dump(path, bytes);

    write_manifest(dir.file("split.tsv"), {{"bags/inf.hkb", 0, "inf"}});
    CHECK_THROWS_WITH_AS(load_dataset(dir.file("split.tsv"), 2),
                         doctest::Contains("inf.hkb"), ParseError);
}

// ==== checkpoints ============================================================

TEST_CASE("checkpoints round-trip for both model kinds") {
    TempDir dir;
    for (ModelKind kind : {ModelKind::HookMil, ModelKind::Abmil}) {
        ModelShape shape;
        shape.dim = 8;
        shape.hooks = 3;
        shape.heads = 2;
        shape.attn_dim = 6;
        shape.classes = 2;
        shape.kind = kind;
        Rng rng(kind == ModelKind::HookMil ? 11 : 12);
        ModelParams params = init_model(shape, HookInitStrategy::trunc_normal(),
                                        rng);

        CheckpointPayload payload;
        payload.config_text = "model=" + to_string(kind) + "\n";
        payload.tensors = snapshot_tensors(params);

        std::string path = dir.file("model.hkck");
        write_checkpoint(path, payload);
        CheckpointPayload back = read_checkpoint(path);
        CHECK(back.config_text == payload.config_text);
        REQUIRE(back.tensors.size() == payload.tensors.size());
        for (std::size_t i = 0; i < back.tensors.size(); ++i) {
            CHECK(back.tensors[i].first == payload.tensors[i].first);
            CHECK(back.tensors[i].second == payload.tensors[i].second);
        }

        // tensors restore into a freshly initialized model exactly
        Rng rng2(999);
        ModelParams fresh = init_model(shape, HookInitStrategy::trunc_normal(),
                                       rng2);
        fill_params(fresh, back.tensors);
        std::vector<std::pair<std::string, Matrix>> again =
            snapshot_tensors(fresh);
        for (std::size_t i = 0; i < again.size(); ++i)
            CHECK(again[i].second == payload.tensors[i].second);
    }
}

TEST_CASE("checkpoint reader rejects tampered files") {
    TempDir dir;
    CheckpointPayload payload;
    payload.config_text = "hooks=2\n";
    payload.tensors = {{"a", Matrix(2, 2, 1.0)}};
    std::string good = dir.file("good.hkck");
    write_checkpoint(good, payload);
    std::vector<char> bytes = slurp(good);

    std::vector<char> tampered = bytes;
    tampered[0] = 'Z';
    dump(dir.file("magic.hkck"), tampered);
    CHECK_THROWS_WITH_AS(read_checkpoint(dir.file("magic.hkck")),
                         doctest::Contains("bad magic"), ParseError);

    tampered = bytes;
    tampered[4] = 7;
    dump(dir.file("version.hkck"), tampered);
    CHECK_THROWS_AS(read_checkpoint(dir.file("version.hkck")), ParseError);

    tampered = bytes;
    tampered.resize(bytes.size() - 8);
    dump(dir.file("short.hkck"), tampered);
    CHECK_THROWS_AS(read_checkpoint(dir.file("short.hkck")), ParseError);

    CHECK_THROWS_AS(read_checkpoint(dir.file("absent.hkck")), IoError);
}

TEST_CASE("fill_params polices the tensor inventory") {
    ModelShape shape;
    shape.dim = 8;
    shape.attn_dim = 6;
    shape.classes = 2;
    shape.kind = ModelKind::Abmil;
    Rng rng(13);
    ModelParams params = init_model(shape, HookInitStrategy::trunc_normal(),
                                    rng);
    std::vector<std::pair<std::string, Matrix>> tensors =
        snapshot_tensors(params);

    // unknown tensor
    auto with_extra = tensors;
    with_extra.emplace_back("mystery", Matrix(1, 1, 0.0));
    CHECK_THROWS_WITH_AS(fill_params(params, with_extra),
                         doctest::Contains("mystery"), ParseError);

    // duplicate
    auto with_dup = tensors;
    with_dup.push_back(tensors.front());
    CHECK_THROWS_WITH_AS(fill_params(params, with_dup),
                         doctest::Contains("duplicate"), ParseError);

    // missing
    auto short_list = tensors;
    short_list.pop_back();
    CHECK_THROWS_WITH_AS(fill_params(params, short_list),
                         doctest::Contains("missing"), ParseError);

    // shape mismatch names the tensor and both shapes
    auto reshaped = tensors;
    reshaped[0].second = Matrix(1, 3, 0.0);
    CHECK_THROWS_WITH_AS(fill_params(params, reshaped),
                         doctest::Contains(reshaped[0].first.c_str()),
                         DimensionError);
}

// ==== run configuration ======================================================

TEST_CASE("config defaults survive a text round-trip") {
    RunConfig cfg;
    std::string text = cfg.to_text();
    RunConfig back = config_from_text(text, "roundtrip");
    CHECK(back.to_text() == text);
    CHECK(back.hooks == 8);
    CHECK(back.lambda == 0.2);
    CHECK(back.separation == 4.0);
    CHECK(back.model == ModelKind::HookMil);
}

TEST_CASE("apply parses each key and rejects junk naming the key") {
    RunConfig cfg;
    cfg.apply("hooks", "16");
    CHECK(cfg.hooks == 16);
    cfg.apply("lambda", "0.5");
    CHECK(cfg.lambda == 0.5);
    cfg.apply("model", "abmil");
    CHECK(cfg.model == ModelKind::Abmil);
    cfg.apply("task", "witness");
    CHECK(cfg.task == SynthTask::Witness);
    cfg.apply("hook_init", "trunc-normal:0.1");
    CHECK(cfg.hook_init.stddev == 0.1);
    cfg.apply("attn_dim", "64");
    CHECK(cfg.attn_dim == 64);
    cfg.apply("seed", "42");
    CHECK(cfg.seed == 42);

    CHECK_THROWS_WITH_AS(cfg.apply("foo", "1"), doctest::Contains("foo"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(cfg.apply("hooks", "many"),
                         doctest::Contains("hooks"), ConfigError);
    CHECK_THROWS_WITH_AS(cfg.apply("lambda", "0.2x"),
                         doctest::Contains("lambda"), ConfigError);
}

TEST_CASE("precedence is defaults, then file, then overrides") {
    TempDir dir;
    CHECK(load_run_config("", {}).lambda == 0.2);

    std::string path = dir.file("run.cfg");
    std::ofstream(path) << "# training setup\nlambda=0.5\nhooks=4\n";
    RunConfig from_file = load_run_config(path, {});
    CHECK(from_file.lambda == 0.5);
    CHECK(from_file.hooks == 4);

    RunConfig with_override = load_run_config(path, {{"lambda", "0.7"}});
    CHECK(with_override.lambda == 0.7);
    CHECK(with_override.hooks == 4);  // file value survives
}

TEST_CASE("config text errors carry origin and line number") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("hooks=2\nhooks=3\n", "dup.cfg"),
        doctest::Contains("dup.cfg line 2"), ParseError);
    CHECK_THROWS_WITH_AS(parse_config_text("no_equals_here\n", "bad.cfg"),
                         doctest::Contains("line 1"), ParseError);
    CHECK_THROWS_AS(parse_config_text("=value\n", "bad.cfg"), ParseError);
}

TEST_CASE("validate rejects unusable configurations") {
    RunConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = RunConfig{};
    cfg.dim = 10;
    cfg.heads = 4;  // 10 % 4 != 0
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = RunConfig{};
    cfg.classes = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = RunConfig{};
    cfg.lambda = -0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = RunConfig{};
    cfg.lambda = 0.0;  // explicitly allowed: disables the diversity term
    cfg.validate();
}

// ==== metrics csv ============================================================

TEST_CASE("metrics csv format is frozen") {
    CHECK(metrics_csv_header() ==
          "epoch,total_loss,ce,div,acc,macro_f1,macro_auc,hook_sim");
    EpochMetrics m;
    m.epoch = 3;
    m.total_loss = 1.0 / 3.0;
    m.ce = 0.25;
    m.div = 0.0;
    m.acc = 1.0;
    m.macro_f1 = 0.875;
    m.macro_auc = 0.98765432101;  // 11 significant digits in, 9 out
    m.hook_sim = 0.5;
    CHECK(metrics_csv_row(m) ==
          "3,0.333333333,0.25,0,1,0.875,0.987654321,0.5");
}

TEST_CASE("metrics csv files are written whole") {
    TempDir dir;
    std::vector<EpochMetrics> history(2);
    history[0].epoch = 1;
    history[1].epoch = 2;
    history[1].macro_auc = 0.75;
    std::string path = dir.file("out/metrics.csv");
    write_metrics_csv(path, history);
    std::string text = slurp_text(path);
    CHECK(text ==
          "epoch,total_loss,ce,div,acc,macro_f1,macro_auc,hook_sim\n"
          "1,0,0,0,0,0,0,0\n"
          "2,0,0,0,0,0,0.75,0\n");
}

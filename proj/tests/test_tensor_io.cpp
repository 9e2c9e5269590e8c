#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "anoheal/rng.hpp"
#include "anoheal/tensor_io.hpp"

using namespace anoheal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("anoheal_io_" + std::to_string(Rng(std::random_device{}())()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Image random_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);
    for (auto& v : img.v) v = static_cast<float>(uniform_double(rng));
    return img;
}

} // namespace

TEST_CASE("save/load round trip is bit exact") {
    TempDir dir;
    const Image img = random_image(64, 64, 1);
    save_image(dir.path / "a.ahtc", img);
    const Image back = load_image(dir.path / "a.ahtc");
    CHECK(back.h == 64);
    CHECK(back.w == 64);
    CHECK(back.v == img.v);
}

TEST_CASE("peek reads the shape without the payload") {
    TempDir dir;
    save_image(dir.path / "a.ahtc", random_image(16, 48, 2));
    const auto shape = peek_tensor_shape(dir.path / "a.ahtc");
    CHECK(shape == std::vector<int>{16, 48});
}

TEST_CASE("truncated payload is a distinct error") {
    TempDir dir;
    const auto p = dir.path / "a.ahtc";
    save_image(p, random_image(32, 32, 3));
    const auto full = fs::file_size(p);
    fs::resize_file(p, full - 64);
    CHECK_THROWS_AS(load_tensor(p), TruncatedPayloadError);
}

TEST_CASE("trailing bytes are rejected") {
    TempDir dir;
    const auto p = dir.path / "a.ahtc";
    save_image(p, random_image(32, 32, 4));
    std::ofstream(p, std::ios::binary | std::ios::app) << "junk";
    CHECK_THROWS_AS(load_tensor(p), TruncatedPayloadError);
}

TEST_CASE("malformed headers are rejected") {
    TempDir dir;
    const auto p = dir.path / "bad.ahtc";
    {
        std::ofstream out(p, std::ios::binary);
        out << "NOPE";
        const uint32_t len = 2;
        out.write(reinterpret_cast<const char*>(&len), 4);
        out << "{}";
    }
    CHECK_THROWS_AS(load_tensor(p), MalformedHeaderError);

    {
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        out.write(kTensorMagic, 4);
        const uint32_t len = 9;
        out.write(reinterpret_cast<const char*>(&len), 4);
        out << "not json!";
    }
    CHECK_THROWS_AS(load_tensor(p), MalformedHeaderError);
}

TEST_CASE("unsupported dtype is a distinct error") {
    TempDir dir;
    const auto p = dir.path / "f64.ahtc";
    {
        std::ofstream out(p, std::ios::binary);
        out.write(kTensorMagic, 4);
        const std::string header = R"({"shape":[2,2],"dtype":"f64","version":1})";
        const uint32_t len = static_cast<uint32_t>(header.size());
        out.write(reinterpret_cast<const char*>(&len), 4);
        out << header;
    }
    CHECK_THROWS_AS(load_tensor(p), DtypeError);
}

TEST_CASE("zero-sized shapes are rejected at save time") {
    TempDir dir;
    const float value = 0.0f;
    CHECK_THROWS_AS(save_tensor(dir.path / "z.ahtc", {0, 4}, &value), ConfigError);
    CHECK_THROWS_AS(save_tensor(dir.path / "z.ahtc", {}, &value), ConfigError);
    CHECK_THROWS_AS(save_tensor(dir.path / "z.ahtc", {4, -1}, &value), ConfigError);
}

TEST_CASE("missing file raises a data error") {
    CHECK_THROWS_AS(load_tensor("/nonexistent/path.ahtc"), DataError);
}

TEST_CASE("load_image requires 2D tensors") {
    TempDir dir;
    const std::vector<float> payload(8, 0.5f);
    save_tensor(dir.path / "cube.ahtc", {2, 2, 2}, payload.data());
    CHECK_THROWS_AS(load_image(dir.path / "cube.ahtc"), DtypeError);
}

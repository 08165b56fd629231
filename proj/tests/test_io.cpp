#include <catch2/catch_amalgamated.hpp>

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "sftip/image_io.hpp"
#include "sftip/manifest.hpp"

using namespace sftip;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sftip_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

RealField random_levels(int w, int h, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_int_distribution<int> dist(0, 65535);
    RealField f(w, h);
    for (double& v : f.samples()) v = dist(gen);
    return f;
}

// 8-bit grayscale PNG through stock libpng, so the 8-bit read path is
// exercised against an independent encoder.
void write_png8_reference(const std::string& path, const std::vector<unsigned char>& pix,
                          int w, int h) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png)) != 0) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        FAIL("reference PNG write failed");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<unsigned char*>(pix.data() + static_cast<std::size_t>(y) * w));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

TEST_CASE("16-bit PNG roundtrip is exact") {
    TempDir dir;
    const RealField levels = random_levels(33, 17, 1);
    const std::string path = dir.file("a.png");
    write_image_levels(path, levels);
    const RealField back = read_image_levels(path);
    REQUIRE(back.same_shape(levels));
    for (std::size_t i = 0; i < levels.size(); ++i) CHECK(back[i] == levels[i]);
}

TEST_CASE("8-bit PNG reads scaled to 16-bit levels") {
    TempDir dir;
    std::vector<unsigned char> pix = {0, 1, 128, 255, 7, 200};
    const std::string path = dir.file("b.png");
    write_png8_reference(path, pix, 3, 2);
    const RealField f = read_image_levels(path);
    REQUIRE(f.width() == 3);
    REQUIRE(f.height() == 2);
    for (int i = 0; i < 6; ++i) CHECK(f[static_cast<std::size_t>(i)] == pix[i] * 257.0);

    const RealField norm = read_image_normalized(path);
    CHECK(norm[3] == Catch::Approx(1.0));
}

TEST_CASE("16-bit TIFF roundtrip is exact") {
    TempDir dir;
    const RealField levels = random_levels(20, 31, 2);
    for (const char* name : {"c.tif", "c2.tiff"}) {
        const std::string path = dir.file(name);
        write_image_levels(path, levels);
        const RealField back = read_image_levels(path);
        REQUIRE(back.same_shape(levels));
        for (std::size_t i = 0; i < levels.size(); ++i) CHECK(back[i] == levels[i]);
    }
}

TEST_CASE("TIFF writer emits a classic little-endian header") {
    TempDir dir;
    const std::string path = dir.file("d.tif");
    write_image_levels(path, random_levels(5, 4, 3));
    std::ifstream is(path, std::ios::binary);
    unsigned char head[8];
    is.read(reinterpret_cast<char*>(head), 8);
    CHECK(head[0] == 'I');
    CHECK(head[1] == 'I');
    CHECK(head[2] == 42);
    CHECK(head[3] == 0);
}

TEST_CASE("big-endian and 8-bit TIFF variants decode") {
    // Hand-assembled 2x1, 8-bit, big-endian (MM) TIFF, single strip.
    std::vector<unsigned char> mm = {
        'M', 'M', 0, 42, 0, 0, 0, 8,  // header, IFD at 8
    };
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count,
                     std::uint32_t value) {
        mm.push_back(tag >> 8); mm.push_back(tag & 0xff);
        mm.push_back(type >> 8); mm.push_back(type & 0xff);
        for (int i = 3; i >= 0; --i) mm.push_back((count >> (8 * i)) & 0xff);
        if (type == 3) {
            mm.push_back(value >> 8); mm.push_back(value & 0xff);
            mm.push_back(0); mm.push_back(0);
        } else {
            for (int i = 3; i >= 0; --i) mm.push_back((value >> (8 * i)) & 0xff);
        }
    };
    mm.push_back(0); mm.push_back(8);  // 8 entries
    entry(256, 3, 1, 2);               // width 2
    entry(257, 3, 1, 1);               // height 1
    entry(258, 3, 1, 8);               // 8 bits
    entry(259, 3, 1, 1);               // uncompressed
    entry(262, 3, 1, 1);               // black is zero
    entry(273, 4, 1, 8 + 2 + 8 * 12 + 4);  // strip offset: after IFD
    entry(277, 3, 1, 1);               // one sample
    entry(279, 4, 1, 2);               // two bytes
    for (int i = 0; i < 4; ++i) mm.push_back(0);  // no next IFD
    mm.push_back(10);
    mm.push_back(250);

    TempDir dir;
    const std::string path = dir.file("e.tif");
    {
        std::ofstream os(path, std::ios::binary);
        os.write(reinterpret_cast<const char*>(mm.data()),
                 static_cast<std::streamsize>(mm.size()));
    }
    const RealField f = read_image_levels(path);
    REQUIRE(f.width() == 2);
    REQUIRE(f.height() == 1);
    CHECK(f[0] == 10 * 257.0);
    CHECK(f[1] == 250 * 257.0);
}

TEST_CASE("write_image_levels validates range and extension") {
    TempDir dir;
    CHECK_THROWS_AS(write_image_levels(dir.file("f.png"), RealField(2, 2, {0, 1, 2, 70000})),
                    std::invalid_argument);
    CHECK_THROWS_AS(write_image_levels(dir.file("f.bmp"), RealField(2, 2)), IoError);
}

TEST_CASE("read_image_levels rejects junk") {
    TempDir dir;
    const std::string path = dir.file("junk.png");
    {
        std::ofstream os(path, std::ios::binary);
        os << "not an image at all";
    }
    CHECK_THROWS_AS(read_image_levels(path), IoError);
    CHECK_THROWS_AS(read_image_levels(dir.file("missing.png")), IoError);
}

TEST_CASE("no temp residue after writes") {
    TempDir dir;
    write_image_levels(dir.file("g.png"), random_levels(8, 8, 4));
    write_matrix_text(dir.file("g.txt"), random_levels(4, 4, 5));
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) {
        CHECK(e.path().extension() != ".tmp");
        ++files;
    }
    CHECK(files == 2);
}

TEST_CASE("matrix text roundtrip preserves doubles exactly") {
    TempDir dir;
    RealField f(3, 2, {1e-300, -2.5, 0.0, 3.141592653589793, 65535.0, 1.0 / 3.0});
    const std::string path = dir.file("m.txt");
    write_matrix_text(path, f);
    const RealField back = read_matrix_text(path);
    REQUIRE(back.same_shape(f));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);
}

TEST_CASE("matrix text carries a version header") {
    TempDir dir;
    const std::string path = dir.file("m2.txt");
    write_matrix_text(path, RealField(2, 2));
    std::ifstream is(path);
    std::string first;
    std::getline(is, first);
    CHECK(first == "# sftip-matrix format_version=1");

    CHECK_THROWS_AS(read_matrix_text(dir.file("missing.txt")), IoError);
    const std::string bad = dir.file("bad.txt");
    {
        std::ofstream os(bad);
        os << "width 2 height 2\n";
    }
    CHECK_THROWS_AS(read_matrix_text(bad), IoError);
}

TEST_CASE("scaled image writing matches quantization") {
    TempDir dir;
    std::mt19937 gen(6);
    std::uniform_real_distribution<double> dist(0.0, 0.8);
    RealField f(16, 16);
    for (double& v : f.samples()) v = dist(gen);

    const std::string path = dir.file("s.png");
    write_image_scaled(path, f);
    const RealField back = read_image_levels(path);
    const RealField expect = quantize_16bit(f);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == expect[i]);
}

TEST_CASE("manifest set, find, save, load") {
    RunManifest m = make_manifest("simulate");
    m.set("seed", "7");
    m.set("sigma", "0.5");
    m.set("seed", "9");  // overwrite keeps position
    CHECK(m.entries.front().first == "format_version");
    REQUIRE(m.find("seed") != nullptr);
    CHECK(*m.find("seed") == "9");
    CHECK(m.find("absent") == nullptr);

    TempDir dir;
    const std::string path = dir.file("manifest.txt");
    m.save(path);
    const RunManifest back = load_key_values(path);
    REQUIRE(back.find("command") != nullptr);
    CHECK(*back.find("command") == "simulate");
    CHECK(*back.find("seed") == "9");
    CHECK(back.entries.size() == m.entries.size());
}

TEST_CASE("config parser handles comments and errors") {
    TempDir dir;
    const std::string path = dir.file("conf.txt");
    {
        std::ofstream os(path);
        os << "# a comment\n"
           << "\n"
           << "  iters = 25   # trailing comment\n"
           << "scene=flat\n";
    }
    const RunManifest m = load_key_values(path);
    REQUIRE(m.find("iters") != nullptr);
    CHECK(*m.find("iters") == "25");
    CHECK(*m.find("scene") == "flat");

    const std::string bad = dir.file("bad.txt");
    {
        std::ofstream os(bad);
        os << "no equals sign here\n";
    }
    CHECK_THROWS_AS(load_key_values(bad), IoError);
}

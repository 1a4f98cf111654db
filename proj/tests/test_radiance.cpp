#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sensim/image.hpp"
#include "sensim/radiance.hpp"
#include "sensim/rng.hpp"

using namespace sensim;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("constant field returns its value everywhere") {
    const ConstantField field({0.25, 0.5, 0.75});
    CHECK(field.sample({0.0, 0.0}) == Vec3{0.25, 0.5, 0.75});
    CHECK(field.sample({-1.0, 1.0}) == Vec3{0.25, 0.5, 0.75});
}

TEST_CASE("linear ramp evaluates affinely") {
    const LinearRampField field;
    CHECK(field.sample({0.0, 0.7}).r == doctest::Approx(0.5));
    CHECK(field.sample({-1.0, 0.0}).r == doctest::Approx(0.0));
    CHECK(field.sample({1.0, -0.3}).r == doctest::Approx(1.0));
}

TEST_CASE("2x2 checker image averages to 0.5 at the domain center") {
    SourceImage img(2, 2, 1);
    img.at(0, 0, 0) = 0.0;
    img.at(1, 0, 0) = 1.0;
    img.at(0, 1, 0) = 0.0;
    img.at(1, 1, 0) = 1.0;
    const ImageField field(std::move(img));
    const Vec3 c = field.sample({0.0, 0.0});
    CHECK(c.r == doctest::Approx(0.5));
    CHECK(c.g == doctest::Approx(0.5));
    CHECK(c.b == doctest::Approx(0.5));
}

TEST_CASE("bilinear sampling hits texel values at texel centers") {
    SourceImage img(4, 3, 3);
    Rng rng = Rng::keyed(5, 0);
    for (double& v : img.data) v = rng.next_double();
    const ImageField field(std::move(img));
    const SourceImage& src = field.image();
    for (int y = 0; y < 3; ++y) {
        for (int x = 0; x < 4; ++x) {
            // Sensor coordinates of the texel center.
            const Vec2 p{(x + 0.5) / 4.0 * 2.0 - 1.0, (y + 0.5) / 3.0 * 2.0 - 1.0};
            const Vec3 c = field.sample(p);
            for (int ch = 0; ch < 3; ++ch)
                CHECK(c[ch] == doctest::Approx(src.at(x, y, ch)).epsilon(1e-12));
        }
    }
}

TEST_CASE("bilinear sampling is Lipschitz continuous") {
    SourceImage img(16, 16, 1);
    Rng rng = Rng::keyed(6, 0);
    for (double& v : img.data) v = rng.next_double();
    const ImageField field(std::move(img));
    const double lipschitz = 2.0 * 16;
    for (int i = 0; i < 2000; ++i) {
        const Vec2 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const Vec2 delta{rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3)};
        Vec2 q = p + delta;
        q.x = std::clamp(q.x, -1.0, 1.0);
        q.y = std::clamp(q.y, -1.0, 1.0);
        const double diff = (field.sample(p) - field.sample(q)).max_abs();
        CHECK(diff <= lipschitz * (q - p).norm() + 1e-12);
    }
}

TEST_CASE("sampling outside the sensor domain throws; tiny overshoot clamps") {
    const ConstantField cfield({0.1, 0.1, 0.1});
    SourceImage img(2, 2, 1);
    const ImageField field(std::move(img));
    CHECK_NOTHROW(field.sample({1.0 + 1e-10, 0.0}));
    CHECK_THROWS_AS(field.sample({1.1, 0.0}), std::domain_error);
    (void)cfield;
}

TEST_CASE("analytic fields match their closed forms at random points") {
    const GaussianBlobField blob({0.1, -0.2}, 0.4);
    const CheckerboardField checker(3.0);
    Rng rng = Rng::keyed(9, 0);
    for (int i = 0; i < 10000; ++i) {
        const Vec2 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double dx = p.x - 0.1, dy = p.y + 0.2;
        CHECK(blob.sample(p).g ==
              doctest::Approx(std::exp(-(dx * dx + dy * dy) / (2 * 0.4 * 0.4))));
        const double expected = 0.5 + 0.5 * std::sin(M_PI * 3 * (p.x + 1)) *
                                          std::sin(M_PI * 3 * (p.y + 1));
        CHECK(checker.sample(p).b == doctest::Approx(expected));
        CHECK(checker.sample(p).b >= 0.0);
        CHECK(checker.sample(p).b <= 1.0);
    }
}

TEST_CASE("PGM roundtrip: 1x1 with value 255 loads as 1.0") {
    const auto path = temp_file("sensim_test_1x1.pgm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n1 1\n255\n";
        out.put(static_cast<char>(255));
    }
    const SourceImage img = load_pnm(path.string());
    CHECK(img.width == 1);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.data[0] == 1.0);
}

TEST_CASE("PPM shape check and byte-exact re-encode") {
    const auto path = temp_file("sensim_test_2x3.ppm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P6\n2 3\n255\n";
        for (int i = 0; i < 18; ++i) out.put(static_cast<char>(i * 13));
    }
    const SourceImage img = load_pnm(path.string());
    CHECK(img.width == 2);
    CHECK(img.height == 3);
    CHECK(img.channels == 3);
    CHECK(img.data.size() == 18);

    const auto out_path = temp_file("sensim_test_2x3_out.ppm");
    write_pnm(img, out_path.string());
    std::ifstream a(path, std::ios::binary), b(out_path, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
}

TEST_CASE("malformed PNM headers are rejected") {
    const auto path = temp_file("sensim_test_bad.ppm");
    {
        std::ofstream out(path, std::ios::binary);
        out << "P4\n2 2\n255\n";
    }
    CHECK_THROWS(load_pnm(path.string()));
    CHECK_THROWS(load_pnm("/nonexistent/file.ppm"));
}

TEST_CASE("PNG loads 8-bit gray and RGB") {
    // Write a tiny PNG through libpng and read it back.
    const auto path = temp_file("sensim_test.png");
    {
        std::FILE* fp = std::fopen(path.string().c_str(), "wb");
        REQUIRE(fp);
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png_create_info_struct(png);
        REQUIRE(setjmp(png_jmpbuf(png)) == 0);
        png_init_io(png, fp);
        png_set_IHDR(png, info, 2, 2, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const std::uint8_t rows[2][6] = {{255, 0, 0, 0, 255, 0}, {0, 0, 255, 255, 255, 255}};
        png_write_row(png, const_cast<png_bytep>(rows[0]));
        png_write_row(png, const_cast<png_bytep>(rows[1]));
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
    }
    const SourceImage img = load_png(path.string());
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.channels == 3);
    CHECK(img.at(0, 0, 0) == 1.0);
    CHECK(img.at(1, 0, 1) == 1.0);
    CHECK(img.at(1, 1, 2) == 1.0);
}

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "diqnn/dataset.hpp"
#include "diqnn/error.hpp"

using namespace diqnn;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "diqnn_dataset_tests";
    fs::create_directories(dir);
    return dir;
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::pair<std::string, std::string> write_idx_fixture(
    const std::vector<std::vector<unsigned char>>& images,
    const std::vector<unsigned char>& labels, std::uint32_t rows, std::uint32_t cols,
    const std::string& tag, std::uint32_t image_magic = 0x00000803,
    std::uint32_t label_magic = 0x00000801, bool truncate_images = false) {
    const fs::path dir = temp_dir();
    const std::string img_path = (dir / (tag + "-images")).string();
    const std::string lbl_path = (dir / (tag + "-labels")).string();
    {
        std::ofstream img(img_path, std::ios::binary);
        write_be32(img, image_magic);
        write_be32(img, std::uint32_t(images.size()));
        write_be32(img, rows);
        write_be32(img, cols);
        for (const auto& pix : images)
            img.write(reinterpret_cast<const char*>(pix.data()),
                      std::streamsize(pix.size()) - (truncate_images ? 1 : 0));
    }
    {
        std::ofstream lbl(lbl_path, std::ios::binary);
        write_be32(lbl, label_magic);
        write_be32(lbl, std::uint32_t(labels.size()));
        lbl.write(reinterpret_cast<const char*>(labels.data()),
                  std::streamsize(labels.size()));
    }
    return {img_path, lbl_path};
}

} // namespace

TEST_CASE("idx fixture with one hot pixel") {
    std::vector<unsigned char> pix(4, 0);
    pix[0] = 255;
    const auto [img, lbl] = write_idx_fixture({pix}, {7}, 2, 2, "one");
    const Dataset d = load_idx(img, lbl);
    CHECK(d.size() == 1);
    CHECK(d.dim() == 4);
    CHECK(d.features(0, 0) == 1.0);
    CHECK(d.features(0, 1) == 0.0);
    CHECK(d.labels[0] == 7);
}

TEST_CASE("idx rejects wrong magic values") {
    std::vector<unsigned char> pix(4, 1);
    // labels file written with the image magic
    const auto [img, lbl] =
        write_idx_fixture({pix}, {1}, 2, 2, "badmagic", 0x00000803, 0x00000803);
    CHECK_THROWS_WITH_AS(load_idx(img, lbl), doctest::Contains("0x00000803"),
                         FormatError);
    const auto [img2, lbl2] =
        write_idx_fixture({pix}, {1}, 2, 2, "badmagic2", 0x00000801, 0x00000801);
    CHECK_THROWS_AS(load_idx(img2, lbl2), FormatError);
}

TEST_CASE("idx detects truncated image payload") {
    std::vector<unsigned char> pix(9, 3);
    const auto [img, lbl] = write_idx_fixture({pix}, {0}, 3, 3, "short",
                                              0x00000803, 0x00000801, true);
    CHECK_THROWS_AS(load_idx(img, lbl), FormatError);
}

TEST_CASE("idx loading is idempotent (same fingerprint twice)") {
    std::vector<std::vector<unsigned char>> images;
    std::vector<unsigned char> labels;
    for (unsigned char i = 0; i < 6; ++i) {
        std::vector<unsigned char> pix(16);
        for (std::size_t p = 0; p < 16; ++p)
            pix[p] = static_cast<unsigned char>(7 * i + 13 * p);
        images.push_back(pix);
        labels.push_back(static_cast<unsigned char>(i % 3));
    }
    const auto [img, lbl] = write_idx_fixture(images, labels, 4, 4, "idem");
    const Dataset a = load_idx(img, lbl);
    const Dataset b = load_idx(img, lbl);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.num_classes == 3);
}

TEST_CASE("delimited parsing maps class names by first appearance") {
    const fs::path p = temp_dir() / "abc.csv";
    std::ofstream(p) << "1.5,2.5,A\n0.5,1.0,B\n2.0,3.0,A\n";
    const Dataset d = load_delimited(p.string(), 2);
    CHECK(d.size() == 3);
    CHECK(d.dim() == 2);
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(d.features(1, 1) == 1.0);
}

TEST_CASE("delimited reports ragged rows and bad cells with coordinates") {
    const fs::path ragged = temp_dir() / "ragged.csv";
    std::ofstream(ragged) << "1,2,A\n3,B\n";
    CHECK_THROWS_WITH_AS(load_delimited(ragged.string(), 2),
                         doctest::Contains("line 2"), ParseError);

    const fs::path bad = temp_dir() / "badcell.csv";
    std::ofstream(bad) << "1,2,A\n3,oops,B\n";
    CHECK_THROWS_WITH_AS(load_delimited(bad.string(), 2),
                         doctest::Contains("line 2"), ParseError);
}

TEST_CASE("delimited supports alternative separators") {
    const fs::path p = temp_dir() / "semi.csv";
    std::ofstream(p) << "1;2;x\n3;4;y\n";
    const Dataset d = load_delimited(p.string(), 2, ';');
    CHECK(d.num_classes == 2);
    CHECK(d.features(1, 0) == 3.0);
}

TEST_CASE("iris-shaped table loads with expected counts") {
    const fs::path p = temp_dir() / "iris_like.csv";
    std::ofstream out(p);
    const char* names[3] = {"setosa", "versicolor", "virginica"};
    for (int i = 0; i < 150; ++i)
        out << 4.0 + 0.01 * i << "," << 3.0 << "," << 1.0 + 0.02 * i << ",0.2,"
            << names[i / 50] << "\n";
    out.close();
    const Dataset d = load_delimited(p.string(), 4);
    CHECK(d.size() == 150);
    CHECK(d.dim() == 4);
    CHECK(d.num_classes == 3);
}

TEST_CASE("xor dataset matches the four-point construction") {
    const Dataset d = make_xor();
    CHECK(d.size() == 4);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(d.features(0, c) == -d.features(3, c)); // x1 = -x4
        CHECK(d.features(1, c) == -d.features(2, c)); // x2 = -x3
    }
    CHECK(d.labels == std::vector<int>{0, 1, 1, 0});
}

TEST_CASE("split rejects boundary fractions") {
    const Dataset d = make_xor();
    CHECK_THROWS_AS(split(d, SplitSpec{0.0, 1}), SpecError);
    CHECK_THROWS_AS(split(d, SplitSpec{1.0, 1}), SpecError);
}

TEST_CASE("split is a deterministic partition") {
    Dataset d;
    std::vector<Vec> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({double(i), double(2 * i)});
    d.features = Matrix::from_rows(rows);
    d.labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    d.num_classes = 2;
    d.name = "ten";

    const auto [tr1, te1] = split(d, SplitSpec{0.3, 42});
    const auto [tr2, te2] = split(d, SplitSpec{0.3, 42});
    CHECK(te1.size() == 3);
    CHECK(tr1.size() == 7);
    CHECK(te1.fingerprint() == te2.fingerprint());
    CHECK(tr1.fingerprint() == tr2.fingerprint());

    // union of the split equals the original multiset
    std::map<double, int> seen;
    for (std::size_t i = 0; i < tr1.size(); ++i) ++seen[tr1.features(i, 0)];
    for (std::size_t i = 0; i < te1.size(); ++i) ++seen[te1.features(i, 0)];
    CHECK(seen.size() == 10);
    for (const auto& [k, v] : seen) CHECK(v == 1);
}

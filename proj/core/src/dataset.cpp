#include "diqnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "diqnn/error.hpp"
#include "diqnn/rng.hpp"

namespace diqnn {

void Dataset::validate() const {
    if (labels.empty()) throw SpecError("dataset is empty");
    if (features.rows() != labels.size())
        throw DimensionError("dataset: feature rows and label count differ");
    if (num_classes < 1) throw SpecError("dataset: class count must be positive");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw SpecError("dataset: label outside [0, k)");
    features.require_finite("dataset features");
}

std::uint64_t Dataset::fingerprint() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix(reinterpret_cast<const unsigned char*>(features.data()),
        features.size() * sizeof(double));
    mix(reinterpret_cast<const unsigned char*>(labels.data()),
        labels.size() * sizeof(int));
    return h;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices,
                        const std::string& suffix) const {
    Dataset out;
    out.features = Matrix(indices.size(), features.cols());
    out.labels.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = features.row(indices[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels[indices[i]]);
    }
    out.num_classes = num_classes;
    out.name = name + suffix;
    return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError(std::string("idx: truncated while reading ") + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError("idx: cannot open " + labels_path);

    const std::uint32_t img_magic = read_be32(img, "image magic");
    if (img_magic != 0x00000803) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "idx: bad image magic 0x%08x", img_magic);
        throw FormatError(buf);
    }
    const std::uint32_t n_images = read_be32(img, "image count");
    const std::uint32_t rows = read_be32(img, "row count");
    const std::uint32_t cols = read_be32(img, "column count");

    const std::uint32_t lab_magic = read_be32(lab, "label magic");
    if (lab_magic != 0x00000801) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "idx: bad label magic 0x%08x", lab_magic);
        throw FormatError(buf);
    }
    const std::uint32_t n_labels = read_be32(lab, "label count");
    if (n_images != n_labels)
        throw FormatError("idx: image and label counts differ");

    const std::size_t d = std::size_t(rows) * cols;
    Dataset out;
    out.features = Matrix(n_images, d);
    out.labels.resize(n_images);
    std::vector<unsigned char> buf(d);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(d));
        if (!img) throw FormatError("idx: image file shorter than header claims");
        double* row = out.features.row(i).data();
        for (std::size_t j = 0; j < d; ++j) row[j] = buf[j] / 255.0;
    }
    std::vector<unsigned char> lbuf(n_labels);
    lab.read(reinterpret_cast<char*>(lbuf.data()), std::streamsize(n_labels));
    if (!lab) throw FormatError("idx: label file shorter than header claims");
    int kmax = 0;
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        out.labels[i] = lbuf[i];
        kmax = std::max(kmax, int(lbuf[i]));
    }
    out.num_classes = kmax + 1;
    out.name = images_path;
    out.validate();
    return out;
}

Dataset load_delimited(const std::string& path, std::size_t label_column,
                       char delimiter) {
    std::ifstream in(path);
    if (!in) throw FormatError("delimited: cannot open " + path);

    std::vector<Vec> rows;
    std::vector<int> labels;
    std::map<std::string, int> class_ids; // insertion order tracked separately
    int next_class = 0;
    std::size_t expected_cols = 0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ss(line);
        while (std::getline(ss, cell, delimiter)) cells.push_back(cell);
        if (!line.empty() && line.back() == delimiter) cells.push_back("");
        if (expected_cols == 0) {
            expected_cols = cells.size();
            if (label_column >= expected_cols)
                throw SpecError("delimited: label column out of range");
        } else if (cells.size() != expected_cols) {
            throw ParseError("delimited: ragged row at line " + std::to_string(lineno));
        }
        Vec feat;
        feat.reserve(expected_cols - 1);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_column) continue;
            try {
                std::size_t used = 0;
                const double v = std::stod(cells[c], &used);
                if (used != cells[c].size())
                    throw std::invalid_argument("trailing junk");
                feat.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("delimited: unparseable cell at line " +
                                 std::to_string(lineno) + ", column " +
                                 std::to_string(c + 1));
            }
        }
        const std::string& tag = cells[label_column];
        auto it = class_ids.find(tag);
        if (it == class_ids.end()) it = class_ids.emplace(tag, next_class++).first;
        labels.push_back(it->second);
        rows.push_back(std::move(feat));
    }
    if (rows.empty()) throw FormatError("delimited: no data rows in " + path);

    Dataset out;
    out.features = Matrix::from_rows(rows);
    out.labels = std::move(labels);
    out.num_classes = next_class;
    out.name = path;
    out.validate();
    return out;
}

Dataset make_xor() {
    Dataset d;
    d.features = Matrix::from_rows({{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}});
    d.labels = {0, 1, 1, 0};
    d.num_classes = 2;
    d.name = "xor";
    return d;
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw SpecError("split: test fraction must lie strictly inside (0,1)");
    const std::size_t n = data.size();
    std::size_t n_test = std::size_t(std::llround(spec.test_fraction * double(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(idx);

    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + n_test);
    std::vector<std::size_t> train_idx(idx.begin() + n_test, idx.end());
    return {data.subset(train_idx, "/train"), data.subset(test_idx, "/test")};
}

} // namespace diqnn

// ingest.hpp
// Datasets for the graph experiments: MNIST in IDX format, Gaussian blobs and
// seeded label subsampling, plus a small binary cache.
#pragma once

#include <accelgl/graph.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace accelgl {

struct DatasetMeta {
    std::string source;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> parameters;
};

struct Dataset {
    PointMatrix points;       // N x d
    std::vector<int> labels;  // N entries in [0, k)
    int k = 0;
    DatasetMeta meta;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    void validate() const {
        if (static_cast<Eigen::Index>(labels.size()) != points.rows())
            throw std::invalid_argument("dataset has " + std::to_string(points.rows()) + " points but " +
                                        std::to_string(labels.size()) + " labels");
        for (int l : labels)
            if (l < 0 || l >= k) throw std::invalid_argument("dataset label " + std::to_string(l) + " out of range");
    }
};

class IdxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IdxMagicError : public IdxError {
public:
    using IdxError::IdxError;
};

class IdxTruncatedError : public IdxError {
public:
    using IdxError::IdxError;
};

class IdxCountMismatchError : public IdxError {
public:
    using IdxError::IdxError;
};

inline constexpr std::uint32_t idx_images_magic = 2051;  // 00 00 08 03
inline constexpr std::uint32_t idx_labels_magic = 2049;  // 00 00 08 01

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return std::vector<unsigned char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off, const std::string& path) {
    if (off + 4 > b.size()) throw IdxTruncatedError("IDX header truncated in " + path);
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

inline void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>((v >> s) & 0xff));
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

/// Reads an IDX image/label pair.  Pixels are scaled by 1/255 and every image
/// is flattened row-major.  With max_count > 0 only the first max_count
/// images are kept.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                              Eigen::Index max_count = 0) {
    const auto img = detail::read_file(images_path);
    const auto lab = detail::read_file(labels_path);
    const std::uint32_t im = detail::read_be32(img, 0, images_path);
    if (im != idx_images_magic)
        throw IdxMagicError("bad IDX image magic " + std::to_string(im) + " in " + images_path);
    const std::uint32_t lm = detail::read_be32(lab, 0, labels_path);
    if (lm != idx_labels_magic)
        throw IdxMagicError("bad IDX label magic " + std::to_string(lm) + " in " + labels_path);
    const std::uint32_t count = detail::read_be32(img, 4, images_path);
    const std::uint32_t rows = detail::read_be32(img, 8, images_path);
    const std::uint32_t cols = detail::read_be32(img, 12, images_path);
    const std::uint32_t lcount = detail::read_be32(lab, 4, labels_path);
    if (count != lcount)
        throw IdxCountMismatchError("IDX files disagree: " + std::to_string(count) + " images but " +
                                    std::to_string(lcount) + " labels");
    const std::size_t d = std::size_t{rows} * cols;
    if (img.size() < 16 + std::size_t{count} * d) throw IdxTruncatedError("IDX image data truncated in " + images_path);
    if (lab.size() < 8 + std::size_t{count}) throw IdxTruncatedError("IDX label data truncated in " + labels_path);

    Eigen::Index n = count;
    if (max_count > 0) n = std::min<Eigen::Index>(n, max_count);
    Dataset ds;
    ds.points.resize(n, static_cast<Eigen::Index>(d));
    ds.labels.resize(static_cast<std::size_t>(n));
    int max_label = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const unsigned char* px = img.data() + 16 + static_cast<std::size_t>(i) * d;
        for (std::size_t j = 0; j < d; ++j) ds.points(i, static_cast<Eigen::Index>(j)) = px[j] / 255.0;
        ds.labels[i] = lab[8 + static_cast<std::size_t>(i)];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.k = std::max(10, max_label + 1);
    ds.meta.source = "idx:" + images_path;
    ds.meta.parameters["rows"] = std::to_string(rows);
    ds.meta.parameters["cols"] = std::to_string(cols);
    ds.meta.parameters["count"] = std::to_string(n);
    return ds;
}

/// Pixels must lie in [0, 1]; they are stored as round(255 x).
inline void write_idx_images(const std::string& path, const PointMatrix& points, std::uint32_t rows,
                             std::uint32_t cols) {
    if (static_cast<Eigen::Index>(rows) * cols != points.cols())
        throw std::invalid_argument("image shape does not match the point dimension");
    std::vector<unsigned char> b;
    b.reserve(16 + static_cast<std::size_t>(points.size()));
    detail::put_be32(b, idx_images_magic);
    detail::put_be32(b, static_cast<std::uint32_t>(points.rows()));
    detail::put_be32(b, rows);
    detail::put_be32(b, cols);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            const double x = points(i, j);
            if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("IDX pixel outside [0, 1]");
            b.push_back(static_cast<unsigned char>(std::lround(255.0 * x)));
        }
    detail::write_file(path, b);
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::vector<unsigned char> b;
    b.reserve(8 + labels.size());
    detail::put_be32(b, idx_labels_magic);
    detail::put_be32(b, static_cast<std::uint32_t>(labels.size()));
    for (int l : labels) {
        if (l < 0 || l > 255) throw std::invalid_argument("IDX label outside [0, 255]");
        b.push_back(static_cast<unsigned char>(l));
    }
    detail::write_file(path, b);
}

namespace detail {
inline std::vector<std::array<double, 2>> draw_centres(std::mt19937_64& rng, int k, double box_half_width) {
    std::uniform_real_distribution<double> box(-box_half_width, box_half_width);
    std::vector<std::array<double, 2>> centres(static_cast<std::size_t>(k));
    for (auto& c : centres) {
        c[0] = box(rng);
        c[1] = box(rng);
    }
    return centres;
}
}  // namespace detail

/// The centres make_blobs draws for this seed.
inline std::vector<std::array<double, 2>> blob_centres(int k, double box_half_width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return detail::draw_centres(rng, k, box_half_width);
}

/// Smallest pairwise distance between the centres make_blobs draws.
inline double min_centre_separation(int k, double box_half_width, std::uint64_t seed) {
    const auto c = blob_centres(k, box_half_width, seed);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a + 1; b < c.size(); ++b)
            best = std::min(best, std::hypot(c[a][0] - c[b][0], c[a][1] - c[b][1]));
    return best;
}

/// k centres uniform in [-box, box]^2; point i belongs to class i mod k and is
/// drawn from an isotropic Gaussian of standard deviation `stddev` around its
/// centre.
inline Dataset make_blobs(Eigen::Index n, int k, double stddev, double box_half_width, std::uint64_t seed) {
    if (k < 1 || n < k) throw std::invalid_argument("make_blobs needs n >= k >= 1");
    if (!(stddev >= 0.0) || !(box_half_width >= 0.0)) throw std::invalid_argument("make_blobs needs non-negative scales");
    std::mt19937_64 rng(seed);
    const auto centres = detail::draw_centres(rng, k, box_half_width);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset ds;
    ds.k = k;
    ds.points.resize(n, 2);
    ds.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = static_cast<int>(i % k);
        ds.labels[i] = c;
        for (int a = 0; a < 2; ++a) ds.points(i, a) = centres[c][a] + stddev * noise(rng);
    }
    ds.meta.source = "blobs";
    ds.meta.seed = seed;
    ds.meta.parameters["n"] = std::to_string(n);
    ds.meta.parameters["k"] = std::to_string(k);
    ds.meta.parameters["std"] = std::to_string(stddev);
    ds.meta.parameters["box_half_width"] = std::to_string(box_half_width);
    return ds;
}

/// round(fraction * n) distinct indices drawn uniformly without replacement
/// (partial Fisher-Yates), returned in increasing order.
inline std::vector<Eigen::Index> sample_labels(Eigen::Index n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("label fraction must lie in (0, 1]");
    const auto m = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
    if (m < 1) throw std::invalid_argument("label sample is empty");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (Eigen::Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(static_cast<std::size_t>(m));
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::vector<Eigen::Index> sample_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
    return sample_labels(ds.size(), fraction, seed);
}

/// First m points in file order.
inline Dataset take_first(const Dataset& ds, Eigen::Index m) {
    if (m < 1 || m > ds.size()) throw std::invalid_argument("subset size out of range");
    Dataset out = ds;
    out.points = ds.points.topRows(m);
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + m);
    out.meta.parameters["count"] = std::to_string(m);
    return out;
}

inline constexpr unsigned char dataset_cache_version = 1;

/// Binary cache: version byte, then N, d, k as little-endian uint64, then the
/// N x d doubles row-major, then N int32 labels.
inline void save_dataset_cache(const std::string& path, const Dataset& ds) {
    ds.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset cache " + path);
    out.put(static_cast<char>(dataset_cache_version));
    auto put64 = [&](std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) out.put(static_cast<char>((v >> s) & 0xff));
    };
    put64(static_cast<std::uint64_t>(ds.size()));
    put64(static_cast<std::uint64_t>(ds.dim()));
    put64(static_cast<std::uint64_t>(ds.k));
    out.write(reinterpret_cast<const char*>(ds.points.data()), static_cast<std::streamsize>(sizeof(double) * ds.points.size()));
    for (int l : ds.labels) {
        const auto v = static_cast<std::int32_t>(l);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    if (!out) throw std::runtime_error("failed writing dataset cache " + path);
}

inline Dataset load_dataset_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset cache " + path);
    const int version = in.get();
    if (version != dataset_cache_version)
        throw std::runtime_error("unsupported dataset cache version " + std::to_string(version) + " in " + path);
    auto get64 = [&]() {
        std::uint64_t v = 0;
        for (int s = 0; s < 64; s += 8) {
            const int c = in.get();
            if (c == EOF) throw std::runtime_error("dataset cache header truncated in " + path);
            v |= static_cast<std::uint64_t>(c) << s;
        }
        return v;
    };
    const auto n = static_cast<Eigen::Index>(get64());
    const auto d = static_cast<Eigen::Index>(get64());
    Dataset ds;
    ds.k = static_cast<int>(get64());
    ds.points.resize(n, d);
    in.read(reinterpret_cast<char*>(ds.points.data()), static_cast<std::streamsize>(sizeof(double) * ds.points.size()));
    ds.labels.resize(static_cast<std::size_t>(n));
    for (auto& l : ds.labels) {
        std::int32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof v);
        l = v;
    }
    if (!in) throw std::runtime_error("dataset cache truncated in " + path);
    ds.meta.source = "cache:" + path;
    ds.validate();
    return ds;
}

}  // namespace accelgl
